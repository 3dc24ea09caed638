#pragma once

#include <cstdint>
#include <random>

#include "schelix/types.hpp"

namespace schelix {

// Seeded RNG used everywhere determinism matters. One instance per logical
// task; never shared across threads.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : gen_(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }
    int uniform_int(int lo, int hi) {  // inclusive
        return std::uniform_int_distribution<int>(lo, hi)(gen_);
    }

    Mat normal_matrix(Eigen::Index r, Eigen::Index c, double scale = 1.0) {
        Mat m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * normal();
        return m;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        std::shuffle(v.begin(), v.end(), gen_);
    }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

}  // namespace schelix
