#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "schelix/gate.hpp"
#include "schelix/graph_encoder.hpp"
#include "schelix/metrics.hpp"
#include "schelix/partition.hpp"
#include "schelix/preprocess.hpp"
#include "schelix/trainer.hpp"

namespace schelix {

// Sectioned key=value text. Unknown keys are rejected at RunConfig parse
// time so typos fail loudly.
struct ConfigFile {
    std::map<std::string, std::map<std::string, std::string>> sections;

    static ConfigFile parse_file(const std::filesystem::path& path);
    static ConfigFile parse_string(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;
    std::string get_str(const std::string& section, const std::string& key,
                        const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;
    int get_int(const std::string& section, const std::string& key, int fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
};

struct RunConfig {
    SyntheticSpec synth;
    PreprocessConfig pre;
    SelectorConfig selector;
    GateConfig gate;
    EncoderConfig encoder;
    double graph_tau = 0.1;
    int graph_k_top = 22;
    int graph_d_a = 32;
    TrainConfig train;
    EvalConfig eval;

    bool random_split = false;
    bool linear_encoder = false;

    std::string matrix_path, labels_path;
    std::string input_layer = "raw";  // "raw" runs QC+normalization first
    std::string out_dir = "out";
    uint64_t seed = 0;
};

// Missing sections/keys keep their defaults; an empty config yields the
// synthetic end-to-end demo setup.
RunConfig parse_run_config(const ConfigFile& f);

// Applies the seed to every per-module seed field.
void apply_seed(RunConfig& cfg, uint64_t seed);

}  // namespace schelix
