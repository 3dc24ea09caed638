#include "schelix/leiden.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <unordered_map>

#include "schelix/linalg.hpp"
#include "schelix/rng.hpp"

namespace schelix {

namespace {

struct WGraph {
    int n = 0;
    std::vector<std::vector<std::pair<int, double>>> adj;  // no self edges here
    std::vector<double> self_loop;
    std::vector<double> strength;  // k_i = sum_j w_ij + 2*self
    double two_m = 0;
};

WGraph make_graph(const std::vector<std::vector<int>>& adj) {
    WGraph g;
    g.n = static_cast<int>(adj.size());
    g.adj.resize(g.n);
    g.self_loop.assign(g.n, 0.0);
    g.strength.assign(g.n, 0.0);
    for (int i = 0; i < g.n; ++i)
        for (int j : adj[i])
            if (j != i) g.adj[i].push_back({j, 1.0});
    for (int i = 0; i < g.n; ++i) {
        for (auto& [j, w] : g.adj[i]) g.strength[i] += w;
        g.strength[i] += 2.0 * g.self_loop[i];
        g.two_m += g.strength[i];
    }
    return g;
}

// One pass of greedy local moving; returns true if any node moved.
bool local_move(const WGraph& g, double gamma, std::vector<int>& comm, Rng& rng) {
    if (g.two_m <= 0) return false;
    const double inv2m = 1.0 / g.two_m;
    std::vector<double> comm_strength(g.n, 0.0);
    for (int i = 0; i < g.n; ++i) comm_strength[comm[i]] += g.strength[i];

    std::vector<int> order(g.n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    bool moved_any = false;
    bool improved = true;
    int rounds = 0;
    std::unordered_map<int, double> links;
    while (improved && rounds < 32) {
        improved = false;
        ++rounds;
        for (int i : order) {
            const int cur = comm[i];
            links.clear();
            links[cur] = 0.0;
            for (auto& [j, w] : g.adj[i]) links[comm[j]] += w;
            comm_strength[cur] -= g.strength[i];

            int best = cur;
            double best_gain = links[cur] * inv2m * 2.0 -
                               2.0 * gamma * g.strength[i] * comm_strength[cur] * inv2m * inv2m;
            for (auto& [c, w] : links) {
                double gain =
                    w * inv2m * 2.0 - 2.0 * gamma * g.strength[i] * comm_strength[c] * inv2m * inv2m;
                if (gain > best_gain + 1e-12 ||
                    (std::abs(gain - best_gain) <= 1e-12 && c < best)) {
                    best = c;
                    best_gain = gain;
                }
            }
            comm_strength[best] += g.strength[i];
            if (best != cur) {
                comm[i] = best;
                improved = true;
                moved_any = true;
            }
        }
    }
    return moved_any;
}

std::vector<int> relabel_contiguous(std::vector<int>& labels) {
    std::unordered_map<int, int> map;
    for (int& l : labels) {
        auto it = map.find(l);
        if (it == map.end()) {
            int id = static_cast<int>(map.size());
            map[l] = id;
            l = id;
        } else {
            l = it->second;
        }
    }
    return labels;
}

// Leiden-style connectivity guard: split each community into connected
// components of its induced subgraph.
void split_disconnected(const WGraph& g, std::vector<int>& comm) {
    std::vector<int> out(g.n, -1);
    int next = 0;
    for (int i = 0; i < g.n; ++i) {
        if (out[i] != -1) continue;
        int c = comm[i];
        std::queue<int> q;
        q.push(i);
        out[i] = next;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (auto& [v, w] : g.adj[u])
                if (comm[v] == c && out[v] == -1) {
                    out[v] = next;
                    q.push(v);
                }
        }
        ++next;
    }
    comm = out;
}

WGraph aggregate(const WGraph& g, const std::vector<int>& comm, int n_comm) {
    WGraph h;
    h.n = n_comm;
    h.adj.resize(n_comm);
    h.self_loop.assign(n_comm, 0.0);
    h.strength.assign(n_comm, 0.0);
    std::vector<std::unordered_map<int, double>> acc(n_comm);
    for (int i = 0; i < g.n; ++i) {
        h.self_loop[comm[i]] += g.self_loop[i];
        for (auto& [j, w] : g.adj[i]) {
            if (comm[j] == comm[i]) {
                if (i < j) h.self_loop[comm[i]] += w;
            } else {
                acc[comm[i]][comm[j]] += w;
            }
        }
    }
    for (int c = 0; c < n_comm; ++c)
        for (auto& [d, w] : acc[c]) h.adj[c].push_back({d, w});
    for (int c = 0; c < n_comm; ++c) {
        for (auto& [d, w] : h.adj[c]) h.strength[c] += w;
        h.strength[c] += 2.0 * h.self_loop[c];
        h.two_m += h.strength[c];
    }
    return h;
}

}  // namespace

std::vector<int> leiden_cluster(const std::vector<std::vector<int>>& adj, double resolution,
                                uint64_t seed) {
    const int n = static_cast<int>(adj.size());
    if (n == 0) return {};
    Rng rng(seed);

    WGraph level = make_graph(adj);
    std::vector<std::vector<int>> members(n);
    for (int i = 0; i < n; ++i) members[i] = {i};

    for (int iter = 0; iter < 32; ++iter) {
        std::vector<int> c(level.n);
        std::iota(c.begin(), c.end(), 0);
        bool moved = local_move(level, resolution, c, rng);
        split_disconnected(level, c);
        relabel_contiguous(c);
        int n_comm = *std::max_element(c.begin(), c.end()) + 1;
        // Project to leaf labels.
        std::vector<std::vector<int>> new_members(n_comm);
        for (int i = 0; i < level.n; ++i)
            for (int leaf : members[i]) new_members[c[i]].push_back(leaf);
        members = std::move(new_members);
        if (!moved || n_comm == level.n) break;
        level = aggregate(level, c, n_comm);
    }

    std::vector<int> out(n, 0);
    for (size_t cid = 0; cid < members.size(); ++cid)
        for (int leaf : members[cid]) out[leaf] = static_cast<int>(cid);
    relabel_contiguous(out);
    return out;
}

std::vector<int> pseudo_cluster_embedding(const Mat& x, int n_pcs, int n_neighbors,
                                          double resolution, uint64_t seed) {
    if (x.rows() < n_neighbors + 1)
        throw std::invalid_argument("pseudo_cluster: N must exceed n_neighbors");
    Mat p = pca_project(x, n_pcs);
    auto adj = symmetric_knn_graph(p, n_neighbors);
    return leiden_cluster(adj, resolution, seed);
}

}  // namespace schelix
