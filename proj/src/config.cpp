#include "schelix/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace schelix {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text) {
    ConfigFile f;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            f.sections[section];
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": empty key");
        f.sections[section][key] = val;
    }
    return f;
}

ConfigFile ConfigFile::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    auto it = sections.find(section);
    return it != sections.end() && it->second.count(key) > 0;
}

std::string ConfigFile::get_str(const std::string& section, const std::string& key,
                                const std::string& fallback) const {
    if (!has(section, key)) return fallback;
    return sections.at(section).at(key);
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& v = sections.at(section).at(key);
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size())
        throw std::invalid_argument("config " + section + "." + key + ": not a number: " + v);
    return d;
}

int ConfigFile::get_int(const std::string& section, const std::string& key,
                        int fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& v = sections.at(section).at(key);
    size_t pos = 0;
    int i = std::stoi(v, &pos);
    if (pos != v.size())
        throw std::invalid_argument("config " + section + "." + key +
                                    ": not an integer: " + v);
    return i;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& v = sections.at(section).at(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config " + section + "." + key + ": not a boolean: " + v);
}

namespace {

const std::map<std::string, std::set<std::string>> kKnownKeys = {
    {"synthetic",
     {"n_cells", "n_genes", "n_types", "n_domains", "n_variant_genes", "batch_shift_scale",
      "noise_scale", "seed"}},
    {"preprocess",
     {"min_genes_per_cell", "min_cells_per_gene", "max_mito_pct", "target_sum", "n_hvgs",
      "mixup_k", "mito_prefix"}},
    {"selector",
     {"tau_dom", "tau_str", "n_pcs", "n_neighbors", "leiden_resolution", "epsilon", "seed"}},
    {"gate",
     {"enabled", "low_res", "high_res", "strength", "w_low", "w_high", "min_cells", "w_mu",
      "w_sigma", "w_v", "epsilon", "n_pcs", "n_neighbors", "seed"}},
    {"encoder", {"n_scales", "xi1", "xi2", "m", "d_out", "hidden"}},
    {"graph", {"tau", "k_top", "d_a", "rebuild_every"}},
    {"train",
     {"total_steps", "t_warm", "align_only_steps", "lambda_rec_var", "lambda_rec_inv",
      "lambda_rec_fused", "lambda_align", "lambda_conn_var", "lambda_conn_inv",
      "lambda_conn_fused", "lambda_kd", "k_proto", "conf_threshold", "conf_pow",
      "ema_momentum", "assign_temp", "lr", "clip_norm", "weight_decay", "batch_size", "seed",
      "refine_temperature", "alpha_init", "alpha_max", "fuser_rank", "lambda_delta"}},
    {"eval", {"pca_cap", "knn_k", "oc_k", "oc_perturb_fraction", "oc_shift", "resolutions",
              "seed"}},
    {"ablation",
     {"random_split", "no_gate", "no_align", "no_refine", "simple_fusion", "no_kd", "no_conn",
      "linear_encoder"}},
    {"paths", {"matrix", "labels", "layer", "out_dir"}},
    {"run", {"seed"}},
};

void check_known(const ConfigFile& f) {
    for (const auto& [section, kv] : f.sections) {
        auto it = kKnownKeys.find(section);
        if (it == kKnownKeys.end())
            throw std::invalid_argument("unknown config section: " + section);
        for (const auto& [key, val] : kv)
            if (!it->second.count(key))
                throw std::invalid_argument("unknown config key: " + section + "." + key);
    }
}

}  // namespace

RunConfig parse_run_config(const ConfigFile& f) {
    check_known(f);
    RunConfig c;

    c.synth.n_cells = f.get_int("synthetic", "n_cells", c.synth.n_cells);
    c.synth.n_genes = f.get_int("synthetic", "n_genes", c.synth.n_genes);
    c.synth.n_types = f.get_int("synthetic", "n_types", c.synth.n_types);
    c.synth.n_domains = f.get_int("synthetic", "n_domains", c.synth.n_domains);
    c.synth.n_variant_genes = f.get_int("synthetic", "n_variant_genes", c.synth.n_variant_genes);
    c.synth.batch_shift_scale =
        f.get_double("synthetic", "batch_shift_scale", c.synth.batch_shift_scale);
    c.synth.noise_scale = f.get_double("synthetic", "noise_scale", c.synth.noise_scale);
    c.synth.seed = static_cast<uint64_t>(f.get_int("synthetic", "seed", 0));

    c.pre.min_genes_per_cell = f.get_int("preprocess", "min_genes_per_cell", c.pre.min_genes_per_cell);
    c.pre.min_cells_per_gene = f.get_int("preprocess", "min_cells_per_gene", c.pre.min_cells_per_gene);
    c.pre.max_mito_pct = f.get_double("preprocess", "max_mito_pct", c.pre.max_mito_pct);
    c.pre.target_sum = f.get_double("preprocess", "target_sum", c.pre.target_sum);
    c.pre.n_hvgs = f.get_int("preprocess", "n_hvgs", c.pre.n_hvgs);
    c.pre.mixup_k = f.get_int("preprocess", "mixup_k", c.pre.mixup_k);
    c.pre.mito_prefix = f.get_str("preprocess", "mito_prefix", c.pre.mito_prefix);

    c.selector.tau_dom = f.get_double("selector", "tau_dom", c.selector.tau_dom);
    c.selector.tau_str = f.get_double("selector", "tau_str", c.selector.tau_str);
    c.selector.n_pcs = f.get_int("selector", "n_pcs", c.selector.n_pcs);
    c.selector.n_neighbors = f.get_int("selector", "n_neighbors", c.selector.n_neighbors);
    c.selector.leiden_resolution =
        f.get_double("selector", "leiden_resolution", c.selector.leiden_resolution);
    c.selector.epsilon = f.get_double("selector", "epsilon", c.selector.epsilon);
    c.selector.leiden_seed = static_cast<uint64_t>(f.get_int("selector", "seed", 0));

    c.gate.enabled = f.get_bool("gate", "enabled", c.gate.enabled);
    c.gate.low_res = f.get_double("gate", "low_res", c.gate.low_res);
    c.gate.high_res = f.get_double("gate", "high_res", c.gate.high_res);
    c.gate.strength = f.get_double("gate", "strength", c.gate.strength);
    c.gate.w_low = f.get_double("gate", "w_low", c.gate.w_low);
    c.gate.w_high = f.get_double("gate", "w_high", c.gate.w_high);
    c.gate.min_cells = f.get_int("gate", "min_cells", c.gate.min_cells);
    c.gate.w_mu = f.get_double("gate", "w_mu", c.gate.w_mu);
    c.gate.w_sigma = f.get_double("gate", "w_sigma", c.gate.w_sigma);
    c.gate.w_v = f.get_double("gate", "w_v", c.gate.w_v);
    c.gate.epsilon = f.get_double("gate", "epsilon", c.gate.epsilon);
    c.gate.n_pcs = f.get_int("gate", "n_pcs", c.gate.n_pcs);
    c.gate.n_neighbors = f.get_int("gate", "n_neighbors", c.gate.n_neighbors);
    c.gate.seed = static_cast<uint64_t>(f.get_int("gate", "seed", 0));

    int n_scales = f.get_int("encoder", "n_scales", static_cast<int>(c.encoder.scales.size()));
    if (n_scales < 1) throw std::invalid_argument("encoder.n_scales must be >= 1");
    c.encoder.scales.clear();
    for (int s = 1; s <= n_scales; ++s) c.encoder.scales.push_back(s);
    c.encoder.xi1 = f.get_double("encoder", "xi1", c.encoder.xi1);
    c.encoder.xi2 = f.get_double("encoder", "xi2", c.encoder.xi2);
    c.encoder.m = f.get_int("encoder", "m", n_scales);
    c.encoder.d_out = f.get_int("encoder", "d_out", static_cast<int>(c.encoder.d_out));
    c.encoder.hidden = f.get_int("encoder", "hidden", static_cast<int>(c.encoder.hidden));

    c.graph_tau = f.get_double("graph", "tau", c.graph_tau);
    c.graph_k_top = f.get_int("graph", "k_top", c.graph_k_top);
    c.graph_d_a = f.get_int("graph", "d_a", c.graph_d_a);
    c.train.graph_rebuild_every =
        f.get_int("graph", "rebuild_every", c.train.graph_rebuild_every);

    TrainConfig& t = c.train;
    t.total_steps = f.get_int("train", "total_steps", t.total_steps);
    t.t_warm = f.get_int("train", "t_warm", t.t_warm);
    t.align_only_steps = f.get_int("train", "align_only_steps", t.align_only_steps);
    t.lambda_rec_var = f.get_double("train", "lambda_rec_var", t.lambda_rec_var);
    t.lambda_rec_inv = f.get_double("train", "lambda_rec_inv", t.lambda_rec_inv);
    t.lambda_rec_fused = f.get_double("train", "lambda_rec_fused", t.lambda_rec_fused);
    t.lambda_align = f.get_double("train", "lambda_align", t.lambda_align);
    t.lambda_conn_var = f.get_double("train", "lambda_conn_var", t.lambda_conn_var);
    t.lambda_conn_inv = f.get_double("train", "lambda_conn_inv", t.lambda_conn_inv);
    t.lambda_conn_fused = f.get_double("train", "lambda_conn_fused", t.lambda_conn_fused);
    t.lambda_kd = f.get_double("train", "lambda_kd", t.lambda_kd);
    t.k_proto = f.get_int("train", "k_proto", t.k_proto);
    t.conf_threshold = f.get_double("train", "conf_threshold", t.conf_threshold);
    t.conf_pow = f.get_double("train", "conf_pow", t.conf_pow);
    t.ema_momentum = f.get_double("train", "ema_momentum", t.ema_momentum);
    t.assign_temp = f.get_double("train", "assign_temp", t.assign_temp);
    t.lr = f.get_double("train", "lr", t.lr);
    t.clip_norm = f.get_double("train", "clip_norm", t.clip_norm);
    t.weight_decay = f.get_double("train", "weight_decay", t.weight_decay);
    t.batch_size = f.get_int("train", "batch_size", t.batch_size);
    t.seed = static_cast<uint64_t>(f.get_int("train", "seed", 0));
    t.refine_temperature = f.get_double("train", "refine_temperature", t.refine_temperature);
    t.alpha_init = f.get_double("train", "alpha_init", t.alpha_init);
    t.alpha_max = f.get_double("train", "alpha_max", t.alpha_max);
    t.fuser_rank = f.get_int("train", "fuser_rank", t.fuser_rank);
    t.lambda_delta = f.get_double("train", "lambda_delta", t.lambda_delta);

    c.eval.pca_cap = f.get_int("eval", "pca_cap", c.eval.pca_cap);
    c.eval.knn_k = f.get_int("eval", "knn_k", c.eval.knn_k);
    c.eval.oc_k = f.get_int("eval", "oc_k", c.eval.oc_k);
    c.eval.oc_perturb_fraction =
        f.get_double("eval", "oc_perturb_fraction", c.eval.oc_perturb_fraction);
    c.eval.oc_shift = f.get_double("eval", "oc_shift", c.eval.oc_shift);
    c.eval.seed = static_cast<uint64_t>(f.get_int("eval", "seed", 0));
    if (f.has("eval", "resolutions")) {
        c.eval.leiden_resolutions.clear();
        std::istringstream ss(f.get_str("eval", "resolutions", ""));
        std::string tok;
        while (std::getline(ss, tok, ','))
            c.eval.leiden_resolutions.push_back(std::stod(trim(tok)));
    }

    c.random_split = f.get_bool("ablation", "random_split", false);
    c.linear_encoder = f.get_bool("ablation", "linear_encoder", false);
    c.gate.enabled = !f.get_bool("ablation", "no_gate", !c.gate.enabled);
    t.no_align = f.get_bool("ablation", "no_align", false);
    t.no_refine = f.get_bool("ablation", "no_refine", false);
    t.simple_fusion = f.get_bool("ablation", "simple_fusion", false);
    t.no_kd = f.get_bool("ablation", "no_kd", false);
    t.no_conn = f.get_bool("ablation", "no_conn", false);
    c.encoder.linear = c.linear_encoder;

    c.matrix_path = f.get_str("paths", "matrix", "");
    c.labels_path = f.get_str("paths", "labels", "");
    c.input_layer = f.get_str("paths", "layer", c.input_layer);
    if (c.input_layer != "raw" && c.input_layer != "lognorm")
        throw std::invalid_argument("paths.layer must be raw or lognorm");
    c.out_dir = f.get_str("paths", "out_dir", c.out_dir);

    if (f.has("run", "seed")) apply_seed(c, static_cast<uint64_t>(f.get_int("run", "seed", 0)));
    return c;
}

void apply_seed(RunConfig& cfg, uint64_t seed) {
    cfg.seed = seed;
    cfg.synth.seed = seed;
    cfg.selector.leiden_seed = seed;
    cfg.gate.seed = seed;
    cfg.train.seed = seed;
    cfg.eval.seed = seed;
}

}  // namespace schelix
