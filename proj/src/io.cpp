#include "schelix/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace schelix {

namespace {

std::ifstream open_in(const std::filesystem::path& p) {
    std::ifstream f(p);
    if (!f) throw std::runtime_error("cannot open file: " + p.string());
    return f;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write file: " + p.string());
    return f;
}

double parse_double(const std::string& tok, const std::filesystem::path& p) {
    size_t pos = 0;
    double v;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error("non-numeric token '" + tok + "' in " + p.string());
    }
    if (pos != tok.size())
        throw std::runtime_error("non-numeric token '" + tok + "' in " + p.string());
    return v;
}

Mat load_matrix_csv(const std::filesystem::path& path) {
    auto f = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) row.push_back(parse_double(tok, path));
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("ragged CSV row in " + path.string());
        rows.push_back(std::move(row));
    }
    Mat m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

}  // namespace

Mat load_matrix(const std::filesystem::path& path) {
    if (path.extension() == ".csv") return load_matrix_csv(path);
    auto f = open_in(path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty matrix file: " + path.string());
    std::stringstream hs(line);
    long n = -1, g = -1, nnz = -1;
    if (!(hs >> n >> g >> nnz) || n < 0 || g < 0 || nnz < 0)
        throw std::runtime_error("malformed triplet header in " + path.string());
    Mat m = Mat::Zero(n, g);
    long seen = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string rt, ct, vt;
        if (!(ss >> rt >> ct >> vt))
            throw std::runtime_error("malformed triplet line in " + path.string());
        long r = static_cast<long>(parse_double(rt, path));
        long c = static_cast<long>(parse_double(ct, path));
        double v = parse_double(vt, path);
        if (r < 0 || r >= n || c < 0 || c >= g)
            throw std::runtime_error("triplet index out of range in " + path.string());
        m(r, c) = v;
        ++seen;
    }
    if (seen != nnz)
        throw std::runtime_error("triplet count does not match header in " + path.string());
    return m;
}

void save_matrix_triplets(const Mat& m, const std::filesystem::path& path) {
    auto f = open_out(path);
    long nnz = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (m(i, j) != 0.0) ++nnz;
    f << m.rows() << ' ' << m.cols() << ' ' << nnz << '\n';
    f.precision(17);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (m(i, j) != 0.0) f << i << ' ' << j << ' ' << m(i, j) << '\n';
}

LabelTable load_labels(const std::filesystem::path& path) {
    auto f = open_in(path);
    LabelTable t;
    std::string line;
    bool any_type = false;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, '\t')) cols.push_back(tok);
        if (cols.size() < 2) throw std::runtime_error("labels row needs cell_id and domain: " + line);
        t.cell_ids.push_back(cols[0]);
        t.domains.push_back(cols[1]);
        std::string ct = cols.size() > 2 ? cols[2] : "";
        if (!ct.empty()) any_type = true;
        t.cell_types.push_back(ct);
    }
    if (!any_type) t.cell_types.clear();
    return t;
}

void save_labels(const ExpressionDataset& d, const std::filesystem::path& path) {
    auto f = open_out(path);
    for (Eigen::Index i = 0; i < d.n_cells(); ++i) {
        f << d.cell_ids[i] << '\t' << d.domains[i];
        if (d.has_cell_types()) f << '\t' << d.cell_types[i];
        f << '\n';
    }
}

ExpressionDataset load_dataset(const std::filesystem::path& matrix_path,
                               const std::filesystem::path& labels_path, Layer layer) {
    ExpressionDataset d;
    d.values = load_matrix(matrix_path);
    LabelTable t = load_labels(labels_path);
    if (static_cast<Eigen::Index>(t.cell_ids.size()) != d.values.rows())
        throw std::runtime_error("labels file has " + std::to_string(t.cell_ids.size()) +
                                 " rows for " + std::to_string(d.values.rows()) + " cells");
    d.cell_ids = std::move(t.cell_ids);
    d.domains = std::move(t.domains);
    d.cell_types = std::move(t.cell_types);
    d.layer = layer;
    for (Eigen::Index j = 0; j < d.values.cols(); ++j) d.gene_ids.push_back("g" + std::to_string(j));
    d.validate();
    return d;
}

void save_embedding(const EmbeddingMatrix& e, const std::filesystem::path& path) {
    e.validate();
    auto f = open_out(path);
    f << e.values.rows() << ' ' << e.values.cols() << ' ' << to_string(e.source) << '\n';
    f.precision(17);
    for (Eigen::Index i = 0; i < e.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < e.values.cols(); ++j) {
            if (j) f << ' ';
            f << e.values(i, j);
        }
        f << '\n';
    }
}

EmbeddingMatrix load_embedding(const std::filesystem::path& path) {
    auto f = open_in(path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty embedding file: " + path.string());
    std::stringstream hs(line);
    long n = -1, d = -1;
    std::string src = "external";
    if (!(hs >> n >> d) || n < 0 || d < 0)
        throw std::runtime_error("malformed embedding header in " + path.string());
    hs >> src;
    EmbeddingMatrix e;
    e.source = embedding_source_from_string(src);
    e.values.resize(n, d);
    for (long i = 0; i < n; ++i) {
        if (!std::getline(f, line))
            throw std::runtime_error("embedding file truncated: " + path.string());
        std::stringstream ss(line);
        std::string tok;
        for (long j = 0; j < d; ++j) {
            if (!(ss >> tok)) throw std::runtime_error("short embedding row in " + path.string());
            e.values(i, j) = parse_double(tok, path);
        }
    }
    e.validate();
    return e;
}

namespace {
const char* kReportKeys[] = {"ari_best", "nmi_best",   "asw_ct",      "asw_batch",
                             "gc",       "bio_mean",   "overall",     "oc_hd_all",
                             "oc_hd_focus", "oc_norm", "leiden_resolution_at_best"};

double* report_field(MetricsReport& r, const std::string& key) {
    if (key == "ari_best") return &r.ari_best;
    if (key == "nmi_best") return &r.nmi_best;
    if (key == "asw_ct") return &r.asw_ct;
    if (key == "asw_batch") return &r.asw_batch;
    if (key == "gc") return &r.gc;
    if (key == "bio_mean") return &r.bio_mean;
    if (key == "overall") return &r.overall;
    if (key == "oc_hd_all") return &r.oc_hd_all;
    if (key == "oc_hd_focus") return &r.oc_hd_focus;
    if (key == "oc_norm") return &r.oc_norm;
    if (key == "leiden_resolution_at_best") return &r.leiden_resolution_at_best;
    return nullptr;
}
}  // namespace

void save_report(const MetricsReport& r, const std::filesystem::path& path) {
    MetricsReport copy = r;
    for (const char* k : kReportKeys) {
        double v = *report_field(copy, k);
        if (!std::isfinite(v))
            throw std::invalid_argument(std::string("refusing to serialize non-finite field ") + k);
    }
    auto f = open_out(path);
    f.precision(17);
    for (const char* k : kReportKeys) f << k << '=' << *report_field(copy, k) << '\n';
}

MetricsReport load_report(const std::filesystem::path& path) {
    auto f = open_in(path);
    MetricsReport r;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("malformed report line: " + line);
        std::string key = line.substr(0, eq);
        double* field = report_field(r, key);
        if (!field) throw std::runtime_error("unknown report key: " + key);
        *field = parse_double(line.substr(eq + 1), path);
    }
    return r;
}

void save_partition(const GenePartition& p, const std::vector<std::string>& gene_ids,
                    const std::filesystem::path& path) {
    auto f = open_out(path);
    f.precision(17);
    std::set<int> anchor_set(p.anchors.begin(), p.anchors.end());
    f << "gene_id\ts_dom\ts_str\tz_dom\tz_str\tassignment\n";
    for (size_t i = 0; i < p.score_genes.size(); ++i) {
        int g = p.score_genes[i];
        f << gene_ids.at(g) << '\t' << p.s_dom(i) << '\t' << p.s_str(i) << '\t' << p.z_dom(i)
          << '\t' << p.z_str(i) << '\t' << (anchor_set.count(g) ? "anchor" : "variant") << '\n';
    }
}

}  // namespace schelix
