#include "schelix/types.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_set>

namespace schelix {

int ExpressionDataset::n_domains() const {
    std::set<std::string> s(domains.begin(), domains.end());
    return static_cast<int>(s.size());
}

void ExpressionDataset::validate() const {
    if (static_cast<Eigen::Index>(gene_ids.size()) != values.cols())
        throw std::invalid_argument("gene_ids length does not match matrix columns");
    if (static_cast<Eigen::Index>(cell_ids.size()) != values.rows())
        throw std::invalid_argument("cell_ids length does not match matrix rows");
    if (static_cast<Eigen::Index>(domains.size()) != values.rows())
        throw std::invalid_argument("domain labels length does not match matrix rows");
    if (!cell_types.empty() && static_cast<Eigen::Index>(cell_types.size()) != values.rows())
        throw std::invalid_argument("cell_types length does not match matrix rows");

    std::unordered_set<std::string> seen;
    for (const auto& id : gene_ids)
        if (!seen.insert(id).second) throw std::invalid_argument("duplicate gene id: " + id);
    seen.clear();
    for (const auto& id : cell_ids)
        if (!seen.insert(id).second) throw std::invalid_argument("duplicate cell id: " + id);

    if ((values.array() < 0.0).any())
        throw std::invalid_argument("expression matrix has negative entries");
    if (layer == Layer::raw_counts) {
        for (Eigen::Index i = 0; i < values.rows(); ++i)
            for (Eigen::Index j = 0; j < values.cols(); ++j) {
                double v = values(i, j);
                if (v != std::floor(v))
                    throw std::invalid_argument("raw_counts layer holds non-integer value");
            }
    }
}

void GenePartition::validate() const {
    std::set<int> a(anchors.begin(), anchors.end());
    std::set<int> v(variants.begin(), variants.end());
    std::set<int> sel(selected.begin(), selected.end());
    if (a.size() + v.size() != sel.size())
        throw std::invalid_argument("anchors/variants do not partition selected genes");
    for (int g : a)
        if (!sel.count(g) || v.count(g))
            throw std::invalid_argument("anchor set is not disjoint subset of selected");
    for (int g : v)
        if (!sel.count(g)) throw std::invalid_argument("variant gene outside selected pool");
    if (selected.size() != variants.size() + anchors.size())
        throw std::invalid_argument("selected pool has duplicates");
    for (size_t i = 0; i < selected.size(); ++i) {
        int expect = i < variants.size() ? variants[i] : anchors[i - variants.size()];
        if (selected[i] != expect)
            throw std::invalid_argument("selected pool must list variants first, then anchors");
    }
}

void MetricsReport::recompute_aggregates() {
    bio_mean = (asw_ct + ari_best + nmi_best + gc) / 4.0;
    overall = 0.4 * asw_batch + 0.6 * bio_mean;
}

void MetricsReport::validate() const {
    auto in01 = [](double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; };
    for (double x : {ari_best, nmi_best, asw_ct, asw_batch, gc, bio_mean, overall})
        if (!in01(x)) throw std::invalid_argument("metric outside [0,1]");
    if (std::abs(bio_mean - (asw_ct + ari_best + nmi_best + gc) / 4.0) > 1e-12)
        throw std::invalid_argument("bio_mean identity violated");
    if (std::abs(overall - (0.4 * asw_batch + 0.6 * bio_mean)) > 1e-12)
        throw std::invalid_argument("overall identity violated");
}

std::string to_string(EmbeddingSource s) {
    switch (s) {
        case EmbeddingSource::variant_stream: return "variant_stream";
        case EmbeddingSource::anchor_stream: return "anchor_stream";
        case EmbeddingSource::refined_anchor: return "refined_anchor";
        case EmbeddingSource::fused: return "fused";
        case EmbeddingSource::external: return "external";
    }
    return "external";
}

EmbeddingSource embedding_source_from_string(const std::string& s) {
    if (s == "variant_stream") return EmbeddingSource::variant_stream;
    if (s == "anchor_stream") return EmbeddingSource::anchor_stream;
    if (s == "refined_anchor") return EmbeddingSource::refined_anchor;
    if (s == "fused") return EmbeddingSource::fused;
    if (s == "external") return EmbeddingSource::external;
    throw std::invalid_argument("unknown embedding source tag: " + s);
}

void EmbeddingMatrix::validate() const {
    if (!values.allFinite()) throw std::invalid_argument("embedding has non-finite entries");
}

}  // namespace schelix
