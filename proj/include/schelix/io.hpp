#pragma once

#include <filesystem>
#include <string>

#include "schelix/types.hpp"

namespace schelix {

// Sparse-triplet matrix file: header "N G NNZ", then "row col value" lines,
// 0-indexed. Files ending in .csv are read as dense comma-separated rows.
Mat load_matrix(const std::filesystem::path& path);
void save_matrix_triplets(const Mat& m, const std::filesystem::path& path);

// Tab-separated labels: cell_id <TAB> domain [<TAB> cell_type]. The
// cell_type column may be empty or absent; a dataset mixing the two is
// rejected.
struct LabelTable {
    std::vector<std::string> cell_ids, domains, cell_types;
};
LabelTable load_labels(const std::filesystem::path& path);
void save_labels(const ExpressionDataset& d, const std::filesystem::path& path);

ExpressionDataset load_dataset(const std::filesystem::path& matrix_path,
                               const std::filesystem::path& labels_path, Layer layer);

// Decimal-text embedding file; round-trips values at >= 15 significant digits.
void save_embedding(const EmbeddingMatrix& e, const std::filesystem::path& path);
EmbeddingMatrix load_embedding(const std::filesystem::path& path);

// Key-value report document. Refuses to serialize non-finite fields.
void save_report(const MetricsReport& r, const std::filesystem::path& path);
MetricsReport load_report(const std::filesystem::path& path);

// GenePartition TSV: gene_id, s_dom, s_str, z_dom, z_str, assignment.
void save_partition(const GenePartition& p, const std::vector<std::string>& gene_ids,
                    const std::filesystem::path& path);

}  // namespace schelix
