#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "schelix/io.hpp"
#include "schelix/types.hpp"

using namespace schelix;
namespace fs = std::filesystem;

namespace {

fs::path tmp_file(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "schelix_tests";
    fs::create_directories(dir);
    return dir / name;
}

ExpressionDataset tiny_dataset() {
    ExpressionDataset d;
    d.values.resize(3, 2);
    d.values << 1, 0, 0, 2, 3, 1;
    d.gene_ids = {"g0", "g1"};
    d.cell_ids = {"c0", "c1", "c2"};
    d.domains = {"a", "a", "b"};
    d.layer = Layer::raw_counts;
    return d;
}

}  // namespace

TEST_CASE("dataset validation accepts a well-formed instance") {
    ExpressionDataset d = tiny_dataset();
    CHECK_NOTHROW(d.validate());
    CHECK(d.n_cells() == 3);
    CHECK(d.n_genes() == 2);
    CHECK(d.n_domains() == 2);
    CHECK_FALSE(d.has_cell_types());
}

TEST_CASE("dataset validation rejects malformed instances") {
    SUBCASE("duplicate cell ids") {
        ExpressionDataset d = tiny_dataset();
        d.cell_ids[1] = "c0";
        CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    }
    SUBCASE("duplicate gene ids") {
        ExpressionDataset d = tiny_dataset();
        d.gene_ids[1] = "g0";
        CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    }
    SUBCASE("negative entry") {
        ExpressionDataset d = tiny_dataset();
        d.values(0, 0) = -1;
        CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    }
    SUBCASE("non-integer raw counts") {
        ExpressionDataset d = tiny_dataset();
        d.values(0, 0) = 1.5;
        CHECK_THROWS_AS(d.validate(), std::invalid_argument);
        d.layer = Layer::lognorm;
        CHECK_NOTHROW(d.validate());
    }
    SUBCASE("label length mismatch") {
        ExpressionDataset d = tiny_dataset();
        d.domains.pop_back();
        CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    }
    SUBCASE("partial cell types") {
        ExpressionDataset d = tiny_dataset();
        d.cell_types = {"t", "t"};
        CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    }
}

TEST_CASE("partition validation enforces the variant-first ordering") {
    GenePartition p;
    p.anchors = {2, 3};
    p.variants = {0, 1};
    p.selected = {0, 1, 2, 3};
    p.score_genes = {0, 1, 2, 3};
    p.s_dom = p.s_str = p.z_dom = p.z_str = Vec::Zero(4);
    CHECK_NOTHROW(p.validate());

    SUBCASE("overlap rejected") {
        p.anchors[0] = 0;
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    }
    SUBCASE("anchors-first ordering rejected") {
        p.selected = {2, 3, 0, 1};
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    }
}

TEST_CASE("report aggregate identities") {
    MetricsReport r;
    r.ari_best = 0.950;
    r.nmi_best = 0.922;
    r.asw_ct = 0.710;
    r.asw_batch = 0.927;
    r.gc = 0.913;
    r.recompute_aggregates();
    CHECK(r.bio_mean == doctest::Approx(0.87375).epsilon(1e-12));
    CHECK(r.overall == doctest::Approx(0.895).epsilon(1e-3));
    CHECK_NOTHROW(r.validate());

    r.overall += 1e-6;
    CHECK_THROWS_AS(r.validate(), std::invalid_argument);
}

TEST_CASE("matrix triplet round trip") {
    Mat m(3, 4);
    m.setZero();
    m(0, 1) = 1.25;
    m(2, 3) = -0.5;
    m(1, 0) = 1e-13;
    auto p = tmp_file("mat.txt");
    save_matrix_triplets(m, p);
    Mat back = load_matrix(p);
    CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("matrix loader rejects malformed files") {
    auto p = tmp_file("bad.txt");
    SUBCASE("bad header") {
        std::ofstream(p) << "2 x 1\n";
        CHECK_THROWS(load_matrix(p));
    }
    SUBCASE("count mismatch") {
        std::ofstream(p) << "2 2 2\n0 0 1.0\n";
        CHECK_THROWS(load_matrix(p));
    }
    SUBCASE("index out of range") {
        std::ofstream(p) << "2 2 1\n5 0 1.0\n";
        CHECK_THROWS(load_matrix(p));
    }
}

TEST_CASE("csv matrix loading") {
    auto p = tmp_file("mat.csv");
    std::ofstream(p) << "1.0,2.0\n3.5,4.25\n";
    Mat m = load_matrix(p);
    CHECK(m.rows() == 2);
    CHECK(m(1, 1) == 4.25);

    std::ofstream(p) << "1.0,2.0\n3.5\n";
    CHECK_THROWS(load_matrix(p));
}

TEST_CASE("labels round trip with and without cell types") {
    ExpressionDataset d = tiny_dataset();
    auto p = tmp_file("labels.tsv");
    save_labels(d, p);
    LabelTable t = load_labels(p);
    CHECK(t.cell_ids == d.cell_ids);
    CHECK(t.domains == d.domains);
    CHECK(t.cell_types.empty());

    d.cell_types = {"x", "y", "x"};
    save_labels(d, p);
    t = load_labels(p);
    CHECK(t.cell_types == d.cell_types);
}

TEST_CASE("dataset loading checks label row count") {
    ExpressionDataset d = tiny_dataset();
    auto mp = tmp_file("m2.txt");
    auto lp = tmp_file("l2.tsv");
    save_matrix_triplets(d.values, mp);
    save_labels(d, lp);
    ExpressionDataset back = load_dataset(mp, lp, Layer::raw_counts);
    CHECK(back.n_cells() == 3);

    std::ofstream(lp) << "c0\ta\n";
    CHECK_THROWS(load_dataset(mp, lp, Layer::raw_counts));
}

TEST_CASE("embedding round trip keeps 15+ significant digits") {
    EmbeddingMatrix e;
    e.values.resize(2, 3);
    e.values << 0.123456789012345678, -1e-12, 3.14159265358979323, 1e9, 2.5, -0.75;
    e.source = EmbeddingSource::fused;
    auto p = tmp_file("emb.txt");
    save_embedding(e, p);
    EmbeddingMatrix back = load_embedding(p);
    CHECK(back.source == EmbeddingSource::fused);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(back.values(i, j) == doctest::Approx(e.values(i, j)).epsilon(1e-15));
}

TEST_CASE("report serialization refuses non-finite fields") {
    MetricsReport r;
    r.recompute_aggregates();
    auto p = tmp_file("rep.txt");
    CHECK_NOTHROW(save_report(r, p));
    MetricsReport back = load_report(p);
    CHECK(back.overall == r.overall);

    r.asw_ct = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(save_report(r, p), std::invalid_argument);
}
