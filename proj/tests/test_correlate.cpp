#include <doctest.h>

#include <Eigen/Dense>
#include <cstdlib>
#include <fstream>

#include "jindex/correlate.hpp"
#include "jindex/csv.hpp"
#include "jindex/rng.hpp"

using namespace jindex;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::string source_dir() {
    const char* env = std::getenv("JINDEX_SOURCE_DIR");
    return env ? env : "..";
}

MatrixXd random_columns(int n, int p, uint64_t seed) {
    rng::Stream s(rng::key(seed, 0xc0));
    MatrixXd X(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) X(i, j) = s.normal();
    return X;
}

std::vector<std::string> names_for(int p) {
    std::vector<std::string> out;
    for (int j = 0; j < p; ++j) out.push_back("v" + std::to_string(j + 1));
    return out;
}

}  // namespace

TEST_SUITE("correlate") {

TEST_CASE("perfect correlation and anti-correlation") {
    MatrixXd X(5, 2);
    X.col(0) << 1, 2, 3, 4, 5;
    X.col(1) = -X.col(0);
    const auto m = correlate::correlation_matrix(X, names_for(2));
    CHECK(m.values(0, 0) == 1.0);
    CHECK(m.values(1, 1) == 1.0);
    CHECK(m.values(0, 1) == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("matrix is symmetric with unit diagonal and bounded entries") {
    MatrixXd X = random_columns(50, 6, 5);
    const auto m = correlate::correlation_matrix(X, names_for(6));
    for (int i = 0; i < 6; ++i) {
        CHECK(m.values(i, i) == 1.0);
        for (int j = 0; j < 6; ++j) {
            CHECK(m.values(i, j) == m.values(j, i));
            CHECK(std::fabs(m.values(i, j)) <= 1.0);
        }
    }
}

TEST_CASE("zero-variance variables are rejected by name") {
    MatrixXd X = random_columns(20, 2, 6);
    X.col(1).setConstant(3.0);
    CHECK_THROWS_WITH_AS(correlate::correlation_matrix(X, {"ok", "flat"}),
                         doctest::Contains("flat"), std::invalid_argument);
}

TEST_CASE("affine transforms leave the matrix unchanged") {
    MatrixXd X = random_columns(60, 4, 7);
    const auto m0 = correlate::correlation_matrix(X, names_for(4));
    MatrixXd Y = X;
    Y.col(0) = 3.0 * X.col(0).array() + 10.0;
    Y.col(2) = 0.25 * X.col(2).array() - 4.0;
    const auto m1 = correlate::correlation_matrix(Y, names_for(4));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(m1.values(i, j) == doctest::Approx(m0.values(i, j)).epsilon(1e-10));
}

TEST_CASE("published correlation matrix clusters at threshold 0.85") {
    const auto [names, values] =
        load_matrix_csv(source_dir() + "/data/if_scopus_correlations.csv");
    REQUIRE(names.size() == 13);
    // The file transcribes the published table verbatim, which carries one
    // asymmetric pair (TotalDocs3Years vs CitableDocs3years: 0.96/0.99, a
    // rounding slip in the source). Both sides clear the 0.85 threshold, so
    // the partition below is unaffected; clustering reads the upper triangle.
    for (size_t i = 0; i < 13; ++i) {
        CHECK(values(i, i) == 1.0);
        for (size_t j = 0; j < 13; ++j) {
            if ((i == 7 && j == 10) || (i == 10 && j == 7)) continue;
            CHECK(values(i, j) == values(j, i));
        }
    }
    CHECK(values(7, 10) == 0.96);
    CHECK(values(10, 7) == 0.99);
    CHECK(values(0, 1) == 0.95);   // impact factor vs two-year cites per doc
    CHECK(values(1, 2) == 0.99);
    CHECK(values(12, 3) == -0.15); // references per doc vs non-citable docs

    const correlate::CorrelationMatrix m{names, values};
    const auto partition = correlate::cluster(m, 0.85);

    auto group_names = [&](const correlate::Cluster& g) {
        std::vector<std::string> out;
        for (int v : g.members) out.push_back(names[v]);
        return out;
    };
    REQUIRE(partition.groups.size() == 6);
    CHECK(group_names(partition.groups[0]) ==
          std::vector<std::string>{"JournalImpactFactor", "CitesDocs2years", "CitesDoc3Years"});
    CHECK(group_names(partition.groups[1]) == std::vector<std::string>{"NonCitableDocs"});
    CHECK(group_names(partition.groups[2]) ==
          std::vector<std::string>{"ExternalCites3Years", "TotalCites3years"});
    CHECK(group_names(partition.groups[3]) ==
          std::vector<std::string>{"CitedDocs", "TotalDocs", "TotalDocs3Years", "TotalRefs",
                                   "CitableDocs3years"});
    CHECK(group_names(partition.groups[4]) ==
          std::vector<std::string>{"InternationalCollaboration"});
    CHECK(group_names(partition.groups[5]) == std::vector<std::string>{"RefDoc"});
}

TEST_CASE("a threshold just under 1 makes every variable a singleton") {
    MatrixXd X = random_columns(40, 5, 8);
    const auto m = correlate::correlation_matrix(X, names_for(5));
    const auto partition = correlate::cluster(m, 0.999999);
    CHECK(partition.groups.size() == 5);
    for (const auto& g : partition.groups) {
        CHECK(g.members.size() == 1);
        CHECK(g.representative == g.members[0]);
    }
}

TEST_CASE("perfectly correlated copies cluster with the first column as representative") {
    MatrixXd X(30, 2);
    X.col(0) = random_columns(30, 1, 9);
    X.col(1) = X.col(0);
    const auto m = correlate::correlation_matrix(X, {"first", "second"});
    const auto partition = correlate::cluster(m, 0.5);
    REQUIRE(partition.groups.size() == 1);
    CHECK(partition.groups[0].members == std::vector<int>{0, 1});
    CHECK(partition.groups[0].representative == 0);  // tie broken by column order
}

TEST_CASE("raising the threshold only refines the partition") {
    MatrixXd X = random_columns(80, 6, 10);
    X.col(1) = 0.95 * X.col(0) + 0.05 * X.col(1);
    X.col(3) = 0.9 * X.col(2) + 0.1 * X.col(3);
    const auto m = correlate::correlation_matrix(X, names_for(6));
    for (double lo : {0.3, 0.5, 0.7}) {
        const auto coarse = correlate::cluster(m, lo);
        const auto fine = correlate::cluster(m, lo + 0.2);
        // every fine group sits inside one coarse group
        std::vector<int> coarse_of(6);
        for (size_t g = 0; g < coarse.groups.size(); ++g)
            for (int v : coarse.groups[g].members) coarse_of[v] = static_cast<int>(g);
        for (const auto& g : fine.groups)
            for (int v : g.members) CHECK(coarse_of[v] == coarse_of[g.members[0]]);
    }
}

TEST_CASE("clustering is invariant to variable reordering") {
    MatrixXd X = random_columns(60, 5, 11);
    X.col(2) = 0.92 * X.col(4) + 0.08 * X.col(2);
    const auto names = names_for(5);
    const auto m = correlate::correlation_matrix(X, names);
    const auto base = correlate::cluster(m, 0.6);

    const std::vector<int> perm{3, 0, 4, 1, 2};
    MatrixXd Xp(60, 5);
    std::vector<std::string> names_p(5);
    for (int j = 0; j < 5; ++j) {
        Xp.col(j) = X.col(perm[j]);
        names_p[j] = names[perm[j]];
    }
    const auto mp = correlate::correlation_matrix(Xp, names_p);
    const auto permuted = correlate::cluster(mp, 0.6);

    auto as_name_sets = [](const correlate::ClusterPartition& p) {
        std::vector<std::vector<std::string>> out;
        for (const auto& g : p.groups) {
            std::vector<std::string> members;
            for (int v : g.members) members.push_back(p.names[v]);
            std::sort(members.begin(), members.end());
            out.push_back(std::move(members));
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    CHECK(as_name_sets(base) == as_name_sets(permuted));
}

TEST_CASE("vif of orthogonal standardized columns is 1") {
    // exactly orthogonal design
    MatrixXd X(4, 2);
    X.col(0) << 1, 1, -1, -1;
    X.col(1) << 1, -1, 1, -1;
    const auto v = correlate::vif(X, names_for(2));
    CHECK(v[0].vif == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v[1].vif == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("near-duplicated columns blow up the vif, matching the R2 oracle") {
    MatrixXd X = random_columns(100, 3, 12);
    rng::Stream s(rng::key(99, 0x11));
    for (int i = 0; i < 100; ++i) X(i, 1) = X(i, 0) + 1e-3 * s.normal();
    const auto v = correlate::vif(X, names_for(3));
    CHECK(v[0].vif > 10.0);
    CHECK(v[1].vif > 10.0);
    CHECK(v[2].vif < 2.0);

    // oracle: R2 from regressing column 0 on the others with intercept
    MatrixXd Z(100, 3);
    Z.col(0).setOnes();
    Z.col(1) = X.col(1);
    Z.col(2) = X.col(2);
    const VectorXd beta = (Z.transpose() * Z).ldlt().solve(Z.transpose() * X.col(0));
    const double rss = (X.col(0) - Z * beta).squaredNorm();
    const double tss = (X.col(0).array() - X.col(0).mean()).square().sum();
    const double want = 1.0 / (rss / tss);
    CHECK(v[0].vif == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("single variable has vif 1 by convention; exact collinearity is flagged") {
    MatrixXd X1 = random_columns(20, 1, 13);
    const auto v1 = correlate::vif(X1, {"only"});
    REQUIRE(v1.size() == 1);
    CHECK(v1[0].vif == 1.0);
    CHECK_FALSE(v1[0].infinite);

    MatrixXd X2(30, 2);
    X2.col(0) = random_columns(30, 1, 14);
    X2.col(1) = 2.0 * X2.col(0);
    const auto v2 = correlate::vif(X2, names_for(2));
    CHECK(v2[0].infinite);
    CHECK(v2[1].infinite);
}

TEST_CASE("vif is always at least 1") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        MatrixXd X = random_columns(50, 4, 20 + seed);
        for (const auto& e : correlate::vif(X, names_for(4)))
            if (!e.infinite) CHECK(e.vif >= 1.0 - 1e-12);
    }
}

}  // TEST_SUITE
