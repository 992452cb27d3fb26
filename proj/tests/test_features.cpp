#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "helpers.hpp"
#include "vlpr/error.hpp"
#include "vlpr/features.hpp"

using namespace vlpr;
using namespace vlpr::features;


TEST_CASE("pca: axis-aligned points") {
    std::vector<std::vector<double>> s;
    std::vector<double> t{-3, -1, 0, 2, 7};
    for (double v : t) s.push_back({v, 0.0});
    const PcaModel m = pca_fit(s, 2, 2, 1);
    const double mean = std::accumulate(t.begin(), t.end(), 0.0) / t.size();
    double var = 0;
    for (double v : t) var += (v - mean) * (v - mean);
    var /= t.size() - 1;
    CHECK(std::abs(m.basis[0][0]) == doctest::Approx(1.0));
    CHECK(m.basis[0][1] == doctest::Approx(0.0));
    CHECK(m.eigenvalues[0] == doctest::Approx(var));
    CHECK(m.eigenvalues[1] == doctest::Approx(0.0));
}

TEST_CASE("pca: basis matches a dense eigensolver") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> dimd(2, 16);
    for (int trial = 0; trial < 120; ++trial) {
        const int dim = trial == 0 ? 5 : dimd(rng);
        const int n = trial == 0 ? 50 : std::uniform_int_distribution<int>(dim + 2, 4 * dim + 10)(rng);
        const auto s = oracle::random_samples(rng, n, dim);
        const int k = std::uniform_int_distribution<int>(1, dim - 1)(rng);
        const PcaModel m = pca_fit(s, k, dim, 1);

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(oracle::covariance(s));
        const Eigen::MatrixXd V = es.eigenvectors().rightCols(k);
        Eigen::MatrixXd Q(k, dim);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < dim; ++j) Q(i, j) = m.basis[i][j];
        REQUIRE(oracle::max_principal_sine(Q, V) <= 1e-6);
        for (int i = 0; i < k; ++i) {
            const double ev = es.eigenvalues()[dim - 1 - i];
            REQUIRE(m.eigenvalues[i] == doctest::Approx(ev).epsilon(1e-9));
        }
        // Orthonormal rows, descending eigenvalues, sign convention.
        const Eigen::MatrixXd G = Q * Q.transpose();
        REQUIRE((G - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-9);
        for (int i = 0; i + 1 < k; ++i) REQUIRE(m.eigenvalues[i] >= m.eigenvalues[i + 1]);
        for (const auto& row : m.basis) {
            const auto it = std::max_element(row.begin(), row.end(),
                                             [](double a, double b) { return std::abs(a) < std::abs(b); });
            REQUIRE(*it > 0.0);
        }
    }
}

TEST_CASE("pca: eigenvalue sum equals covariance trace") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const int dim = 3 + trial % 10;
        const int n = dim + 5 + trial % 7;
        const auto s = oracle::random_samples(rng, n, dim);
        const PcaModel m = pca_fit(s, dim, dim, 1, true);
        double trace = 0;
        for (int i = 0; i < dim; ++i) trace += m.covariance[static_cast<std::size_t>(i) * dim + i];
        const double sum = std::accumulate(m.eigenvalues.begin(), m.eigenvalues.end(), 0.0);
        REQUIRE(std::abs(sum - trace) <= 1e-6 * std::abs(trace));
        REQUIRE(trace == doctest::Approx(oracle::covariance(s).trace()).epsilon(1e-12));
    }
}

TEST_CASE("pca: projection identities") {
    std::mt19937_64 rng(29);
    const auto s = oracle::random_samples(rng, 40, 9);
    const PcaModel m = pca_fit(s, 4, 3, 3);
    for (double v : pca_project(m, m.mean)) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));

    std::vector<double> x = m.mean;
    const double sigma = std::sqrt(m.eigenvalues[0]);
    for (int j = 0; j < 9; ++j) x[j] += sigma * m.basis[0][j];
    const auto y = pca_project(m, x);
    CHECK(y[0] == doctest::Approx(sigma));
    for (int i = 1; i < 4; ++i) CHECK(std::abs(y[i]) < 1e-9);

    for (const auto& sample : s) {
        const auto c = pca_project(m, sample);
        const auto c2 = pca_project(m, pca_reconstruct(m, c));
        for (std::size_t i = 0; i < c.size(); ++i) REQUIRE(std::abs(c[i] - c2[i]) < 1e-9);
    }
}

TEST_CASE("pca: errors") {
    CHECK_THROWS_AS(pca_fit({{1.0, 2.0}}, 1, 2, 1), Error);
    CHECK_THROWS_AS(pca_fit({{1.0, 2.0}, {2.0, 1.0}, {0.0, 0.0}}, 3, 2, 1), Error);
    CHECK_THROWS_AS(pca_fit({{1.0, 2.0}, {2.0}}, 1, 2, 1), Error);
    const PcaModel m = pca_fit({{1.0, 2.0}, {2.0, 1.0}, {0.0, 0.5}}, 1, 2, 1);
    CHECK_THROWS_AS(pca_project(m, std::vector<double>{1.0}), Error);
}

TEST_CASE("symmetric_eigen matches Eigen") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + trial % 12;
        Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(n, n, [&]() { return g(rng); });
        A = (A + A.transpose()).eval();
        std::vector<double> a(static_cast<std::size_t>(n) * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a[i * n + j] = A(i, j);
        const SymmetricEigen e = symmetric_eigen(a, n);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
        for (int i = 0; i < n; ++i) REQUIRE(std::abs(e.values[i] - es.eigenvalues()[i]) < 1e-9);
        Eigen::MatrixXd V(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) V(i, j) = e.vectors[i * n + j];
        const Eigen::MatrixXd D = Eigen::VectorXd::Map(e.values.data(), n).asDiagonal();
        REQUIRE((A * V - V * D).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("dct: constant block") {
    Block b;
    b.fill(37.0);
    const Block c = dct2_block(b);
    CHECK(c[0] == doctest::Approx(8 * 37.0));
    for (int i = 1; i < 64; ++i) CHECK(std::abs(c[i]) < 1e-9);
}

TEST_CASE("dct: matches the four-loop formula") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 200; ++trial) {
        const Block b = oracle::random_block(rng);
        const Block c = dct2_block(b);
        const Block o = oracle::dct2(b);
        for (int i = 0; i < 64; ++i) REQUIRE(std::abs(c[i] - o[i]) <= 1e-9);
    }
}

TEST_CASE("dct: Parseval on 1000 blocks") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 1000; ++trial) {
        const Block b = oracle::random_block(rng);
        const Block c = dct2_block(b);
        double e1 = 0;
        double e2 = 0;
        for (int i = 0; i < 64; ++i) {
            e1 += b[i] * b[i];
            e2 += c[i] * c[i];
        }
        REQUIRE(std::abs(e1 - e2) <= 1e-9 * e1);
    }
}

TEST_CASE("zigzag") {
    const auto& z = zigzag_order();
    CHECK(z[0] == 0);
    CHECK(z[1] == 1);
    CHECK(z[2] == 8);
    CHECK(z[3] == 16);
    CHECK(z[4] == 9);
    CHECK(z[5] == 2);
    // Standard JPEG scan.
    const std::array<int, 64> jpeg{0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
                                   12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
                                   35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
                                   58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};
    CHECK(z == jpeg);
    std::mt19937_64 rng(43);
    const Block c = oracle::random_block(rng);
    CHECK(zigzag_select(c, 1) == std::vector<double>{c[0]});
    auto all = zigzag_select(c, 64);
    std::vector<double> sorted_all = all;
    std::vector<double> sorted_c(c.begin(), c.end());
    std::sort(sorted_all.begin(), sorted_all.end());
    std::sort(sorted_c.begin(), sorted_c.end());
    CHECK(sorted_all == sorted_c);
    CHECK_THROWS_AS(zigzag_select(c, 0), Error);
    CHECK_THROWS_AS(zigzag_select(c, 65), Error);
}

TEST_CASE("dct features") {
    DctConfig small{3, 8, 8};
    CHECK(dct_features(GrayImage(8, 8, 5), small).values.size() == 3);
    DctConfig cfg;
    CHECK(cfg.dim() == 4608);
    const FeatureVector f = dct_features(GrayImage(256, 128, 100), cfg);
    REQUIRE(f.values.size() == 4608);
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        if (i % 9 == 0) {
            REQUIRE(f.values[i] == doctest::Approx(800.0));
        } else {
            REQUIRE(std::abs(f.values[i]) < 1e-9);
        }
    }
    // Other sizes are resized first.
    CHECK(dct_features(GrayImage(300, 140, 100), cfg).values.size() == 4608);
    CHECK_THROWS_AS((DctConfig{9, 250, 128}.validate()), Error);
    CHECK_THROWS_AS((DctConfig{0, 256, 128}.validate()), Error);
}

TEST_CASE("normalize_character") {
    BinaryImage tall(4, 12);
    for (auto& p : tall.pixels()) p = 1;
    const RealImage r = normalize_character(tall, 24, 24);
    CHECK(r.width() == 24);
    CHECK(r.height() == 24);
    for (double v : r.pixels()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    // Padding keeps the glyph narrow and centred.
    CHECK(r.at(12, 12) == doctest::Approx(1.0));
    CHECK(r.at(1, 12) == doctest::Approx(0.0));
    CHECK(r.at(22, 12) == doctest::Approx(0.0));
}
