#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "vlpr/classify.hpp"
#include "vlpr/error.hpp"

using namespace vlpr;
using namespace vlpr::classify;

namespace {
struct Toy {
    Matrix X;
    std::vector<int> y;
};

Toy separable_toy(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ang(0, 2 * M_PI);
    std::uniform_real_distribution<double> rad(0, 1);
    Toy t;
    for (int i = 0; i < 20; ++i) {
        const double a = ang(rng);
        const double r = rad(rng);
        t.X.push_back({r * std::cos(a), r * std::sin(a)});
        t.y.push_back(0);
    }
    for (int i = 0; i < 20; ++i) {
        const double a = ang(rng);
        const double r = rad(rng);
        t.X.push_back({10 + r * std::cos(a), 10 + r * std::sin(a)});
        t.y.push_back(1);
    }
    return t;
}

}  // namespace

TEST_CASE("euclidean distance") {
    const std::vector<double> a{0, 0};
    const std::vector<double> b{3, 4};
    CHECK(euclidean_distance(a, a) == 0.0);
    CHECK(euclidean_distance(a, b) == 5.0);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (int i = 0; i < 100; ++i) {
        std::vector<double> x(7);
        std::vector<double> y(7);
        for (auto& v : x) v = g(rng);
        for (auto& v : y) v = g(rng);
        REQUIRE(euclidean_distance(x, y) == euclidean_distance(y, x));
    }
    CHECK_THROWS_AS(euclidean_distance(a, std::vector<double>{1.0}), Error);
}

TEST_CASE("standardized euclidean") {
    const std::vector<double> a{5, 3};
    const std::vector<double> b{3, 2};
    CHECK(standardized_euclidean(a, b, std::vector<double>{4, 1}) == doctest::Approx(std::sqrt(2.0)));
    CHECK(standardized_euclidean(a, b, std::vector<double>{1, 1}) == euclidean_distance(a, b));
    const double s = 3.5;
    const std::vector<double> as{5 * s, 3};
    const std::vector<double> bs{3 * s, 2};
    CHECK(standardized_euclidean(as, bs, std::vector<double>{4 * s * s, 1}) ==
          doctest::Approx(standardized_euclidean(a, b, std::vector<double>{4, 1})));
    CHECK_THROWS_AS(standardized_euclidean(a, b, std::vector<double>{0, 1}), Error);
}

TEST_CASE("knn: exact training match") {
    const KnnModel m = knn_fit({{0, 0}, {1, 1}, {5, 5}}, {0, 1, 2}, Metric::Euclidean, 1);
    const KnnResult r = knn_classify(m, std::vector<double>{1, 1});
    CHECK(r.label == 1);
    CHECK(r.distance == 0.0);
}

TEST_CASE("knn: majority of three") {
    const KnnModel m =
        knn_fit({{0, 0}, {0.5, 0}, {1, 0}, {20, 0}, {21, 0}}, {7, 7, 8, 8, 8}, Metric::Euclidean, 3);
    CHECK(knn_classify(m, std::vector<double>{0.1, 0}).label == 7);
}

TEST_CASE("knn: matches a linear scan") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> coord(0, 4);  // small lattice, many ties
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 3 + trial % 20;
        const int d = 1 + trial % 5;
        const int k = 1 + 2 * (trial % 3);
        Matrix X(n, std::vector<double>(d));
        std::vector<int> y(n);
        for (int i = 0; i < n; ++i) {
            for (auto& v : X[i]) v = coord(rng);
            y[i] = coord(rng) % 3;
        }
        // Make every dimension vary so the standardized metric is defined.
        for (int j = 0; j < d; ++j) {
            X[0][j] = 0;
            X[1][j] = 4;
        }
        const Metric metric = trial % 2 ? Metric::Standardized : Metric::Euclidean;
        const KnnModel m = knn_fit(X, y, metric, k);
        for (int q = 0; q < 5; ++q) {
            std::vector<double> query(d);
            for (auto& v : query) v = coord(rng) + 0.5 * (q % 2);
            const KnnResult got = knn_classify(m, query);
            const KnnResult want = oracle::knn(X, y, k, query, metric == Metric::Standardized ? &m.variances : nullptr);
            REQUIRE(got.label == want.label);
            REQUIRE(got.distance == doctest::Approx(want.distance).epsilon(1e-12));
        }
    }
}

TEST_CASE("knn: reject threshold is the 97.5th percentile of same-label distances") {
    Matrix X;
    std::vector<int> y;
    for (int i = 0; i < 10; ++i) {
        X.push_back({static_cast<double>(i), 0.0});
        y.push_back(0);
    }
    const KnnModel m = knn_fit(X, y, Metric::Euclidean, 1);
    std::vector<double> d;
    for (int i = 0; i < 10; ++i)
        for (int j = i + 1; j < 10; ++j) d.push_back(j - i);
    std::sort(d.begin(), d.end());
    REQUIRE(m.reject_threshold.has_value());
    CHECK(*m.reject_threshold == d[static_cast<std::size_t>(std::ceil(0.975 * d.size())) - 1]);
}

TEST_CASE("knn: errors") {
    CHECK_THROWS_AS(knn_fit({}, {}, Metric::Euclidean, 1), Error);
    CHECK_THROWS_AS(knn_fit({{1, 2}, {1, 3}}, {0, 1}, Metric::Standardized, 1), Error);
    CHECK_THROWS_AS(knn_fit({{1, 2}, {1, 3}}, {0}, Metric::Euclidean, 1), Error);
    CHECK_THROWS_AS(knn_fit({{1, 2}, {1, 3}}, {0, 1}, Metric::Euclidean, 0), Error);
    const KnnModel m = knn_fit({{1, 2}, {1, 3}}, {0, 1}, Metric::Euclidean, 1);
    CHECK_THROWS_AS(knn_classify(m, std::vector<double>{1, 2, 3}), Error);
}

TEST_CASE("svm: separable toy set") {
    const Toy t = separable_toy(3);
    const SvmModel m = svm_train(t.X, t.y);
    for (std::size_t i = 0; i < t.X.size(); ++i) {
        const auto dec = svm_decision(m, t.X[i]);
        const int arg = static_cast<int>(std::max_element(dec.begin(), dec.end()) - dec.begin());
        REQUIRE(m.classes[arg] == t.y[i]);
        REQUIRE(svm_classify(m, t.X[i]) == t.y[i]);
    }
    CHECK(svm_classify(m, std::vector<double>{0.2, -0.3}) == 0);
    CHECK(svm_classify(m, std::vector<double>{9.5, 10.4}) == 1);
}

TEST_CASE("svm: duplicated training set gives the same predictions") {
    const Toy t = separable_toy(5);
    Toy dup = t;
    dup.X.insert(dup.X.end(), t.X.begin(), t.X.end());
    dup.y.insert(dup.y.end(), t.y.begin(), t.y.end());
    const SvmModel a = svm_train(t.X, t.y);
    const SvmModel b = svm_train(dup.X, dup.y);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2, 12);
    for (int i = 0; i < 200; ++i) {
        const std::vector<double> p{u(rng), u(rng)};
        // Skip probes on the boundary where both models are unsure.
        const auto da = svm_decision(a, p);
        if (std::abs(da[0] - da[1]) < 0.1) continue;
        REQUIRE(svm_classify(a, p) == svm_classify(b, p));
    }
}

TEST_CASE("svm: uniform bias shift keeps the argmax") {
    const Toy t = separable_toy(11);
    SvmModel m = svm_train(t.X, t.y);
    SvmModel shifted = m;
    for (double& b : shifted.bias) b += 3.7;
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-2, 12);
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> p{u(rng), u(rng)};
        REQUIRE(svm_classify(m, p) == svm_classify(shifted, p));
    }
}

TEST_CASE("svm: multi-class and margin") {
    Matrix X;
    std::vector<int> y;
    for (int c = 0; c < 4; ++c) {
        for (int i = 0; i < 6; ++i) {
            X.push_back({c * 10.0 + (i % 3) * 0.3, (c % 2) * 10.0 + (i / 3) * 0.3, 1.0});
            y.push_back(c * 3);
        }
    }
    const SvmModel m = svm_train(X, y);
    CHECK(m.classes == std::vector<int>{0, 3, 6, 9});
    CHECK(m.feature_scale[2] == 1.0);  // constant dimension
    for (std::size_t i = 0; i < X.size(); ++i) {
        const SvmResult r = svm_predict(m, X[i]);
        REQUIRE(r.label == y[i]);
        REQUIRE(r.margin > 0.0);
    }
}

TEST_CASE("svm: validation") {
    CHECK_THROWS_AS(svm_train({{1, 2}, {2, 3}}, {4, 4}), Error);
    CHECK_THROWS_AS(svm_train({{1, 2}, {2, 3}}, {0, 1}, 0.0), Error);
    CHECK_THROWS_AS(svm_train({{1, 2}, {2, 3}}, {0, 1}, 1.0, 0), Error);
    SvmModel m = svm_train({{1, 2}, {2, 3}}, {0, 1});
    CHECK_NOTHROW(m.validate());
    SvmModel empty = m;
    empty.feature_mean.clear();
    empty.feature_scale.clear();
    for (auto& w : empty.weights) w.clear();
    CHECK_THROWS_AS(empty.validate(), Error);
    CHECK_THROWS_AS(svm_classify(m, std::vector<double>{1.0}), Error);
}

TEST_CASE("svm: training is deterministic") {
    const Toy t = separable_toy(17);
    const SvmModel a = svm_train(t.X, t.y);
    const SvmModel b = svm_train(t.X, t.y);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
}

TEST_CASE("loo risk") {
    const Toy t = separable_toy(19);
    CHECK(loo_risk(t.X, t.y, svm_trainer(1.0, 50)) == 0.0);
    CHECK(loo_risk(t.X, t.y, knn_trainer(Metric::Euclidean, 1)) == 0.0);

    std::mt19937_64 rng(23);
    std::normal_distribution<double> g;
    Matrix X;
    std::vector<int> y;
    for (int i = 0; i < 10; ++i) {
        X.push_back({g(rng), g(rng)});
        y.push_back(static_cast<int>(rng() % 2));
    }
    y[0] = 0;
    y[1] = 1;
    y[2] = 0;
    y[3] = 1;
    CHECK(loo_risk(X, y, knn_trainer(Metric::Euclidean, 1)) >= 0.3);

    // Holding out the only member of class 1 leaves a single-class fold.
    Matrix same(5, std::vector<double>{1.0, 1.0});
    same.push_back({4.0, 4.0});
    std::vector<int> ly{0, 0, 0, 0, 0, 1};
    CHECK_THROWS_AS(loo_risk(same, ly, svm_trainer(1.0, 10)), Error);
    CHECK_THROWS_AS(loo_risk({{1.0}}, {0}, svm_trainer(1.0, 10)), Error);
}
