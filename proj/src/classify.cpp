#include "vlpr/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>

#include "vlpr/error.hpp"

namespace vlpr::classify {

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "distance: vector lengths differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double standardized_euclidean(std::span<const double> a, std::span<const double> b,
                              std::span<const double> variances) {
    require(a.size() == b.size() && a.size() == variances.size(), "distance: vector lengths differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        require(variances[i] > 0.0, "standardized distance needs positive variances");
        const double d = a[i] - b[i];
        s += d * d / variances[i];
    }
    return std::sqrt(s);
}

void KnnModel::validate() const {
    require(!X.empty(), "knn model has no training vectors");
    require(labels.size() == X.size(), "knn label count differs from vector count");
    require(k >= 1 && k % 2 == 1, "knn k must be odd and >= 1");
    const std::size_t d = X.front().size();
    require(d >= 1, "knn vectors must be nonempty");
    for (const auto& x : X) {
        require(x.size() == d, "knn vectors have differing lengths");
        for (double v : x) require(std::isfinite(v), "knn vectors must be finite");
    }
    if (metric == Metric::Standardized) {
        require(variances.size() == d, "knn variance count differs from dimension");
        for (double v : variances) require(v > 0.0 && std::isfinite(v), "knn variances must be > 0");
    }
    if (reject_threshold) require(*reject_threshold >= 0.0, "knn reject threshold must be >= 0");
}

double knn_distance(const KnnModel& model, std::span<const double> a, std::span<const double> b) {
    return model.metric == Metric::Euclidean ? euclidean_distance(a, b)
                                             : standardized_euclidean(a, b, model.variances);
}

KnnModel knn_fit(Matrix X, std::vector<int> labels, Metric metric, int k) {
    KnnModel model;
    model.X = std::move(X);
    model.labels = std::move(labels);
    model.metric = metric;
    model.k = k;
    require(!model.X.empty(), "knn_fit: no training vectors");
    const std::size_t d = model.X.front().size();
    if (metric == Metric::Standardized) {
        require(model.X.size() >= 2, "knn_fit: standardized metric needs >= 2 vectors");
        model.variances.assign(d, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            double mean = 0.0;
            for (const auto& x : model.X) mean += x.at(j);
            mean /= static_cast<double>(model.X.size());
            double ss = 0.0;
            for (const auto& x : model.X) ss += (x[j] - mean) * (x[j] - mean);
            model.variances[j] = ss / static_cast<double>(model.X.size() - 1);
            if (!(model.variances[j] > 0.0)) {
                fail(ErrorCode::Degenerate, "knn_fit: feature dimension with zero variance");
            }
        }
    }
    model.validate();

    std::vector<double> same;
    for (std::size_t i = 0; i < model.X.size(); ++i) {
        for (std::size_t j = i + 1; j < model.X.size(); ++j) {
            if (model.labels[i] == model.labels[j]) same.push_back(knn_distance(model, model.X[i], model.X[j]));
        }
    }
    if (!same.empty()) {
        std::sort(same.begin(), same.end());
        const std::size_t rank = static_cast<std::size_t>(std::ceil(0.975 * static_cast<double>(same.size())));
        model.reject_threshold = same[std::max<std::size_t>(rank, 1) - 1];
    }
    return model;
}

KnnResult knn_classify(const KnnModel& model, std::span<const double> query) {
    require(!model.X.empty(), "knn_classify: empty model");
    require(query.size() == model.X.front().size(), "knn_classify: dimension mismatch");
    const std::size_t n = model.X.size();
    std::vector<std::pair<double, std::size_t>> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = {knn_distance(model, model.X[i], query), i};
    const std::size_t k = std::min<std::size_t>(model.k, n);
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());

    // Votes; among tied labels the one with the nearest member wins, which is
    // the first tied label met in distance order.
    std::map<int, int> votes;
    for (std::size_t i = 0; i < k; ++i) ++votes[model.labels[d[i].second]];
    int best_votes = 0;
    for (const auto& [label, v] : votes) best_votes = std::max(best_votes, v);
    for (std::size_t i = 0; i < k; ++i) {
        const int label = model.labels[d[i].second];
        if (votes[label] == best_votes) return KnnResult{label, d[i].first};
    }
    fail(ErrorCode::Internal, "knn_classify: no vote winner");
}

void SvmModel::validate() const {
    require(classes.size() >= 2, "svm model needs >= 2 classes");
    require(std::is_sorted(classes.begin(), classes.end()) &&
                std::adjacent_find(classes.begin(), classes.end()) == classes.end(),
            "svm classes must be strictly ascending");
    require(!feature_mean.empty(), "svm model has empty dimension");
    require(feature_scale.size() == feature_mean.size(), "svm scale length mismatch");
    require(weights.size() == classes.size() && bias.size() == classes.size(), "svm per-class arrays mismatch");
    for (const auto& w : weights) {
        require(w.size() == feature_mean.size(), "svm weight length mismatch");
        for (double v : w) require(std::isfinite(v), "svm weights must be finite");
    }
    for (double v : bias) require(std::isfinite(v), "svm bias must be finite");
    for (std::size_t j = 0; j < feature_mean.size(); ++j) {
        require(std::isfinite(feature_mean[j]) && feature_scale[j] > 0.0 && std::isfinite(feature_scale[j]),
                "svm standardization must be finite with positive scale");
    }
    require(reg_c > 0.0 && epochs >= 1, "svm reg_c must be > 0 and epochs >= 1");
}

SvmModel svm_train(const Matrix& X, const std::vector<int>& labels, double reg_c, int epochs) {
    require(!X.empty() && labels.size() == X.size(), "svm_train: samples and labels differ in count");
    require(reg_c > 0.0 && std::isfinite(reg_c), "svm_train: reg_c must be > 0");
    require(epochs >= 1, "svm_train: epochs must be >= 1");
    const std::size_t n = X.size();
    const std::size_t d = X.front().size();
    require(d >= 1, "svm_train: empty feature vectors");
    for (const auto& x : X) require(x.size() == d, "svm_train: feature vectors differ in length");

    SvmModel model;
    model.reg_c = reg_c;
    model.epochs = epochs;
    model.classes = labels;
    std::sort(model.classes.begin(), model.classes.end());
    model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
    if (model.classes.size() < 2) {
        fail(ErrorCode::Degenerate, "degenerate training set");
    }

    model.feature_mean.assign(d, 0.0);
    model.feature_scale.assign(d, 1.0);
    for (const auto& x : X) {
        for (std::size_t j = 0; j < d; ++j) model.feature_mean[j] += x[j];
    }
    for (double& m : model.feature_mean) m /= static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j) {
        double ss = 0.0;
        for (const auto& x : X) ss += (x[j] - model.feature_mean[j]) * (x[j] - model.feature_mean[j]);
        const double sd = std::sqrt(ss / static_cast<double>(n));
        model.feature_scale[j] = sd > 0.0 ? sd : 1.0;
    }
    Matrix Z(n, std::vector<double>(d));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) Z[i][j] = (X[i][j] - model.feature_mean[j]) / model.feature_scale[j];
    }

    // Gram matrix of the bias-augmented samples. With it every step costs O(1)
    // to test and O(n) to update, independent of the feature dimension.
    std::vector<double> gram(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double g = std::inner_product(Z[i].begin(), Z[i].end(), Z[j].begin(), 0.0) + 1.0;
            gram[i * n + j] = g;
            gram[j * n + i] = g;
        }
    }

    const double lambda = 2.0 / (reg_c * static_cast<double>(n));
    const long long steps = static_cast<long long>(epochs) * static_cast<long long>(n);
    for (int c : model.classes) {
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] == c ? 1.0 : -1.0;
        // f[i] = sum_j alpha_j y_j K(j, i); w_t = f / (lambda t).
        std::vector<long long> alpha(n, 0);
        std::vector<double> f(n, 0.0);
        for (long long t = 1; t <= steps; ++t) {
            const std::size_t i = static_cast<std::size_t>((t - 1) % static_cast<long long>(n));
            if (y[i] * f[i] / (lambda * static_cast<double>(t)) < 1.0) {
                ++alpha[i];
                const double* row = gram.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) f[j] += y[i] * row[j];
            }
        }
        const double scale = 1.0 / (lambda * static_cast<double>(steps));
        std::vector<double> w(d, 0.0);
        double b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (alpha[i] == 0) continue;
            const double a = static_cast<double>(alpha[i]) * y[i] * scale;
            for (std::size_t j = 0; j < d; ++j) w[j] += a * Z[i][j];
            b += a;
        }
        model.weights.push_back(std::move(w));
        model.bias.push_back(b);
    }
    return model;
}

std::vector<double> svm_decision(const SvmModel& model, std::span<const double> query) {
    if (query.size() != model.feature_mean.size()) {
        fail(ErrorCode::InvalidArgument, "svm: dimension mismatch");
    }
    std::vector<double> z(query.size());
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = (query[j] - model.feature_mean[j]) / model.feature_scale[j];
    std::vector<double> scores(model.classes.size());
    for (std::size_t c = 0; c < scores.size(); ++c) {
        scores[c] = std::inner_product(z.begin(), z.end(), model.weights[c].begin(), 0.0) + model.bias[c];
    }
    return scores;
}

SvmResult svm_predict(const SvmModel& model, std::span<const double> query) {
    const std::vector<double> scores = svm_decision(model, query);
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c) {
        if (scores[c] > scores[best]) best = c;
    }
    double second = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < scores.size(); ++c) {
        if (c != best) second = std::max(second, scores[c]);
    }
    return SvmResult{model.classes[best], scores.size() > 1 ? scores[best] - second : scores[best]};
}

int svm_classify(const SvmModel& model, std::span<const double> query) {
    return svm_predict(model, query).label;
}

double loo_risk(const Matrix& X, const std::vector<int>& labels, const Trainer& trainer) {
    require(X.size() == labels.size(), "loo_risk: samples and labels differ in count");
    if (X.size() < 2) {
        fail(ErrorCode::InvalidArgument, "loo_risk needs at least 2 samples");
    }
    std::size_t errors = 0;
    for (std::size_t held = 0; held < X.size(); ++held) {
        Matrix train;
        std::vector<int> train_labels;
        train.reserve(X.size() - 1);
        for (std::size_t i = 0; i < X.size(); ++i) {
            if (i == held) continue;
            train.push_back(X[i]);
            train_labels.push_back(labels[i]);
        }
        const bool multi = std::any_of(train_labels.begin(), train_labels.end(),
                                       [&](int l) { return l != train_labels.front(); });
        if (!multi) {
            fail(ErrorCode::Degenerate, "loo_risk: a fold has a single class");
        }
        const auto classifier = trainer(train, train_labels);
        if (classifier(X[held]) != labels[held]) ++errors;
    }
    return static_cast<double>(errors) / static_cast<double>(X.size());
}

Trainer svm_trainer(double reg_c, int epochs) {
    return [reg_c, epochs](const Matrix& X, const std::vector<int>& labels) {
        auto model = std::make_shared<const SvmModel>(svm_train(X, labels, reg_c, epochs));
        return std::function<int(std::span<const double>)>(
            [model](std::span<const double> q) { return svm_classify(*model, q); });
    };
}

Trainer knn_trainer(Metric metric, int k) {
    return [metric, k](const Matrix& X, const std::vector<int>& labels) {
        auto model = std::make_shared<const KnnModel>(knn_fit(X, labels, metric, k));
        return std::function<int(std::span<const double>)>(
            [model](std::span<const double> q) { return knn_classify(*model, q).label; });
    };
}

}  // namespace vlpr::classify
