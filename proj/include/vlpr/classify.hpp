#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace vlpr::classify {

using Matrix = std::vector<std::vector<double>>;  // one sample per row

enum class Metric { Euclidean, Standardized };

double euclidean_distance(std::span<const double> a, std::span<const double> b);
/// sqrt(sum (a_i - b_i)^2 / v_i), v_i the per-dimension variance.
double standardized_euclidean(std::span<const double> a, std::span<const double> b,
                              std::span<const double> variances);

struct KnnModel {
    Matrix X;                 // training vectors
    std::vector<int> labels;  // one per vector
    Metric metric = Metric::Euclidean;
    std::vector<double> variances;  // Standardized only
    int k = 1;
    std::optional<double> reject_threshold;  // none = never reject

    int dim() const { return X.empty() ? 0 : static_cast<int>(X.front().size()); }
    void validate() const;
};

/// Builds a model; variances and the reject threshold come from the training data.
/// The threshold is the 97.5th percentile (nearest rank) of same-label pairwise distances.
KnnModel knn_fit(Matrix X, std::vector<int> labels, Metric metric, int k);

struct KnnResult {
    int label = -1;
    double distance = 0.0;  // to the nearest neighbour carrying `label`
};

KnnResult knn_classify(const KnnModel& model, std::span<const double> query);
double knn_distance(const KnnModel& model, std::span<const double> a, std::span<const double> b);

struct SvmModel {
    std::vector<int> classes;    // ascending
    Matrix weights;              // per class, on z-scored features
    std::vector<double> bias;    // per class
    std::vector<double> feature_mean;
    std::vector<double> feature_scale;  // standard deviation, 1 where constant
    double reg_c = 1.0;
    int epochs = 200;

    int dim() const { return static_cast<int>(feature_mean.size()); }
    void validate() const;
};

/// One-vs-rest linear SVMs trained by a fixed-order subgradient schedule
/// (step 1/(lambda t), lambda = 2/(reg_c n)) on z-scored features.
SvmModel svm_train(const Matrix& X, const std::vector<int>& labels, double reg_c = 1.0, int epochs = 200);

std::vector<double> svm_decision(const SvmModel& model, std::span<const double> query);

struct SvmResult {
    int label = -1;
    double margin = 0.0;  // best score minus runner-up (best score alone with one class)
};
SvmResult svm_predict(const SvmModel& model, std::span<const double> query);
int svm_classify(const SvmModel& model, std::span<const double> query);

using Trainer = std::function<std::function<int(std::span<const double>)>(const Matrix&, const std::vector<int>&)>;

/// Leave-one-out error rate: train on N-1, classify the held-out sample.
double loo_risk(const Matrix& X, const std::vector<int>& labels, const Trainer& trainer);

Trainer svm_trainer(double reg_c, int epochs);
Trainer knn_trainer(Metric metric, int k);

}  // namespace vlpr::classify
