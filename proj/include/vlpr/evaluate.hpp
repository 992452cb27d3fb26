#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vlpr/config.hpp"
#include "vlpr/imaging.hpp"
#include "vlpr/pipeline.hpp"
#include "vlpr/synthgen.hpp"

namespace vlpr::evaluate {

using imaging::BBox;

struct ConfusionCounts {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;

    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    bool operator==(const ConfusionCounts&) const = default;
};

/// A ratio kept as integers so display rounding is exact.
struct Ratio {
    long long num = 0;
    long long den = 0;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    /// Hundredths: rounded half up to thousandths, then half up again.
    long long hundredths() const;
    /// "0.82"
    std::string display() const;
};

/// Undefined (nullopt) when the denominator is zero.
struct Metrics {
    std::optional<Ratio> precision;  // TP / (TP + FP)
    std::optional<Ratio> recall;     // TP / (TP + FN)
    std::optional<Ratio> accuracy;   // TP / (TP + FP + FN)
};

Metrics metrics(const ConfusionCounts& c);
std::string display(const std::optional<Ratio>& r);  // "undefined" when absent

/// Greedy one-to-one matching in descending IoU order; pairs at or above
/// iou_min are true positives.
struct Match {
    std::size_t predicted;
    std::size_t truth;
    double iou;
};
std::vector<Match> match_boxes(const std::vector<BBox>& predicted, const std::vector<BBox>& truth,
                               double iou_min);
ConfusionCounts match_detections(const std::vector<BBox>& predicted, const std::vector<BBox>& truth,
                                 double iou_min);

enum class Stage { PlateDetect, CharDetect, CharRecognize, PlateRecognize };
Stage parse_stage(const std::string& name);
std::string stage_name(Stage s);

struct SceneRecord {
    std::uint64_t index = 0;
    std::string image;
    std::string status;  // ok | no-plate | unreadable | read-error
    ConfusionCounts counts;
    std::string predicted;  // plate text or identity
    std::string expected;
    bool exact = false;     // whole plate correct
};

struct EvalReport {
    Stage stage = Stage::PlateDetect;
    ConfusionCounts counts;
    Metrics metrics;
    long long truth_objects = 0;
    long long plates_exact = 0;
    long long plates_total = 0;
    std::vector<SceneRecord> scenes;
};

struct EvalModels {
    const pipeline::CharModel* chars = nullptr;
    const pipeline::PlateModel* plates = nullptr;
};

/// Throws before any scene runs when the stage needs a model that is absent.
EvalReport run_eval(const std::vector<synth::ManifestRecord>& records, const std::string& manifest_dir,
                    Stage stage, const RunConfig& cfg, const EvalModels& models, int parallelism = 1);

/// Header plus one row, columns FN,FP,TP,Precision,Recall,Accuracy.
std::string report_csv(const EvalReport& report);
/// One row per scene.
std::string detail_csv(const EvalReport& report);

}  // namespace vlpr::evaluate
