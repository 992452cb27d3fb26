#pragma once

#include <string>
#include <vector>

#include "vlpr/detect.hpp"
#include "vlpr/features.hpp"
#include "vlpr/pipeline.hpp"
#include "vlpr/segment.hpp"
#include "vlpr/synthgen.hpp"

namespace vlpr {

struct ClassifyConfig {
    double svm_c = 1.0;
    int svm_epochs = 200;
    double unknown_fraction = 0.4;

    void validate() const;
};

struct EvalConfig {
    double iou_min = 0.5;

    void validate() const;
};

/// Every tunable, addressable by dotted key ("detect.aspect_ratio", "features.k", ...).
struct RunConfig {
    detect::DetectConfig detect;
    segment::SegmentConfig segment;
    pipeline::CharTrainConfig chars;
    features::DctConfig dct;
    ClassifyConfig classify;
    EvalConfig eval;
    synth::CorpusRanges synth;

    /// Assigns one key from its text form. Unknown keys and unparsable values
    /// throw InvalidArgument.
    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;
    static const std::vector<std::string>& keys();

    /// Applies a JSON config file: nested objects or dotted keys.
    void load_file(const std::string& path);
    /// Applies "key=value".
    void apply_assignment(const std::string& assignment);

    void validate() const;
    std::string to_json() const;
};

}  // namespace vlpr
