#include "vlpr/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace vlpr {

using nlohmann::json;

void ClassifyConfig::validate() const {
    require(svm_c > 0.0 && std::isfinite(svm_c), "classify.svm_c must be > 0");
    require(svm_epochs >= 1, "classify.svm_epochs must be >= 1");
    require(unknown_fraction >= 0.0 && std::isfinite(unknown_fraction), "classify.unknown_fraction must be >= 0");
}

void EvalConfig::validate() const {
    require(iou_min > 0.0 && iou_min <= 1.0, "eval.iou_min must be in (0,1]");
}

namespace {

template <typename Config, typename F>
void visit_fields(Config& c, F&& f) {
    f("detect.aspect_ratio", c.detect.aspect_ratio);
    f("detect.aspect_tol", c.detect.aspect_tol);
    f("detect.min_plate_w", c.detect.min_plate_w);
    f("detect.sweep_max", c.detect.sweep_max);
    f("detect.sweep_step", c.detect.sweep_step);
    f("detect.prewitt_threshold", c.detect.prewitt_threshold);
    f("detect.max_candidates", c.detect.max_candidates);
    f("detect.min_text_strokes", c.detect.min_text_strokes);
    f("detect.plate_w", c.detect.plate_out_w);
    f("detect.plate_h", c.detect.plate_out_h);
    f("segment.min_h_frac", c.segment.min_h_frac);
    f("segment.max_h_frac", c.segment.max_h_frac);
    f("segment.min_aspect", c.segment.min_aspect);
    f("segment.max_aspect", c.segment.max_aspect);
    f("segment.expand_step", c.segment.expand_step);
    f("segment.working_width", c.segment.working_width);
    f("segment.subtitle_frac", c.segment.subtitle_frac);
    f("features.pca_components", c.chars.pca_components);
    f("features.norm_w", c.chars.norm_w);
    f("features.norm_h", c.chars.norm_h);
    f("features.k", c.dct.k);
    f("features.dct_w", c.dct.plate_w);
    f("features.dct_h", c.dct.plate_h);
    f("classify.metric", c.chars.metric);
    f("classify.knn_k", c.chars.knn_k);
    f("classify.svm_c", c.classify.svm_c);
    f("classify.svm_epochs", c.classify.svm_epochs);
    f("classify.unknown_fraction", c.classify.unknown_fraction);
    f("train.exemplars_per_class", c.chars.exemplars_per_class);
    f("eval.iou_min", c.eval.iou_min);
    f("synth.skew_min", c.synth.skew_min);
    f("synth.skew_max", c.synth.skew_max);
    f("synth.skew_step", c.synth.skew_step);
    f("synth.plate_width_min", c.synth.plate_width_min);
    f("synth.plate_width_max", c.synth.plate_width_max);
    f("synth.noise_min", c.synth.noise_min);
    f("synth.noise_max", c.synth.noise_max);
    f("synth.illumination_min", c.synth.illumination_min);
    f("synth.illumination_max", c.synth.illumination_max);
    f("synth.clutter_min", c.synth.clutter_min);
    f("synth.clutter_max", c.synth.clutter_max);
    f("synth.digits_min", c.synth.digits_min);
    f("synth.digits_max", c.synth.digits_max);
    f("synth.letters_min", c.synth.letters_min);
    f("synth.letters_max", c.synth.letters_max);
    f("synth.subtitle_probability", c.synth.subtitle_probability);
    f("synth.text_mode", c.synth.text_mode);
    f("synth.identities", c.synth.identities);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    fail(ErrorCode::InvalidArgument, "invalid value '" + value + "' for " + key);
}

void parse_into(const std::string& key, const std::string& v, double& out) {
    double x = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) bad_value(key, v);
    out = x;
}

void parse_into(const std::string& key, const std::string& v, int& out) {
    int x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
    out = x;
}

void parse_into(const std::string& key, const std::string& v, classify::Metric& out) {
    if (v == "euclidean") {
        out = classify::Metric::Euclidean;
    } else if (v == "standardized") {
        out = classify::Metric::Standardized;
    } else {
        bad_value(key, v);
    }
}

void parse_into(const std::string& key, const std::string& v, synth::TextMode& out) {
    if (v == "random") {
        out = synth::TextMode::Random;
    } else if (v == "cycle") {
        out = synth::TextMode::Cycle;
    } else if (v == "identity") {
        out = synth::TextMode::Identity;
    } else {
        bad_value(key, v);
    }
}

std::string format(double v) { return json(v).dump(); }
std::string format(int v) { return std::to_string(v); }
std::string format(classify::Metric m) {
    return m == classify::Metric::Euclidean ? "euclidean" : "standardized";
}
std::string format(synth::TextMode m) {
    switch (m) {
        case synth::TextMode::Random: return "random";
        case synth::TextMode::Cycle: return "cycle";
        case synth::TextMode::Identity: return "identity";
    }
    return "random";
}

json to_json_value(double v) { return v; }
json to_json_value(int v) { return v; }
json to_json_value(classify::Metric m) { return format(m); }
json to_json_value(synth::TextMode m) { return format(m); }

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, json>>& out) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it->is_object()) {
            flatten(*it, key, out);
        } else {
            out.emplace_back(key, *it);
        }
    }
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    bool found = false;
    visit_fields(*this, [&](const char* name, auto& field) {
        if (found || key != name) return;
        parse_into(key, value, field);
        found = true;
    });
    if (!found) {
        fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
    }
}

std::string RunConfig::get(const std::string& key) const {
    std::string out;
    bool found = false;
    visit_fields(const_cast<RunConfig&>(*this), [&](const char* name, auto& field) {
        if (found || key != name) return;
        out = format(field);
        found = true;
    });
    if (!found) {
        fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
    }
    return out;
}

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        RunConfig c;
        visit_fields(c, [&](const char* name, auto&) { v.emplace_back(name); });
        return v;
    }();
    return names;
}

void RunConfig::apply_assignment(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        fail(ErrorCode::InvalidArgument, "expected key=value, got '" + assignment + "'");
    }
    set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::Io, path + ": cannot open config file");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidArgument, path + ": " + e.what());
    }
    if (!j.is_object()) {
        fail(ErrorCode::InvalidArgument, path + ": config must be a JSON object");
    }
    std::vector<std::pair<std::string, json>> entries;
    flatten(j, "", entries);
    for (const auto& [key, value] : entries) {
        if (value.is_string()) {
            set(key, value.get<std::string>());
        } else if (value.is_number()) {
            set(key, value.dump());
        } else {
            fail(ErrorCode::InvalidArgument, path + ": value for " + key + " must be a number or string");
        }
    }
}

void RunConfig::validate() const {
    detect.validate();
    segment.validate();
    chars.validate();
    dct.validate();
    classify.validate();
    eval.validate();
    synth::validate(synth);
}

std::string RunConfig::to_json() const {
    json j = json::object();
    visit_fields(const_cast<RunConfig&>(*this),
                 [&](const char* name, auto& field) { j[name] = to_json_value(field); });
    return j.dump(2);
}

}  // namespace vlpr
