#include "vlpr/evaluate.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "vlpr/alphabet.hpp"

namespace vlpr::evaluate {

long long Ratio::hundredths() const {
    require(den > 0 && num >= 0, "ratio must have a positive denominator and non-negative numerator");
    // Thousandths first, then hundredths, both half up.
    const long long thousandths = (2000 * num + den) / (2 * den);
    return (thousandths + 5) / 10;
}

std::string Ratio::display() const {
    const long long h = hundredths();
    std::ostringstream out;
    out << h / 100 << '.' << (h % 100 < 10 ? "0" : "") << h % 100;
    return out.str();
}

std::string display(const std::optional<Ratio>& r) { return r ? r->display() : "undefined"; }

Metrics metrics(const ConfusionCounts& c) {
    require(c.tp >= 0 && c.fp >= 0 && c.fn >= 0, "confusion counts must be non-negative");
    Metrics m;
    if (c.tp + c.fp > 0) m.precision = Ratio{c.tp, c.tp + c.fp};
    if (c.tp + c.fn > 0) m.recall = Ratio{c.tp, c.tp + c.fn};
    if (c.tp + c.fp + c.fn > 0) m.accuracy = Ratio{c.tp, c.tp + c.fp + c.fn};
    return m;
}

std::vector<Match> match_boxes(const std::vector<BBox>& predicted, const std::vector<BBox>& truth,
                               double iou_min) {
    require(iou_min > 0.0 && iou_min <= 1.0, "iou_min must be in (0,1]");
    std::vector<Match> pairs;
    for (std::size_t p = 0; p < predicted.size(); ++p) {
        for (std::size_t t = 0; t < truth.size(); ++t) {
            const double v = imaging::iou(predicted[p], truth[t]);
            if (v >= iou_min) pairs.push_back(Match{p, t, v});
        }
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Match& a, const Match& b) { return a.iou > b.iou; });
    std::vector<bool> used_p(predicted.size(), false);
    std::vector<bool> used_t(truth.size(), false);
    std::vector<Match> out;
    for (const Match& m : pairs) {
        if (used_p[m.predicted] || used_t[m.truth]) continue;
        used_p[m.predicted] = true;
        used_t[m.truth] = true;
        out.push_back(m);
    }
    return out;
}

ConfusionCounts match_detections(const std::vector<BBox>& predicted, const std::vector<BBox>& truth,
                                 double iou_min) {
    const auto matches = match_boxes(predicted, truth, iou_min);
    const auto tp = static_cast<long long>(matches.size());
    return ConfusionCounts{tp, static_cast<long long>(predicted.size()) - tp,
                           static_cast<long long>(truth.size()) - tp};
}

Stage parse_stage(const std::string& name) {
    if (name == "plate-detect") return Stage::PlateDetect;
    if (name == "char-detect") return Stage::CharDetect;
    if (name == "char-recognize") return Stage::CharRecognize;
    if (name == "plate-recognize") return Stage::PlateRecognize;
    fail(ErrorCode::InvalidArgument, "unknown stage '" + name +
                                         "' (expected plate-detect, char-detect, char-recognize or plate-recognize)");
}

std::string stage_name(Stage s) {
    switch (s) {
        case Stage::PlateDetect: return "plate-detect";
        case Stage::CharDetect: return "char-detect";
        case Stage::CharRecognize: return "char-recognize";
        case Stage::PlateRecognize: return "plate-recognize";
    }
    return "";
}

namespace {

long long truth_count(Stage stage, const synth::ManifestRecord& rec) {
    return stage == Stage::CharDetect || stage == Stage::CharRecognize
               ? static_cast<long long>(rec.truth.glyph_boxes.size())
               : 1;
}

std::string expected_text(Stage stage, const synth::ManifestRecord& rec) {
    if (stage == Stage::PlateRecognize) return std::to_string(rec.truth.identity);
    return rec.truth.plate_text;
}

SceneRecord eval_scene(const synth::ManifestRecord& rec, const std::string& manifest_dir, Stage stage,
                       const RunConfig& cfg, const EvalModels& models) {
    SceneRecord out;
    out.index = rec.index;
    out.image = rec.image;
    out.expected = expected_text(stage, rec);
    const long long n_truth = truth_count(stage, rec);

    imaging::GrayImage scene;
    try {
        scene = imaging::read_image((std::filesystem::path(manifest_dir) / rec.image).string());
    } catch (const Error&) {
        out.status = "read-error";
        out.counts.fn = n_truth;
        return out;
    }

    try {
        switch (stage) {
            case Stage::PlateDetect: {
                const auto loc = detect::locate_plate(scene, cfg.detect);
                if (!loc) {
                    out.status = "no-plate";
                    out.counts.fn = 1;
                    break;
                }
                out.status = "ok";
                out.counts = match_detections({loc->scene_box}, {rec.truth.plate_box}, cfg.eval.iou_min);
                const BBox& b = loc->scene_box;
                out.predicted = std::to_string(b.x) + " " + std::to_string(b.y) + " " + std::to_string(b.w) +
                                " " + std::to_string(b.h);
                const BBox& t = rec.truth.plate_box;
                out.expected = std::to_string(t.x) + " " + std::to_string(t.y) + " " + std::to_string(t.w) +
                               " " + std::to_string(t.h);
                break;
            }
            case Stage::CharDetect: {
                const pipeline::PlateCrops pc = pipeline::read_plate_crops(scene, cfg.detect, cfg.segment);
                std::vector<BBox> boxes;
                for (const auto& c : pc.crops) boxes.push_back(c.source_box);
                out.status = "ok";
                out.counts = match_detections(
                    boxes,
                    pipeline::canonical_glyph_boxes(rec.truth, cfg.detect.plate_out_w, cfg.detect.plate_out_h),
                    cfg.eval.iou_min);
                out.predicted = std::to_string(boxes.size()) + " crops";
                out.expected = std::to_string(rec.truth.glyph_boxes.size()) + " glyphs";
                break;
            }
            case Stage::CharRecognize: {
                const pipeline::CharRecognition r =
                    pipeline::recognize_plate_chars(scene, cfg.detect, cfg.segment, *models.chars);
                std::vector<BBox> boxes;
                for (const auto& c : r.plate.chars) boxes.push_back(c.box);
                const auto truth =
                    pipeline::canonical_glyph_boxes(rec.truth, cfg.detect.plate_out_w, cfg.detect.plate_out_h);
                const auto matches = match_boxes(boxes, truth, cfg.eval.iou_min);
                long long correct = 0;
                for (const Match& m : matches) {
                    if (r.plate.chars[m.predicted].label == rec.truth.labels.at(m.truth)) ++correct;
                }
                // A matched box with the wrong label is both a false positive and a miss.
                out.counts.tp = correct;
                out.counts.fp = static_cast<long long>(boxes.size()) - correct;
                out.counts.fn = static_cast<long long>(truth.size()) - correct;
                out.status = "ok";
                out.predicted = r.plate.text();
                break;
            }
            case Stage::PlateRecognize: {
                const pipeline::PlateIdentity id = pipeline::recognize_whole_plate(scene, cfg.detect, *models.plates);
                out.status = "ok";
                out.predicted = id.unknown ? "unknown(" + std::to_string(id.identity) + ")" : std::to_string(id.identity);
                if (id.unknown) {
                    out.counts.fn = 1;
                } else if (id.identity == rec.truth.identity) {
                    out.counts.tp = 1;
                } else {
                    out.counts.fp = 1;
                    out.counts.fn = 1;
                }
                break;
            }
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NoPlate) {
            out.status = "no-plate";
        } else if (e.code() == ErrorCode::Unreadable) {
            out.status = "unreadable";
        } else {
            throw;
        }
        out.counts = ConfusionCounts{0, 0, n_truth};
    }
    out.exact = out.status == "ok" && out.counts.tp == n_truth && out.counts.fp == 0;
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

EvalReport run_eval(const std::vector<synth::ManifestRecord>& records, const std::string& manifest_dir,
                    Stage stage, const RunConfig& cfg, const EvalModels& models, int parallelism) {
    cfg.validate();
    if (stage == Stage::CharRecognize && !models.chars) {
        fail(ErrorCode::InvalidArgument, "stage char-recognize needs a character model");
    }
    if (stage == Stage::PlateRecognize) {
        if (!models.plates) fail(ErrorCode::InvalidArgument, "stage plate-recognize needs a plate model");
        for (const auto& rec : records) {
            if (rec.truth.identity < 0) {
                fail(ErrorCode::InvalidArgument, "stage plate-recognize needs identities in the manifest");
            }
        }
    }
    EvalReport report;
    report.stage = stage;
    report.scenes.resize(records.size());
    pipeline::parallel_for(records.size(), parallelism, [&](std::size_t i) {
        report.scenes[i] = eval_scene(records[i], manifest_dir, stage, cfg, models);
    });
    for (const SceneRecord& s : report.scenes) {
        report.counts += s.counts;
        report.truth_objects += s.counts.tp + s.counts.fn;
        report.plates_exact += s.exact ? 1 : 0;
    }
    report.plates_total = static_cast<long long>(report.scenes.size());
    report.metrics = metrics(report.counts);
    return report;
}

std::string report_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "FN,FP,TP,Precision,Recall,Accuracy\n";
    out << report.counts.fn << ',' << report.counts.fp << ',' << report.counts.tp << ','
        << display(report.metrics.precision) << ',' << display(report.metrics.recall) << ','
        << display(report.metrics.accuracy) << '\n';
    return out.str();
}

std::string detail_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "index,image,status,fn,fp,tp,exact,predicted,expected\n";
    for (const SceneRecord& s : report.scenes) {
        out << s.index << ',' << csv_field(s.image) << ',' << s.status << ',' << s.counts.fn << ','
            << s.counts.fp << ',' << s.counts.tp << ',' << (s.exact ? 1 : 0) << ',' << csv_field(s.predicted)
            << ',' << csv_field(s.expected) << '\n';
    }
    return out.str();
}

}  // namespace vlpr::evaluate
