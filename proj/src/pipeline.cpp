#include "vlpr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "vlpr/alphabet.hpp"

namespace vlpr::pipeline {

void parallel_for(std::size_t n, int parallelism, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, parallelism)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::mutex mu;
    std::size_t next = 0;
    std::size_t failed_at = n;
    std::exception_ptr error;
    auto work = [&] {
        while (true) {
            std::size_t i;
            {
                std::lock_guard lock(mu);
                if (next >= n) return;
                i = next++;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (i < failed_at) {
                    failed_at = i;
                    error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

void CharTrainConfig::validate() const {
    require(exemplars_per_class >= 1, "train.exemplars_per_class must be >= 1");
    require(pca_components >= 1, "features.pca_components must be >= 1");
    require(norm_w >= 4 && norm_h >= 4, "features.norm_w and features.norm_h must be >= 4");
    require(knn_k >= 1 && knn_k % 2 == 1, "classify.knn_k must be odd and >= 1");
}

void CharModel::validate() const {
    pca.validate();
    knn.validate();
    require(knn.dim() == pca.components(), "knn dimension differs from the pca component count");
}

void PlateModel::validate() const {
    dct.validate();
    svm.validate();
    require(svm.dim() == dct.dim(), "svm dimension differs from the dct feature length");
    require(std::isfinite(unknown_margin) && unknown_margin >= 0.0, "unknown margin must be >= 0");
}

PlateCrops read_plate_crops(const GrayImage& scene, const detect::DetectConfig& det,
                            const segment::SegmentConfig& seg) {
    const std::optional<detect::PlateLocation> loc = detect::locate_plate(scene, det);
    if (!loc) {
        fail(ErrorCode::NoPlate, "no plate found");
    }
    PlateCrops out;
    out.location = *loc;
    out.plate = detect::extract_plate(scene, *loc, det);
    out.crops = segment::segment_characters(out.plate, seg);
    if (!det.debug_dir.empty()) {
        const std::filesystem::path dir(det.debug_dir);
        imaging::write_png(out.plate, (dir / "plate.png").string());
        imaging::write_png(segment::crop_strip(out.crops), (dir / "crops.png").string());
    }
    return out;
}

std::vector<BBox> canonical_glyph_boxes(const synth::GroundTruth& truth, int plate_w, int plate_h) {
    require(truth.plate_width > 0 && truth.plate_height > 0, "ground truth plate size must be positive");
    const double sx = static_cast<double>(plate_w) / truth.plate_width;
    const double sy = static_cast<double>(plate_h) / truth.plate_height;
    std::vector<BBox> out;
    for (const BBox& g : truth.glyph_boxes) {
        const int x0 = static_cast<int>(std::lround(g.x * sx));
        const int y0 = static_cast<int>(std::lround(g.y * sy));
        const int x1 = static_cast<int>(std::lround(g.right() * sx));
        const int y1 = static_cast<int>(std::lround(g.bottom() * sy));
        out.push_back(BBox{x0, y0, std::max(1, x1 - x0), std::max(1, y1 - y0)});
    }
    return out;
}

namespace {

std::vector<double> normalized_pixels(const segment::CharacterCrop& crop, int w, int h) {
    const imaging::RealImage img = features::normalize_character(crop.mask, w, h);
    const auto px = img.pixels();
    return {px.begin(), px.end()};
}

GrayImage load_record_image(const synth::ManifestRecord& rec, const std::string& manifest_dir) {
    const std::filesystem::path p = std::filesystem::path(manifest_dir) / rec.image;
    return imaging::read_image(p.string());
}

}  // namespace

std::vector<CharSample> collect_char_samples(const std::vector<synth::ManifestRecord>& records,
                                             const std::string& manifest_dir,
                                             const detect::DetectConfig& det,
                                             const segment::SegmentConfig& seg,
                                             const CharTrainConfig& cfg) {
    cfg.validate();
    std::vector<int> per_class(LabelAlphabet::kSize, 0);
    std::vector<CharSample> samples;
    for (const synth::ManifestRecord& rec : records) {
        const bool done = std::all_of(per_class.begin(), per_class.end(),
                                      [&](int c) { return c >= cfg.exemplars_per_class; });
        if (done) break;
        const GrayImage scene = load_record_image(rec, manifest_dir);
        PlateCrops pc;
        try {
            pc = read_plate_crops(scene, det, seg);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::NoPlate) continue;
            throw;
        }
        const std::vector<BBox> truth = canonical_glyph_boxes(rec.truth, det.plate_out_w, det.plate_out_h);
        for (const segment::CharacterCrop& crop : pc.crops) {
            std::size_t best = truth.size();
            double best_iou = 0.5;
            for (std::size_t g = 0; g < truth.size(); ++g) {
                const double v = imaging::iou(crop.source_box, truth[g]);
                if (v >= best_iou) {
                    best_iou = v;
                    best = g;
                }
            }
            if (best == truth.size()) continue;
            const int label = rec.truth.labels.at(best);
            if (per_class.at(label) >= cfg.exemplars_per_class) continue;
            ++per_class[label];
            samples.push_back(CharSample{normalized_pixels(crop, cfg.norm_w, cfg.norm_h), label});
        }
    }
    return samples;
}

CharModel train_char_model(const std::vector<CharSample>& samples, const CharTrainConfig& cfg) {
    cfg.validate();
    std::vector<int> per_class(LabelAlphabet::kSize, 0);
    for (const CharSample& s : samples) {
        require(s.label >= 0 && s.label < LabelAlphabet::kSize, "training label out of range");
        ++per_class[s.label];
    }
    for (int c = 0; c < LabelAlphabet::kSize; ++c) {
        if (per_class[c] == 0) {
            fail(ErrorCode::Degenerate,
                 "no training exemplars for class '" + std::string(LabelAlphabet::at(c).id) + "'");
        }
    }
    std::vector<std::vector<double>> X;
    std::vector<int> labels;
    for (const CharSample& s : samples) {
        X.push_back(s.pixels);
        labels.push_back(s.label);
    }
    CharModel model;
    model.pca = features::pca_fit(X, cfg.pca_components, cfg.norm_w, cfg.norm_h);
    classify::Matrix proj;
    proj.reserve(X.size());
    for (const auto& x : X) proj.push_back(features::pca_project(model.pca, x));
    model.knn = classify::knn_fit(std::move(proj), std::move(labels), cfg.metric, cfg.knn_k);
    return model;
}

std::string PlateString::text() const { return LabelAlphabet::render(digits, letters); }

std::vector<int> PlateString::labels() const {
    std::vector<int> out = digits;
    out.insert(out.end(), letters.begin(), letters.end());
    return out;
}

PlateString assemble_plate_string(std::vector<RecognizedChar> chars) {
    if (chars.empty()) {
        fail(ErrorCode::InvalidArgument, "assemble_plate_string: no characters");
    }
    std::stable_sort(chars.begin(), chars.end(),
                     [](const RecognizedChar& a, const RecognizedChar& b) { return a.box.x < b.box.x; });
    PlateString ps;
    if (chars.size() == 1) {
        // One group; its kind decides which.
        ps.split = LabelAlphabet::is_digit(chars[0].label) ? 1 : 0;
    } else {
        int widest = std::numeric_limits<int>::min();
        for (std::size_t i = 0; i + 1 < chars.size(); ++i) {
            const int gap = chars[i + 1].box.x - chars[i].box.right();
            if (gap > widest) {
                widest = gap;
                ps.split = i + 1;
            }
        }
    }
    for (std::size_t i = 0; i < chars.size(); ++i) {
        RecognizedChar& c = chars[i];
        const bool digit_zone = i < ps.split;
        c.flagged = digit_zone ? !LabelAlphabet::is_digit(c.label) : !LabelAlphabet::is_letter(c.label);
        (digit_zone ? ps.digits : ps.letters).push_back(c.label);
    }
    ps.chars = std::move(chars);
    return ps;
}

CharRecognition recognize_plate_chars(const GrayImage& scene, const detect::DetectConfig& det,
                                      const segment::SegmentConfig& seg, const CharModel& model) {
    PlateCrops pc = read_plate_crops(scene, det, seg);
    std::vector<RecognizedChar> accepted;
    int rejected = 0;
    for (const segment::CharacterCrop& crop : pc.crops) {
        const std::vector<double> px = normalized_pixels(crop, model.pca.input_w, model.pca.input_h);
        const std::vector<double> f = features::pca_project(model.pca, px);
        const classify::KnnResult r = classify::knn_classify(model.knn, f);
        if (model.knn.reject_threshold && r.distance > *model.knn.reject_threshold) {
            ++rejected;
            continue;
        }
        accepted.push_back(RecognizedChar{r.label, crop.source_box, r.distance, false});
    }
    if (accepted.empty()) {
        fail(ErrorCode::Unreadable, "unreadable plate");
    }
    CharRecognition out;
    out.location = pc.location;
    out.plate = assemble_plate_string(std::move(accepted));
    out.plate.rejected = rejected;
    out.crops = std::move(pc.crops);
    return out;
}

PlateModel enroll_gallery(const std::vector<GrayImage>& plates, const std::vector<int>& identities,
                          const features::DctConfig& dct, double reg_c, int epochs,
                          double unknown_fraction) {
    dct.validate();
    require(plates.size() == identities.size(), "enroll_gallery: plates and identities differ in count");
    std::map<int, int> views;
    for (int id : identities) ++views[id];
    if (views.size() < 2) {
        fail(ErrorCode::Degenerate, "enroll_gallery needs at least 2 identities");
    }
    for (const auto& [id, n] : views) {
        if (n < 2) {
            fail(ErrorCode::Degenerate, "identity " + std::to_string(id) + " has fewer than 2 views");
        }
    }
    classify::Matrix X;
    X.reserve(plates.size());
    for (const GrayImage& p : plates) X.push_back(features::dct_features(p, dct).values);
    PlateModel model;
    model.dct = dct;
    model.svm = classify::svm_train(X, identities, reg_c, epochs);
    require(unknown_fraction >= 0.0 && std::isfinite(unknown_fraction), "unknown_fraction must be >= 0");
    // Margins grow with the gallery, so the threshold is relative to the
    // median margin of the enrolled views themselves.
    std::vector<double> margins;
    margins.reserve(X.size());
    for (const auto& x : X) margins.push_back(classify::svm_predict(model.svm, x).margin);
    std::sort(margins.begin(), margins.end());
    const std::size_t n = margins.size();
    const double median = n % 2 ? margins[n / 2] : 0.5 * (margins[n / 2 - 1] + margins[n / 2]);
    model.unknown_margin = unknown_fraction * median;
    return model;
}

PlateIdentity identify_plate(const GrayImage& plate, const PlateModel& model) {
    const features::FeatureVector fv = features::dct_features(plate, model.dct);
    const classify::SvmResult r = classify::svm_predict(model.svm, fv.values);
    PlateIdentity out;
    out.identity = r.label;
    out.margin = r.margin;
    out.unknown = r.margin < model.unknown_margin;
    return out;
}

PlateIdentity recognize_whole_plate(const GrayImage& scene, const detect::DetectConfig& det,
                                    const PlateModel& model) {
    const std::optional<detect::PlateLocation> loc = detect::locate_plate(scene, det);
    if (!loc) {
        fail(ErrorCode::NoPlate, "no plate found");
    }
    PlateIdentity out = identify_plate(detect::extract_plate(scene, *loc, det), model);
    out.location = *loc;
    return out;
}

PlateSamples collect_plate_samples(const std::vector<synth::ManifestRecord>& records,
                                   const std::string& manifest_dir, const detect::DetectConfig& det,
                                   int parallelism) {
    std::vector<std::optional<GrayImage>> found(records.size());
    parallel_for(records.size(), parallelism, [&](std::size_t i) {
        const GrayImage scene = load_record_image(records[i], manifest_dir);
        if (const auto loc = detect::locate_plate(scene, det)) {
            found[i] = detect::extract_plate(scene, *loc, det);
        }
    });
    PlateSamples out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!found[i]) continue;
        out.plates.push_back(std::move(*found[i]));
        out.identities.push_back(records[i].truth.identity);
        out.records.push_back(i);
    }
    return out;
}

}  // namespace vlpr::pipeline
