#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vlpr/classify.hpp"
#include "vlpr/detect.hpp"
#include "vlpr/features.hpp"
#include "vlpr/segment.hpp"
#include "vlpr/synthgen.hpp"

namespace vlpr::pipeline {

using imaging::BBox;
using imaging::GrayImage;

/// PCA + KNN character recognizer.
struct CharModel {
    features::PcaModel pca;
    classify::KnnModel knn;

    void validate() const;
};

struct CharTrainConfig {
    int exemplars_per_class = 10;
    int pca_components = 40;
    int norm_w = 24;
    int norm_h = 24;
    classify::Metric metric = classify::Metric::Euclidean;
    int knn_k = 1;

    void validate() const;
};

struct CharSample {
    std::vector<double> pixels;  // normalized glyph, row-major
    int label = -1;
};

/// Plate located, extracted and segmented; no recognition yet.
struct PlateCrops {
    detect::PlateLocation location;
    GrayImage plate;  // canonical resolution
    std::vector<segment::CharacterCrop> crops;
};

/// Throws ErrorCode::NoPlate when no candidate survives.
PlateCrops read_plate_crops(const GrayImage& scene, const detect::DetectConfig& det,
                            const segment::SegmentConfig& seg);

/// Ground-truth glyph boxes mapped onto the canonical plate.
std::vector<BBox> canonical_glyph_boxes(const synth::GroundTruth& truth, int plate_w, int plate_h);

/// Labelled, normalized crops from a training manifest: detected crops that
/// match a ground-truth glyph at IoU >= 0.5 take its label. At most
/// `per_class` samples per class, in manifest order.
std::vector<CharSample> collect_char_samples(const std::vector<synth::ManifestRecord>& records,
                                             const std::string& manifest_dir,
                                             const detect::DetectConfig& det,
                                             const segment::SegmentConfig& seg,
                                             const CharTrainConfig& cfg);

/// Fits PCA over the samples and a KNN over their projections. Every class
/// of the alphabet must be represented.
CharModel train_char_model(const std::vector<CharSample>& samples, const CharTrainConfig& cfg);

struct RecognizedChar {
    int label = -1;
    BBox box;               // canonical plate coordinates
    double distance = 0.0;  // to the nearest training vector of `label`
    bool flagged = false;   // kind does not match its zone
};

struct PlateString {
    std::vector<int> digits;   // visual left-to-right
    std::vector<int> letters;  // visual left-to-right
    std::vector<RecognizedChar> chars;  // accepted characters, left to right
    std::size_t split = 0;     // chars[0, split) form the digit group
    int rejected = 0;          // crops dropped by the reject threshold

    std::string text() const;
    std::vector<int> labels() const;  // digits then letters
};

/// Splits at the widest gap between adjacent boxes (ties to the leftmost).
/// Throws on empty input.
PlateString assemble_plate_string(std::vector<RecognizedChar> chars);

struct CharRecognition {
    detect::PlateLocation location;
    PlateString plate;
    std::vector<segment::CharacterCrop> crops;  // all crops, before rejection
};

/// detect -> extract -> segment -> PCA + KNN per crop -> plate string.
/// Throws NoPlate ("no plate found") or Unreadable ("unreadable plate").
CharRecognition recognize_plate_chars(const GrayImage& scene, const detect::DetectConfig& det,
                                      const segment::SegmentConfig& seg, const CharModel& model);

/// Whole-plate identity recognizer: DCT features + linear SVM.
struct PlateModel {
    features::DctConfig dct;
    classify::SvmModel svm;
    double unknown_margin = 0.0;  // below this the identity is flagged unknown

    void validate() const;
};

/// Throws unless there are >= 2 identities with >= 2 views each. The unknown
/// threshold is unknown_fraction times the median margin over the gallery.
PlateModel enroll_gallery(const std::vector<GrayImage>& plates, const std::vector<int>& identities,
                          const features::DctConfig& dct, double reg_c, int epochs,
                          double unknown_fraction);

struct PlateIdentity {
    int identity = -1;
    double margin = 0.0;
    bool unknown = false;
    detect::PlateLocation location;
};

PlateIdentity identify_plate(const GrayImage& plate, const PlateModel& model);
PlateIdentity recognize_whole_plate(const GrayImage& scene, const detect::DetectConfig& det,
                                    const PlateModel& model);

/// Extracted plates for every record whose scene yields a plate; identities
/// from the manifest. Scenes without a plate are skipped.
struct PlateSamples {
    std::vector<GrayImage> plates;
    std::vector<int> identities;
    std::vector<std::size_t> records;  // index into the manifest
};
PlateSamples collect_plate_samples(const std::vector<synth::ManifestRecord>& records,
                                   const std::string& manifest_dir, const detect::DetectConfig& det,
                                   int parallelism = 1);

/// Runs fn(i) for i in [0, n) on up to `parallelism` threads. Exceptions
/// propagate from the lowest failing index.
void parallel_for(std::size_t n, int parallelism, const std::function<void(std::size_t)>& fn);

}  // namespace vlpr::pipeline
