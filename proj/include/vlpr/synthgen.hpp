#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vlpr/imaging.hpp"

namespace vlpr::synth {

using imaging::BBox;
using imaging::GrayImage;

inline constexpr int kSceneWidth = 1920;
inline constexpr int kSceneHeight = 1080;

struct SceneSpec {
    std::uint64_t seed = 0;
    std::vector<int> digits;   // class indices, visual left-to-right
    std::vector<int> letters;  // class indices, visual left-to-right
    double skew = 0.0;         // degrees, positive turns the plate counter-clockwise
    int plate_width = 360;     // pixels; plate height is half of it
    int pos_x = 780;           // top-left of the unrotated plate box in the scene
    int pos_y = 450;
    double noise_sigma = 0.0;
    double illumination_slope = 0.0;  // intensity change per 1000 px, left to right
    double clutter_density = 0.0;     // 0..1, scales the number of clutter rectangles
    bool subtitle = false;            // small Latin marks under the characters
    int identity = -1;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct GroundTruth {
    BBox plate_box;                  // unrotated plate box in scene coordinates
    std::array<Point, 4> corners{};  // rotated corners: TL, TR, BR, BL (continuous coords)
    int plate_width = 0;
    int plate_height = 0;
    double skew = 0.0;
    std::vector<int> labels;         // digits then letters, visual order
    std::vector<BBox> glyph_boxes;   // plate coordinates, same order as labels
    std::vector<long long> glyph_ink;  // ink pixel count per glyph before noise
    std::string plate_text;
    int identity = -1;
};

struct RenderedPlate {
    GrayImage image;
    GroundTruth truth;
};

/// Renders the plate face alone (plate_width x plate_width/2), noise applied
/// after rasterization.
RenderedPlate render_plate(const SceneSpec& spec);

/// Composites the plate into a 1920x1080 scene with skew, clutter,
/// illumination gradient and noise.
RenderedPlate render_scene(const SceneSpec& spec);

/// Validates glyph indices, geometry and that the rotated plate lies in frame.
void validate(const SceneSpec& spec);

enum class TextMode { Random, Cycle, Identity };

struct CorpusRanges {
    double skew_min = -10.0;
    double skew_max = 10.0;
    double skew_step = 0.0;  // 0 = continuous
    int plate_width_min = 300;
    int plate_width_max = 440;
    double noise_min = 0.0;
    double noise_max = 4.0;
    double illumination_min = -20.0;
    double illumination_max = 20.0;
    double clutter_min = 0.2;
    double clutter_max = 0.6;
    int digits_min = 3;
    int digits_max = 3;
    int letters_min = 3;
    int letters_max = 3;
    double subtitle_probability = 0.5;
    TextMode text_mode = TextMode::Random;
    int identities = 0;  // TextMode::Identity only
};

void validate(const CorpusRanges& ranges);

/// Deterministic spec for scene `index`, keyed only on (seed, index).
SceneSpec draw_spec(std::uint64_t seed, std::uint64_t index, const CorpusRanges& ranges);

struct ManifestRecord {
    std::uint64_t index = 0;
    std::string image;  // path relative to the manifest directory
    SceneSpec spec;
    GroundTruth truth;
};

/// Writes `n` scenes as PGM plus `manifest.jsonl` into out_dir; returns the
/// manifest path. Output does not depend on `parallelism`.
std::string generate_corpus(std::uint64_t n, std::uint64_t seed, const CorpusRanges& ranges,
                            const std::string& out_dir, std::uint64_t first_index = 0, int parallelism = 1);

std::string manifest_line(const ManifestRecord& record);
ManifestRecord parse_manifest_line(const std::string& line);
std::vector<ManifestRecord> read_manifest(const std::string& path);

/// Layout constants shared with the tests.
struct PlateLayout {
    int border = 0;
    int band_bottom = 0;  // first row below the top band
    int glyph_top = 0;
    int glyph_height = 0;
};
PlateLayout plate_layout(int plate_width);

}  // namespace vlpr::synth
