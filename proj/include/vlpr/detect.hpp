#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vlpr/imaging.hpp"

namespace vlpr::detect {

using imaging::BBox;
using imaging::GrayImage;

struct DetectConfig {
    double aspect_ratio = 2.0;      // expected plate width / height
    double aspect_tol = 0.25;       // relative band around aspect_ratio
    int min_plate_w = 120;          // pixels
    double sweep_max = 10.0;        // degrees
    double sweep_step = 0.5;        // degrees
    double prewitt_threshold = 0.25;
    int max_candidates = 8;
    int min_text_strokes = 4;       // stroke edges an accepted plate must show
    int plate_out_w = 256;          // canonical extracted plate
    int plate_out_h = 128;
    std::string debug_dir;          // empty = no debug artifacts

    void validate() const;
};

struct PlateCandidate {
    BBox box;            // axis-aligned extent of the plate outline in the scene
    double angle = 0.0;  // alignment angle once estimated
    double score = 0.0;  // fraction of the outline perimeter backed by edge pixels
    double skew_estimate = 0.0;  // from the bridging line's orientation
};

/// Plate candidates sorted by descending score.
std::vector<PlateCandidate> find_plate_candidates(const GrayImage& img, const DetectConfig& cfg);

struct SweepStep {
    double angle = 0.0;
    bool found = false;        // internal line detected at this angle
    double height_diff = 0.0;  // |left end row - right end row|, pixels at sweep scale
};

/// Every evaluated angle from +sweep_max down to -sweep_max.
std::vector<SweepStep> alignment_sweep(const GrayImage& img, const PlateCandidate& cand,
                                       const DetectConfig& cfg);

/// Rotation (degrees) that levels the plate's internal horizontal line.
/// Throws ErrorCode::AlignmentNotFound when no angle shows the line.
double alignment_angle(const GrayImage& img, const PlateCandidate& cand, const DetectConfig& cfg);

/// A plate after alignment. `aligned_box` lives in the frame obtained by
/// rotating the scene by `angle` about (pivot_x, pivot_y); `scene_box` is the
/// same rectangle expressed as an unrotated box around the plate centre in
/// scene coordinates.
struct PlateLocation {
    PlateCandidate candidate;
    double angle = 0.0;
    double pivot_x = 0.0;
    double pivot_y = 0.0;
    BBox aligned_box;
    BBox scene_box;
};

/// Re-locates the plate borders after rotating by `angle`.
PlateLocation relocate(const GrayImage& img, const PlateCandidate& cand, double angle,
                       const DetectConfig& cfg);

/// Rotates, crops the aligned box and resizes to the canonical resolution.
GrayImage extract_plate(const GrayImage& img, const PlateLocation& loc, const DetectConfig& cfg);

/// relocate + extract in one call.
GrayImage extract_plate(const GrayImage& img, const PlateCandidate& cand, double angle,
                        const DetectConfig& cfg);

/// Vertical stroke edges in the character zone of an extracted plate.
int text_strokes(const GrayImage& plate);

/// Walks candidates in score order and returns the first that aligns and
/// shows at least cfg.min_text_strokes stroke edges.
std::optional<PlateLocation> locate_plate(const GrayImage& img, const DetectConfig& cfg);

/// Writes edge maps and a candidate overlay into cfg.debug_dir.
void write_debug_artifacts(const GrayImage& img, const std::vector<PlateCandidate>& cands,
                           const DetectConfig& cfg, const std::string& tag);

}  // namespace vlpr::detect
