#pragma once

#include <string>
#include <vector>

#include "vlpr/imaging.hpp"

namespace vlpr::segment {

using imaging::BBox;
using imaging::BinaryImage;
using imaging::GrayImage;

struct SegmentConfig {
    double min_h_frac = 0.25;  // component height / plate height
    double max_h_frac = 0.85;
    double min_aspect = 0.8;   // glyph h / w
    double max_aspect = 6.0;
    int expand_step = 1;       // pixels per expansion ring
    int working_width = 256;
    double subtitle_frac = 0.2;  // components entirely in this bottom fraction are dropped

    void validate() const;
};

struct CharacterCrop {
    BinaryImage mask;  // tight: every border row/column holds foreground
    BBox source_box;   // plate coordinates
    int order = 0;     // 0 = leftmost
};

/// Binarize, repair, label, filter and tight-crop the characters of a plate.
/// Crops come back sorted left to right.
std::vector<CharacterCrop> segment_characters(const GrayImage& plate, const SegmentConfig& cfg);

/// Minimal foreground bounding box of `mask` inside `box`. Throws when the
/// box holds no foreground.
CharacterCrop tight_crop(const BinaryImage& mask, const BBox& box);

/// Ordered crops side by side, separated by a gray column.
GrayImage crop_strip(const std::vector<CharacterCrop>& crops);

}  // namespace vlpr::segment
