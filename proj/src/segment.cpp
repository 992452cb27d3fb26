#include "vlpr/segment.hpp"

#include <algorithm>
#include <cmath>

namespace vlpr::segment {

void SegmentConfig::validate() const {
    require(min_h_frac > 0.0 && min_h_frac < max_h_frac && max_h_frac <= 1.0,
            "segment height fractions must satisfy 0 < min < max <= 1");
    require(min_aspect > 0.0 && min_aspect < max_aspect, "segment aspect bounds must satisfy 0 < min < max");
    require(expand_step >= 1, "segment.expand_step must be >= 1");
    require(working_width >= 16, "segment.working_width must be >= 16");
    require(subtitle_frac >= 0.0 && subtitle_frac < 1.0, "segment.subtitle_frac must be in [0,1)");
}

CharacterCrop tight_crop(const BinaryImage& mask, const BBox& box) {
    require(box.w > 0 && box.h > 0 && box.fits(mask.width(), mask.height()),
            "crop box outside mask");
    int x0 = box.right();
    int y0 = box.bottom();
    int x1 = box.x - 1;
    int y1 = box.y - 1;
    for (int y = box.y; y < box.bottom(); ++y) {
        const std::uint8_t* row = mask.row(y);
        for (int x = box.x; x < box.right(); ++x) {
            if (!row[x]) continue;
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    if (x1 < x0) {
        fail(ErrorCode::InvalidArgument, "tight_crop: box holds no foreground");
    }
    CharacterCrop crop;
    crop.source_box = BBox{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
    crop.mask = imaging::crop(mask, crop.source_box);
    return crop;
}

namespace {

long long count_in(const BinaryImage& mask, const BBox& b) {
    long long n = 0;
    for (int y = b.y; y < b.bottom(); ++y) {
        const std::uint8_t* row = mask.row(y);
        for (int x = b.x; x < b.right(); ++x) n += row[x] ? 1 : 0;
    }
    return n;
}

BBox grow(const BBox& b, int step, int w, int h) {
    const int x0 = std::max(0, b.x - step);
    const int y0 = std::max(0, b.y - step);
    const int x1 = std::min(w, b.right() + step);
    const int y1 = std::min(h, b.bottom() + step);
    return BBox{x0, y0, x1 - x0, y1 - y0};
}

bool strictly_contains(const BBox& outer, const BBox& inner) {
    return outer.x <= inner.x && outer.y <= inner.y && outer.right() >= inner.right() &&
           outer.bottom() >= inner.bottom() && !(outer.x == inner.x && outer.y == inner.y &&
                                                 outer.w == inner.w && outer.h == inner.h);
}

}  // namespace

std::vector<CharacterCrop> segment_characters(const GrayImage& plate, const SegmentConfig& cfg) {
    cfg.validate();
    GrayImage work = plate;
    if (plate.width() != cfg.working_width) {
        const int h = std::max(1, static_cast<int>(std::lround(
                                      static_cast<double>(plate.height()) * cfg.working_width / plate.width())));
        work = imaging::resize_bilinear(plate, cfg.working_width, h);
    }
    const auto px = work.pixels();
    const auto [lo, hi] = std::minmax_element(px.begin(), px.end());
    if (*lo == *hi) return {};

    const int level = imaging::otsu_threshold(work);
    const BinaryImage mask = imaging::binarize(work, level, imaging::Polarity::DarkForeground);
    const BinaryImage repaired = imaging::dilate(mask, 3, 3);
    const imaging::ComponentLabeling lab = imaging::connected_components(repaired, 8);

    const int W = work.width();
    const int H = work.height();
    const double subtitle_top = (1.0 - cfg.subtitle_frac) * H;
    std::vector<CharacterCrop> crops;
    for (const auto& comp : lab.components) {
        const BBox& b = comp.box;
        const double hf = static_cast<double>(b.h) / H;
        const double aspect = static_cast<double>(b.h) / b.w;
        if (hf < cfg.min_h_frac || hf > cfg.max_h_frac) continue;
        if (aspect < cfg.min_aspect || aspect > cfg.max_aspect) continue;
        if (b.y >= subtitle_top) continue;

        // Grow until a whole ring adds no foreground of the unrepaired mask.
        BBox box = b;
        long long count = count_in(mask, box);
        while (true) {
            const BBox next = grow(box, cfg.expand_step, W, H);
            if (next.w == box.w && next.h == box.h) break;
            const long long n = count_in(mask, next);
            if (n == count) break;
            box = next;
            count = n;
        }
        if (count == 0) continue;
        crops.push_back(tight_crop(mask, box));
    }

    // Keep outermost crops only.
    std::vector<CharacterCrop> kept;
    for (std::size_t i = 0; i < crops.size(); ++i) {
        bool drop = false;
        for (std::size_t j = 0; j < crops.size() && !drop; ++j) {
            if (i == j) continue;
            const BBox& a = crops[i].source_box;
            const BBox& b = crops[j].source_box;
            const bool same = a.x == b.x && a.y == b.y && a.w == b.w && a.h == b.h;
            drop = strictly_contains(b, a) || (same && j < i);
        }
        if (!drop) kept.push_back(std::move(crops[i]));
    }

    std::sort(kept.begin(), kept.end(), [](const CharacterCrop& a, const CharacterCrop& b) {
        if (a.source_box.x != b.source_box.x) return a.source_box.x < b.source_box.x;
        return a.source_box.y < b.source_box.y;
    });

    if (W != plate.width()) {
        // Report boxes in the caller's plate coordinates.
        const double sx = static_cast<double>(plate.width()) / W;
        const double sy = static_cast<double>(plate.height()) / H;
        for (CharacterCrop& c : kept) {
            const int x0 = static_cast<int>(std::floor(c.source_box.x * sx));
            const int y0 = static_cast<int>(std::floor(c.source_box.y * sy));
            const int x1 = std::min(plate.width(), static_cast<int>(std::ceil(c.source_box.right() * sx)));
            const int y1 = std::min(plate.height(), static_cast<int>(std::ceil(c.source_box.bottom() * sy)));
            c.source_box = BBox{x0, y0, std::max(1, x1 - x0), std::max(1, y1 - y0)};
        }
    }
    for (std::size_t i = 0; i < kept.size(); ++i) kept[i].order = static_cast<int>(i);
    return kept;
}

GrayImage crop_strip(const std::vector<CharacterCrop>& crops) {
    if (crops.empty()) return GrayImage(1, 1, 255);
    int width = 0;
    int height = 0;
    for (const CharacterCrop& c : crops) {
        width += c.mask.width() + 2;
        height = std::max(height, c.mask.height());
    }
    GrayImage strip(width, height, 255);
    int x = 0;
    for (const CharacterCrop& c : crops) {
        for (int y = 0; y < c.mask.height(); ++y) {
            for (int i = 0; i < c.mask.width(); ++i) strip.at(x + i, y) = c.mask.at(i, y) ? 0 : 255;
        }
        x += c.mask.width();
        for (int y = 0; y < height; ++y) {
            strip.at(x, y) = 128;
            strip.at(x + 1, y) = 128;
        }
        x += 2;
    }
    return strip;
}

}  // namespace vlpr::segment
