#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vlpr/error.hpp"

namespace vlpr::imaging {

struct GrayTag {};
struct MaskTag {};
struct RealTag {};

/// Row-major 2D pixel grid. The tag keeps intensity images and masks from
/// being mixed up at call sites while sharing one storage implementation.
template <typename Pixel, typename Tag>
class Raster {
public:
    using pixel_type = Pixel;

    Raster() = default;

    Raster(int width, int height, Pixel fill = Pixel{})
        : width_(width), height_(height) {
        require(width >= 1 && height >= 1, "image dimensions must be >= 1");
        data_.assign(static_cast<std::size_t>(width) * height, fill);
    }

    Raster(int width, int height, std::vector<Pixel> data)
        : width_(width), height_(height), data_(std::move(data)) {
        require(width >= 1 && height >= 1, "image dimensions must be >= 1");
        require(data_.size() == static_cast<std::size_t>(width) * height,
                "pixel buffer length does not match width * height");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t size() const noexcept { return data_.size(); }

    Pixel& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    const Pixel& at(int x, int y) const {
        return data_[static_cast<std::size_t>(y) * width_ + x];
    }

    Pixel* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_; }
    const Pixel* row(int y) const {
        return data_.data() + static_cast<std::size_t>(y) * width_;
    }

    std::span<Pixel> pixels() { return data_; }
    std::span<const Pixel> pixels() const { return data_; }

    bool operator==(const Raster&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Pixel> data_;
};

/// Intensities in [0,255].
using GrayImage = Raster<std::uint8_t, GrayTag>;
/// Foreground mask, 0 or 1 per pixel.
using BinaryImage = Raster<std::uint8_t, MaskTag>;
/// Real-valued image, used for normalized glyphs.
using RealImage = Raster<double, RealTag>;

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // interleaved R,G,B
};

struct BBox {
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;

    int right() const noexcept { return x + w; }    // exclusive
    int bottom() const noexcept { return y + h; }   // exclusive
    long long area() const noexcept { return static_cast<long long>(w) * h; }

    bool contains(const BBox& other) const noexcept {
        return other.x >= x && other.y >= y && other.right() <= right() &&
               other.bottom() <= bottom();
    }
    bool fits(int width, int height) const noexcept {
        return x >= 0 && y >= 0 && w >= 1 && h >= 1 && right() <= width &&
               bottom() <= height;
    }

    bool operator==(const BBox&) const = default;
};

double iou(const BBox& a, const BBox& b);

struct Component {
    int label = 0;
    long long area = 0;
    BBox box;
};

struct ComponentLabeling {
    int width = 0;
    int height = 0;
    std::vector<int> labels;  // row-major, 0 = background
    std::vector<Component> components;  // components[i].label == i + 1

    int label_at(int x, int y) const {
        return labels[static_cast<std::size_t>(y) * width + x];
    }
};

enum class Polarity { DarkForeground, BrightForeground };

struct EdgeMaps {
    BinaryImage horizontal;  // horizontal edges (intensity changes along y)
    BinaryImage vertical;    // vertical edges (intensity changes along x)
};

GrayImage to_grayscale(const RgbImage& rgb);

/// 3x3 Prewitt responses with replicate border. A pixel is marked when its
/// absolute response is nonzero and at least `threshold` times the largest
/// absolute response of either kernel over the image.
EdgeMaps prewitt_edges(const GrayImage& img, double threshold);

/// Raw signed Prewitt responses, exposed for diagnostics and tests.
struct Gradients {
    int width = 0;
    int height = 0;
    std::vector<int> gx;  // responds to vertical edges
    std::vector<int> gy;  // responds to horizontal edges
};
Gradients prewitt_gradients(const GrayImage& img);

BinaryImage dilate(const BinaryImage& img, int se_w, int se_h);

int otsu_threshold(const GrayImage& img);

BinaryImage binarize(const GrayImage& img, int level, Polarity polarity);

ComponentLabeling connected_components(const BinaryImage& img, int connectivity);

/// Positive angles turn the content counter-clockwise as displayed.
GrayImage rotate_about_center(const GrayImage& img, double angle_deg, std::uint8_t fill);

/// Same rotation about an arbitrary pivot (x, y in pixel coordinates).
GrayImage rotate_about(const GrayImage& img, double angle_deg, double pivot_x,
                       double pivot_y, std::uint8_t fill);

GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h);
RealImage resize_bilinear(const RealImage& img, int out_w, int out_h);

template <typename Pixel, typename Tag>
Raster<Pixel, Tag> crop(const Raster<Pixel, Tag>& img, const BBox& box) {
    if (!box.fits(img.width(), img.height())) {
        fail(ErrorCode::InvalidArgument, "crop box outside image");
    }
    Raster<Pixel, Tag> out(box.w, box.h);
    for (int y = 0; y < box.h; ++y) {
        const Pixel* src = img.row(box.y + y) + box.x;
        std::copy(src, src + box.w, out.row(y));
    }
    return out;
}

long long count_foreground(const BinaryImage& img);

GrayImage mask_to_gray(const BinaryImage& mask);

// Image I/O. PGM (P5, maxval 255) is the bit-exact fixture format.
GrayImage read_pgm(const std::string& path);
void write_pgm(const GrayImage& img, const std::string& path);
GrayImage read_png(const std::string& path);
void write_png(const GrayImage& img, const std::string& path);
/// Dispatches on file signature (P5 or PNG).
GrayImage read_image(const std::string& path);
/// Dispatches on extension (.png, otherwise PGM).
void write_image(const GrayImage& img, const std::string& path);

}  // namespace vlpr::imaging
