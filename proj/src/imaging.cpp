#include "vlpr/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

namespace vlpr::imaging {

double iou(const BBox& a, const BBox& b) {
    const int ix0 = std::max(a.x, b.x);
    const int iy0 = std::max(a.y, b.y);
    const int ix1 = std::min(a.right(), b.right());
    const int iy1 = std::min(a.bottom(), b.bottom());
    if (ix1 <= ix0 || iy1 <= iy0) {
        return 0.0;
    }
    const double inter = static_cast<double>(ix1 - ix0) * (iy1 - iy0);
    return inter / (static_cast<double>(a.area()) + static_cast<double>(b.area()) - inter);
}

GrayImage to_grayscale(const RgbImage& rgb) {
    if (rgb.width <= 0 || rgb.height <= 0 || rgb.data.empty()) {
        fail(ErrorCode::InvalidArgument, "empty input");
    }
    require(rgb.data.size() == static_cast<std::size_t>(rgb.width) * rgb.height * 3,
            "rgb buffer length does not match width * height * 3");
    GrayImage out(rgb.width, rgb.height);
    auto dst = out.pixels();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const int r = rgb.data[3 * i];
        const int g = rgb.data[3 * i + 1];
        const int b = rgb.data[3 * i + 2];
        // ITU-R 601 luma, rounded half-up in integer arithmetic.
        const int luma = (299 * r + 587 * g + 114 * b + 500) / 1000;
        dst[i] = static_cast<std::uint8_t>(std::clamp(luma, 0, 255));
    }
    return out;
}

namespace {

// Calls f(y, gx_row, gy_row) for every row; replicate border.
template <typename F>
void prewitt_rows(const GrayImage& img, F&& f) {
    const int w = img.width();
    const int h = img.height();
    if (w < 3 || h < 3) {
        fail(ErrorCode::InvalidArgument, "prewitt needs an image of at least 3x3");
    }
    // Column sums over rows y-1..y+1 and row differences.
    std::vector<int> colsum(w);
    std::vector<int> coldiff(w);
    std::vector<int> gx(w);
    std::vector<int> gy(w);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* up = img.row(std::max(y - 1, 0));
        const std::uint8_t* mid = img.row(y);
        const std::uint8_t* down = img.row(std::min(y + 1, h - 1));
        for (int x = 0; x < w; ++x) {
            colsum[x] = up[x] + mid[x] + down[x];
            coldiff[x] = down[x] - up[x];
        }
        gx[0] = colsum[1] - colsum[0];
        gy[0] = 2 * coldiff[0] + coldiff[1];
        for (int x = 1; x < w - 1; ++x) {
            gx[x] = colsum[x + 1] - colsum[x - 1];
            gy[x] = coldiff[x - 1] + coldiff[x] + coldiff[x + 1];
        }
        gx[w - 1] = colsum[w - 1] - colsum[w - 2];
        gy[w - 1] = coldiff[w - 2] + 2 * coldiff[w - 1];
        f(y, gx.data(), gy.data());
    }
}

}  // namespace

Gradients prewitt_gradients(const GrayImage& img) {
    Gradients g;
    g.width = img.width();
    g.height = img.height();
    const std::size_t w = g.width;
    g.gx.resize(w * g.height);
    g.gy.resize(w * g.height);
    prewitt_rows(img, [&](int y, const int* gx, const int* gy) {
        std::copy(gx, gx + w, g.gx.begin() + y * w);
        std::copy(gy, gy + w, g.gy.begin() + y * w);
    });
    return g;
}

EdgeMaps prewitt_edges(const GrayImage& img, double threshold) {
    require(threshold > 0.0 && threshold <= 1.0, "prewitt threshold must be in (0,1]");
    const int w = img.width();
    int max_abs = 0;
    prewitt_rows(img, [&](int, const int* gx, const int* gy) {
        int m = max_abs;
        for (int x = 0; x < w; ++x) {
            m = std::max(m, std::max(std::abs(gx[x]), std::abs(gy[x])));
        }
        max_abs = m;
    });
    EdgeMaps maps{BinaryImage(w, img.height()), BinaryImage(w, img.height())};
    // |g| >= threshold * max, and never a zero response.
    const int cut = std::max(1, static_cast<int>(std::ceil(threshold * max_abs)));
    prewitt_rows(img, [&](int y, const int* gx, const int* gy) {
        std::uint8_t* hor = maps.horizontal.row(y);
        std::uint8_t* ver = maps.vertical.row(y);
        for (int x = 0; x < w; ++x) {
            ver[x] = std::abs(gx[x]) >= cut ? 1 : 0;
            hor[x] = std::abs(gy[x]) >= cut ? 1 : 0;
        }
    });
    return maps;
}

BinaryImage dilate(const BinaryImage& img, int se_w, int se_h) {
    require(se_w >= 1 && se_h >= 1, "structuring element dimensions must be >= 1");
    if (se_w % 2 == 0 || se_h % 2 == 0) {
        fail(ErrorCode::InvalidArgument, "structuring element dimensions must be odd");
    }
    const int w = img.width();
    const int h = img.height();
    const int rx = se_w / 2;
    const int ry = se_h / 2;

    // Horizontal pass: running count of set pixels within the window.
    BinaryImage tmp(w, h);
    std::vector<int> prefix(w + 1);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* src = img.row(y);
        prefix[0] = 0;
        for (int x = 0; x < w; ++x) {
            prefix[x + 1] = prefix[x] + (src[x] ? 1 : 0);
        }
        std::uint8_t* dst = tmp.row(y);
        for (int x = 0; x < w; ++x) {
            const int lo = std::max(x - rx, 0);
            const int hi = std::min(x + rx, w - 1);
            dst[x] = prefix[hi + 1] - prefix[lo] > 0 ? 1 : 0;
        }
    }
    if (ry == 0) {
        return tmp;
    }

    BinaryImage out(w, h);
    std::vector<int> count(w, 0);
    // Window rows [y - ry, y + ry]; maintain per-column counts incrementally.
    for (int y = 0; y <= std::min(ry - 1, h - 1); ++y) {
        const std::uint8_t* src = tmp.row(y);
        for (int x = 0; x < w; ++x) count[x] += src[x];
    }
    for (int y = 0; y < h; ++y) {
        const int add = y + ry;
        if (add < h) {
            const std::uint8_t* src = tmp.row(add);
            for (int x = 0; x < w; ++x) count[x] += src[x];
        }
        const int drop = y - ry - 1;
        if (drop >= 0) {
            const std::uint8_t* src = tmp.row(drop);
            for (int x = 0; x < w; ++x) count[x] -= src[x];
        }
        std::uint8_t* dst = out.row(y);
        for (int x = 0; x < w; ++x) dst[x] = count[x] > 0 ? 1 : 0;
    }
    return out;
}

int otsu_threshold(const GrayImage& img) {
    require(!img.empty(), "otsu needs a nonempty image");
    std::array<long long, 256> hist{};
    for (std::uint8_t v : img.pixels()) ++hist[v];

    const int occupied = static_cast<int>(
        std::count_if(hist.begin(), hist.end(), [](long long c) { return c > 0; }));
    if (occupied < 2) {
        fail(ErrorCode::Degenerate, "degenerate histogram");
    }

    long long total = 0;
    long long total_sum = 0;
    for (int i = 0; i < 256; ++i) {
        total += hist[i];
        total_sum += static_cast<long long>(i) * hist[i];
    }

    // Between-class variance up to the constant 1/N^2:
    //   (S*n0 - N*s0)^2 / (n0 * n1)
    // The numerator is exact in 64-bit integers, so equal splits compare equal.
    double best = -1.0;
    int best_level = 0;
    long long n0 = 0;
    long long s0 = 0;
    for (int t = 0; t < 256; ++t) {
        n0 += hist[t];
        s0 += static_cast<long long>(t) * hist[t];
        const long long n1 = total - n0;
        if (n0 == 0 || n1 == 0) {
            continue;
        }
        const double diff = static_cast<double>(total_sum * n0 - total * s0);
        const double score = diff * diff / (static_cast<double>(n0) * static_cast<double>(n1));
        if (score > best) {
            best = score;
            best_level = t;
        }
    }
    return best_level;
}

BinaryImage binarize(const GrayImage& img, int level, Polarity polarity) {
    require(level >= 0 && level <= 255, "binarize level must be in [0,255]");
    BinaryImage out(img.width(), img.height());
    auto src = img.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = polarity == Polarity::DarkForeground ? (src[i] <= level) : (src[i] > level);
    }
    return out;
}

namespace {

int find_root(std::vector<int>& parent, int i) {
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

void unite(std::vector<int>& parent, int a, int b) {
    a = find_root(parent, a);
    b = find_root(parent, b);
    if (a == b) return;
    if (a < b) {
        parent[b] = a;
    } else {
        parent[a] = b;
    }
}

}  // namespace

ComponentLabeling connected_components(const BinaryImage& img, int connectivity) {
    require(connectivity == 4 || connectivity == 8, "connectivity must be 4 or 8");
    const int w = img.width();
    const int h = img.height();
    ComponentLabeling result;
    result.width = w;
    result.height = h;
    result.labels.assign(static_cast<std::size_t>(w) * h, 0);

    std::vector<int> parent{0};
    auto& labels = result.labels;
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* src = img.row(y);
        int* cur = labels.data() + static_cast<std::size_t>(y) * w;
        const int* prev = y > 0 ? cur - w : nullptr;
        for (int x = 0; x < w; ++x) {
            if (!src[x]) continue;
            int label = 0;
            auto take = [&](int neighbour) {
                if (neighbour == 0) return;
                if (label == 0) {
                    label = neighbour;
                } else if (neighbour != label) {
                    unite(parent, label, neighbour);
                }
            };
            if (x > 0) take(cur[x - 1]);
            if (prev) {
                take(prev[x]);
                if (connectivity == 8) {
                    if (x > 0) take(prev[x - 1]);
                    if (x < w - 1) take(prev[x + 1]);
                }
            }
            if (label == 0) {
                label = static_cast<int>(parent.size());
                parent.push_back(label);
            }
            cur[x] = label;
        }
    }

    // Final ids follow the raster order in which each component is first seen.
    std::vector<int> final_id(parent.size(), 0);
    int next = 0;
    for (int& l : labels) {
        if (l == 0) continue;
        const int root = find_root(parent, l);
        if (final_id[root] == 0) {
            final_id[root] = ++next;
        }
        l = final_id[root];
    }

    struct Extent {
        long long area = 0;
        int x0, y0, x1, y1;
    };
    std::vector<Extent> ext(next, Extent{0, w, h, -1, -1});
    for (int y = 0; y < h; ++y) {
        const int* row = labels.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            if (row[x] == 0) continue;
            Extent& e = ext[row[x] - 1];
            ++e.area;
            e.x0 = std::min(e.x0, x);
            e.x1 = std::max(e.x1, x);
            e.y0 = std::min(e.y0, y);
            e.y1 = std::max(e.y1, y);
        }
    }
    result.components.reserve(next);
    for (int i = 0; i < next; ++i) {
        const Extent& e = ext[i];
        result.components.push_back(
            Component{i + 1, e.area, BBox{e.x0, e.y0, e.x1 - e.x0 + 1, e.y1 - e.y0 + 1}});
    }
    return result;
}

namespace {

template <typename Pixel, typename Tag>
double sample_bilinear(const Raster<Pixel, Tag>& img, double sx, double sy) {
    const int w = img.width();
    const int h = img.height();
    const int x0 = std::min(static_cast<int>(std::floor(sx)), w - 1);
    const int y0 = std::min(static_cast<int>(std::floor(sy)), h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = sx - x0;
    const double fy = sy - y0;
    const double top = img.at(x0, y0) * (1.0 - fx) + img.at(x1, y0) * fx;
    const double bottom = img.at(x0, y1) * (1.0 - fx) + img.at(x1, y1) * fx;
    return top * (1.0 - fy) + bottom * fy;
}

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

template <typename Image, typename Convert>
Image resize_impl(const Image& img, int out_w, int out_h, Convert convert) {
    require(out_w >= 1 && out_h >= 1, "resize target must be at least 1x1");
    if (out_w == img.width() && out_h == img.height()) {
        return img;
    }
    Image out(out_w, out_h);
    const double scale_x = static_cast<double>(img.width()) / out_w;
    const double scale_y = static_cast<double>(img.height()) / out_h;
    std::vector<double> src_x(out_w);
    for (int x = 0; x < out_w; ++x) {
        src_x[x] = std::clamp((x + 0.5) * scale_x - 0.5, 0.0, img.width() - 1.0);
    }
    for (int y = 0; y < out_h; ++y) {
        const double sy = std::clamp((y + 0.5) * scale_y - 0.5, 0.0, img.height() - 1.0);
        auto* dst = out.row(y);
        for (int x = 0; x < out_w; ++x) {
            dst[x] = convert(sample_bilinear(img, src_x[x], sy));
        }
    }
    return out;
}

}  // namespace

GrayImage rotate_about(const GrayImage& img, double angle_deg, double pivot_x,
                       double pivot_y, std::uint8_t fill) {
    if (angle_deg == 0.0) {
        return img;
    }
    const double rad = angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    const int w = img.width();
    const int h = img.height();
    const double max_x = w - 1.0;
    const double max_y = h - 1.0;
    constexpr double eps = 1e-9;
    GrayImage out(w, h);
    const std::uint8_t* src = img.pixels().data();
    for (int v = 0; v < h; ++v) {
        const double dy = v - pivot_y;
        std::uint8_t* dst = out.row(v);
        for (int u = 0; u < w; ++u) {
            const double dx = u - pivot_x;
            double sx = pivot_x + dx * c - dy * s;
            double sy = pivot_y + dx * s + dy * c;
            if (sx < -eps || sy < -eps || sx > max_x + eps || sy > max_y + eps) {
                dst[u] = fill;
                continue;
            }
            sx = std::clamp(sx, 0.0, max_x);
            sy = std::clamp(sy, 0.0, max_y);
            // Coordinates are non-negative here, so truncation is floor.
            const int x0 = std::min(static_cast<int>(sx), w - 1);
            const int y0 = std::min(static_cast<int>(sy), h - 1);
            const int x1 = std::min(x0 + 1, w - 1);
            const std::size_t r0 = static_cast<std::size_t>(y0) * w;
            const std::size_t r1 = static_cast<std::size_t>(std::min(y0 + 1, h - 1)) * w;
            const double fx = sx - x0;
            const double fy = sy - y0;
            const double top = src[r0 + x0] * (1.0 - fx) + src[r0 + x1] * fx;
            const double bottom = src[r1 + x0] * (1.0 - fx) + src[r1 + x1] * fx;
            dst[u] = static_cast<std::uint8_t>(top * (1.0 - fy) + bottom * fy + 0.5);
        }
    }
    return out;
}

GrayImage rotate_about_center(const GrayImage& img, double angle_deg, std::uint8_t fill) {
    require(std::abs(angle_deg) <= 45.0, "rotation angle must be within +-45 degrees");
    return rotate_about(img, angle_deg, (img.width() - 1) / 2.0, (img.height() - 1) / 2.0,
                        fill);
}

GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h) {
    return resize_impl(img, out_w, out_h, to_byte);
}

RealImage resize_bilinear(const RealImage& img, int out_w, int out_h) {
    return resize_impl(img, out_w, out_h, [](double v) { return v; });
}

long long count_foreground(const BinaryImage& img) {
    long long n = 0;
    for (std::uint8_t v : img.pixels()) n += v ? 1 : 0;
    return n;
}

GrayImage mask_to_gray(const BinaryImage& mask) {
    GrayImage out(mask.width(), mask.height());
    auto src = mask.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? 0 : 255;
    return out;
}

}  // namespace vlpr::imaging
