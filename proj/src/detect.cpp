#include "vlpr/detect.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

namespace vlpr::detect {

using imaging::BinaryImage;
using imaging::ComponentLabeling;

void DetectConfig::validate() const {
    require(aspect_ratio > 1.0, "detect.aspect_ratio must be > 1");
    require(aspect_tol > 0.0 && aspect_tol < 1.0, "detect.aspect_tol must be in (0,1)");
    require(min_plate_w >= 16, "detect.min_plate_w must be >= 16");
    require(sweep_max > 0.0 && sweep_max <= 45.0, "detect.sweep_max must be in (0,45]");
    require(sweep_step > 0.0 && sweep_step <= sweep_max, "detect.sweep_step must be in (0,sweep_max]");
    require(prewitt_threshold > 0.0 && prewitt_threshold <= 1.0,
            "detect.prewitt_threshold must be in (0,1]");
    require(max_candidates >= 1, "detect.max_candidates must be >= 1");
    require(min_text_strokes >= 0, "detect.min_text_strokes must be >= 0");
    require(plate_out_w >= 8 && plate_out_h >= 8, "canonical plate size must be >= 8x8");
}

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Line {
    BBox box;
    int label = 0;
    long long area = 0;
    double mean_x = 0, mean_y = 0;
    double cxx = 0, cxy = 0, cyy = 0;

    double center_x() const { return box.x + (box.w - 1) / 2.0; }
    double center_y() const { return box.y + (box.h - 1) / 2.0; }
    // Orientation of the principal axis, degrees, image y-down.
    double orientation() const { return 0.5 * std::atan2(2.0 * cxy, cxx - cyy) / kDegToRad; }
};

std::vector<Line> line_components(const ComponentLabeling& lab) {
    std::vector<Line> lines(lab.components.size());
    std::vector<double> sx(lines.size()), sy(lines.size()), sxx(lines.size()), sxy(lines.size()),
        syy(lines.size());
    for (int y = 0; y < lab.height; ++y) {
        const int* row = lab.labels.data() + static_cast<std::size_t>(y) * lab.width;
        for (int x = 0; x < lab.width; ++x) {
            const int l = row[x];
            if (l == 0) continue;
            const std::size_t i = l - 1;
            sx[i] += x;
            sy[i] += y;
            sxx[i] += static_cast<double>(x) * x;
            sxy[i] += static_cast<double>(x) * y;
            syy[i] += static_cast<double>(y) * y;
        }
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& c = lab.components[i];
        Line& ln = lines[i];
        ln.box = c.box;
        ln.label = c.label;
        ln.area = c.area;
        const double n = static_cast<double>(c.area);
        ln.mean_x = sx[i] / n;
        ln.mean_y = sy[i] / n;
        ln.cxx = sxx[i] / n - ln.mean_x * ln.mean_x;
        ln.cxy = sxy[i] / n - ln.mean_x * ln.mean_y;
        ln.cyy = syy[i] / n - ln.mean_y * ln.mean_y;
    }
    return lines;
}

struct LineMaps {
    BinaryImage horizontal;  // dilated
    BinaryImage vertical;    // dilated
    ComponentLabeling h_lab;
    ComponentLabeling v_lab;
};

LineMaps line_maps(const GrayImage& img, double threshold) {
    const imaging::EdgeMaps e = imaging::prewitt_edges(img, threshold);
    LineMaps m;
    m.horizontal = imaging::dilate(e.horizontal, 5, 1);
    m.vertical = imaging::dilate(e.vertical, 1, 5);
    m.h_lab = imaging::connected_components(m.horizontal, 4);
    m.v_lab = imaging::connected_components(m.vertical, 4);
    return m;
}

// Mean row of a component's pixels within columns [x0, x1).
double mean_row(const ComponentLabeling& lab, const Line& ln, int x0, int x1) {
    double sum = 0.0;
    long long n = 0;
    for (int y = ln.box.y; y < ln.box.bottom(); ++y) {
        const int* row = lab.labels.data() + static_cast<std::size_t>(y) * lab.width;
        for (int x = x0; x < x1; ++x) {
            if (row[x] == ln.label) {
                sum += y;
                ++n;
            }
        }
    }
    return n > 0 ? sum / static_cast<double>(n) : ln.center_y();
}

struct RotatedRect {
    double cx, cy, w, h, angle;  // angle: counter-clockwise degrees
};

double perimeter_coverage(const BinaryImage& support, const RotatedRect& r) {
    const double rad = r.angle * kDegToRad;
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    auto to_scene = [&](double lx, double ly) {
        return std::pair{r.cx + lx * c + ly * s, r.cy - lx * s + ly * c};
    };
    const std::array<std::pair<double, double>, 4> corners{
        to_scene(-r.w / 2, -r.h / 2), to_scene(r.w / 2, -r.h / 2), to_scene(r.w / 2, r.h / 2),
        to_scene(-r.w / 2, r.h / 2)};
    long long total = 0;
    long long covered = 0;
    for (int side = 0; side < 4; ++side) {
        const auto [ax, ay] = corners[side];
        const auto [bx, by] = corners[(side + 1) % 4];
        const double len = std::hypot(bx - ax, by - ay);
        const int n = std::max(1, static_cast<int>(std::ceil(len)));
        for (int i = 0; i < n; ++i) {
            const double t = (i + 0.5) / n;
            const int x = static_cast<int>(std::lround(ax + (bx - ax) * t));
            const int y = static_cast<int>(std::lround(ay + (by - ay) * t));
            ++total;
            if (x >= 0 && y >= 0 && x < support.width() && y < support.height() && support.at(x, y)) {
                ++covered;
            }
        }
    }
    return total > 0 ? static_cast<double>(covered) / static_cast<double>(total) : 0.0;
}

// Size of the rectangle whose rotation by `angle` has the given axis-aligned extent.
std::pair<double, double> derotated_size(double box_w, double box_h, double angle) {
    const double rad = std::abs(angle) * kDegToRad;
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    const double det = c * c - s * s;
    if (det < 0.2) return {box_w, box_h};
    const double w = (box_w * c - box_h * s) / det;
    const double h = (box_h * c - box_w * s) / det;
    if (w <= 0 || h <= 0) return {box_w, box_h};
    return {w, h};
}

BBox union_box(const BBox& a, const BBox& b) {
    const int x0 = std::min(a.x, b.x);
    const int y0 = std::min(a.y, b.y);
    const int x1 = std::max(a.right(), b.right());
    const int y1 = std::max(a.bottom(), b.bottom());
    return BBox{x0, y0, x1 - x0, y1 - y0};
}

}  // namespace

std::vector<PlateCandidate> find_plate_candidates(const GrayImage& img, const DetectConfig& cfg) {
    cfg.validate();
    if (img.width() < cfg.min_plate_w || img.height() < 3) {
        return {};
    }
    const LineMaps maps = line_maps(img, cfg.prewitt_threshold);
    const double min_len = 0.4 * cfg.min_plate_w;

    std::vector<Line> verticals;
    for (const Line& ln : line_components(maps.v_lab)) {
        if (ln.box.h >= min_len && ln.box.h >= 2.5 * ln.box.w) verticals.push_back(ln);
    }
    std::vector<Line> horizontals;
    for (const Line& ln : line_components(maps.h_lab)) {
        if (ln.box.w >= min_len && ln.box.w >= 2.5 * ln.box.h) horizontals.push_back(ln);
    }
    std::sort(verticals.begin(), verticals.end(),
              [](const Line& a, const Line& b) { return a.box.x < b.box.x || (a.box.x == b.box.x && a.label < b.label); });

    BinaryImage support(img.width(), img.height());
    {
        auto dst = support.pixels();
        auto hp = maps.horizontal.pixels();
        auto vp = maps.vertical.pixels();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = hp[i] | vp[i];
        support = imaging::dilate(support, 5, 5);
    }

    const double lo = cfg.aspect_ratio * (1.0 - cfg.aspect_tol);
    const double hi = cfg.aspect_ratio * (1.0 + cfg.aspect_tol);
    std::vector<PlateCandidate> found;
    for (std::size_t i = 0; i < verticals.size(); ++i) {
        const Line& left = verticals[i];
        for (std::size_t j = i + 1; j < verticals.size(); ++j) {
            const Line& right = verticals[j];
            if (right.box.x <= left.box.right()) continue;
            const int hmin = std::min(left.box.h, right.box.h);
            const int hmax = std::max(left.box.h, right.box.h);
            if (hmin < 0.7 * hmax) continue;
            const int overlap = std::min(left.box.bottom(), right.box.bottom()) -
                                std::max(left.box.y, right.box.y);
            if (overlap < 0.5 * hmin) continue;
            const BBox box = union_box(left.box, right.box);
            if (box.w < cfg.min_plate_w) continue;
            const double aspect = static_cast<double>(box.w) / box.h;
            if (aspect < lo || aspect > hi) continue;

            // A horizontal line must bridge the two verticals.
            const double span = right.center_x() - left.center_x();
            const Line* bridge = nullptr;
            for (const Line& hl : horizontals) {
                if (hl.box.x > left.center_x() + 0.1 * span) continue;
                if (hl.box.right() - 1 < right.center_x() - 0.1 * span) continue;
                if (hl.box.y < box.y - 0.1 * box.h || hl.box.bottom() > box.bottom() + 0.1 * box.h) continue;
                if (!bridge || hl.box.w > bridge->box.w) bridge = &hl;
            }
            if (!bridge) continue;

            const double skew = -bridge->orientation();
            const auto [rw, rh] = derotated_size(box.w, box.h, skew);
            const RotatedRect rect{box.x + (box.w - 1) / 2.0, box.y + (box.h - 1) / 2.0, rw - 1.0,
                                   rh - 1.0, skew};
            PlateCandidate cand;
            cand.box = box;
            cand.score = perimeter_coverage(support, rect);
            cand.skew_estimate = skew;
            found.push_back(cand);
        }
    }

    std::sort(found.begin(), found.end(), [](const PlateCandidate& a, const PlateCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.box.y != b.box.y) return a.box.y < b.box.y;
        if (a.box.x != b.box.x) return a.box.x < b.box.x;
        if (a.box.w != b.box.w) return a.box.w < b.box.w;
        return a.box.h < b.box.h;
    });
    std::vector<PlateCandidate> kept;
    for (const PlateCandidate& c : found) {
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const PlateCandidate& k) {
            return imaging::iou(k.box, c.box) > 0.5;
        });
        if (!suppressed) kept.push_back(c);
        if (static_cast<int>(kept.size()) >= cfg.max_candidates) break;
    }
    return kept;
}

namespace {

// Scaled crop around a candidate, with the rotation pivot at the candidate centre.
struct Window {
    GrayImage image;
    int origin_x = 0;  // window pixel (0,0) in scene pixels (before scaling)
    int origin_y = 0;
    double scale = 1.0;
    double pivot_x = 0.0;  // window coordinates
    double pivot_y = 0.0;
    double box_w = 0.0;    // candidate box size in window pixels
    double box_h = 0.0;
};

Window make_window(const GrayImage& img, const PlateCandidate& cand, double max_box_width) {
    const BBox& b = cand.box;
    require(b.fits(img.width(), img.height()), "candidate box outside image");
    const int margin = static_cast<int>(std::lround(0.15 * b.w)) + 4;
    const int x0 = std::max(0, b.x - margin);
    const int y0 = std::max(0, b.y - margin);
    const int x1 = std::min(img.width(), b.right() + margin);
    const int y1 = std::min(img.height(), b.bottom() + margin);
    Window win;
    win.origin_x = x0;
    win.origin_y = y0;
    win.image = imaging::crop(img, BBox{x0, y0, x1 - x0, y1 - y0});
    win.scale = std::min(1.0, max_box_width / b.w);
    if (win.scale < 1.0) {
        const int w = std::max(3, static_cast<int>(std::lround(win.image.width() * win.scale)));
        const int h = std::max(3, static_cast<int>(std::lround(win.image.height() * win.scale)));
        win.image = imaging::resize_bilinear(win.image, w, h);
    }
    const double sx = static_cast<double>(win.image.width()) / (x1 - x0);
    const double sy = static_cast<double>(win.image.height()) / (y1 - y0);
    const double cx = b.x + (b.w - 1) / 2.0 - x0;
    const double cy = b.y + (b.h - 1) / 2.0 - y0;
    win.pivot_x = (cx + 0.5) * sx - 0.5;
    win.pivot_y = (cy + 0.5) * sy - 0.5;
    win.box_w = b.w * sx;
    win.box_h = b.h * sy;
    return win;
}

// Long, nearly horizontal lines whose centre lies inside the central region.
std::vector<Line> long_horizontal(const ComponentLabeling& lab, double min_len, double cx, double cy,
                                  double half_w, double half_h) {
    std::vector<Line> out;
    for (const Line& ln : line_components(lab)) {
        if (ln.box.w < min_len || ln.box.w < 4 * ln.box.h) continue;
        if (std::abs(ln.center_x() - cx) > half_w || std::abs(ln.center_y() - cy) > half_h) continue;
        out.push_back(ln);
    }
    return out;
}

std::vector<double> sweep_angles(const DetectConfig& cfg) {
    const int n = static_cast<int>(std::floor(2.0 * cfg.sweep_max / cfg.sweep_step + 1e-9));
    std::vector<double> angles;
    for (int i = 0; i <= n; ++i) angles.push_back(cfg.sweep_max - i * cfg.sweep_step);
    return angles;
}

}  // namespace

std::vector<SweepStep> alignment_sweep(const GrayImage& img, const PlateCandidate& cand,
                                       const DetectConfig& cfg) {
    cfg.validate();
    const Window win = make_window(img, cand, 320.0);
    const double est_h = derotated_size(cand.box.w, cand.box.h, cand.skew_estimate).second;
    const double inner_half = 0.4 * est_h * win.box_h / cand.box.h;
    std::vector<SweepStep> steps;
    for (double angle : sweep_angles(cfg)) {
        SweepStep step;
        step.angle = angle;
        const GrayImage rotated = imaging::rotate_about(win.image, angle, win.pivot_x, win.pivot_y, 255);
        const imaging::EdgeMaps e = imaging::prewitt_edges(rotated, cfg.prewitt_threshold);
        const ComponentLabeling lab = imaging::connected_components(imaging::dilate(e.horizontal, 5, 1), 4);
        // The internal line sits well inside the plate; the borders lie near
        // +-half the estimated plate height and are excluded by position.
        const std::vector<Line> lines = long_horizontal(lab, 0.5 * win.box_w, win.pivot_x,
                                                        win.pivot_y, 0.5 * win.box_w, inner_half);
        {
            const Line* internal = nullptr;
            for (const Line& ln : lines) {
                if (!internal || ln.box.w > internal->box.w ||
                    (ln.box.w == internal->box.w && ln.box.y < internal->box.y)) {
                    internal = &ln;
                }
            }
            if (internal) {
                const int k = std::max(3, internal->box.w / 10);
                const double y_left = mean_row(lab, *internal, internal->box.x, internal->box.x + k);
                const double y_right =
                    mean_row(lab, *internal, internal->box.right() - k, internal->box.right());
                step.found = true;
                step.height_diff = std::abs(y_left - y_right);
            }
        }
        steps.push_back(step);
    }
    return steps;
}

double alignment_angle(const GrayImage& img, const PlateCandidate& cand, const DetectConfig& cfg) {
    const std::vector<SweepStep> steps = alignment_sweep(img, cand, cfg);
    const SweepStep* best = nullptr;
    for (const SweepStep& s : steps) {
        if (!s.found) continue;
        if (!best || s.height_diff < best->height_diff ||
            (s.height_diff == best->height_diff && std::abs(s.angle) < std::abs(best->angle))) {
            best = &s;
        }
    }
    if (!best) {
        fail(ErrorCode::AlignmentNotFound, "alignment line not found");
    }
    return best->angle;
}

PlateLocation relocate(const GrayImage& img, const PlateCandidate& cand, double angle,
                       const DetectConfig& cfg) {
    cfg.validate();
    const Window win = make_window(img, cand, 1e9);  // full resolution
    const GrayImage rotated = imaging::rotate_about(win.image, angle, win.pivot_x, win.pivot_y, 255);
    const LineMaps maps = line_maps(rotated, cfg.prewitt_threshold);

    const auto [est_w, est_h] = derotated_size(cand.box.w, cand.box.h, cand.skew_estimate);
    // Border lines may be split where the separator meets them, so segments count too.
    std::vector<Line> hl = long_horizontal(maps.h_lab, 0.3 * est_w, win.pivot_x, win.pivot_y,
                                           0.5 * cand.box.w, 0.5 * cand.box.h + 4);
    double x0 = win.pivot_x - est_w / 2.0;
    double x1 = win.pivot_x + est_w / 2.0;
    double y0 = win.pivot_y - est_h / 2.0;
    double y1 = win.pivot_y + est_h / 2.0;
    int top = -1;
    int bottom = -1;
    for (const Line& ln : hl) {
        if (ln.center_y() < win.pivot_y) {
            if (top < 0 || ln.box.y < top) top = ln.box.y;
        } else if (bottom < 0 || ln.box.bottom() - 1 > bottom) {
            bottom = ln.box.bottom() - 1;
        }
    }
    // Prewitt marks one pixel on each side of a step; trim the outer one.
    if (top >= 0) y0 = top + 1;
    if (bottom >= 0) y1 = bottom - 1;
    const double plate_h = y1 - y0 + 1;
    int left = -1;
    int right = -1;
    for (const Line& ln : line_components(maps.v_lab)) {
        if (ln.box.h < 0.5 * plate_h || ln.box.h < 2.5 * ln.box.w) continue;
        const double overlap = std::min<double>(ln.box.bottom() - 1, y1) - std::max<double>(ln.box.y, y0);
        if (overlap < 0.5 * plate_h) continue;
        if (std::abs(ln.center_x() - win.pivot_x) > 0.5 * cand.box.w + 4) continue;
        if (left < 0 || ln.box.x < left) left = ln.box.x;
        if (right < 0 || ln.box.right() - 1 > right) right = ln.box.right() - 1;
    }
    if (left >= 0 && right - left > 0.5 * est_w) {
        x0 = left + 1;
        x1 = right - 1;
    }

    PlateLocation loc;
    loc.candidate = cand;
    loc.candidate.angle = angle;
    loc.angle = angle;
    loc.pivot_x = win.origin_x + win.pivot_x;
    loc.pivot_y = win.origin_y + win.pivot_y;
    const int bx0 = std::max(0, static_cast<int>(std::lround(x0)) + win.origin_x);
    const int by0 = std::max(0, static_cast<int>(std::lround(y0)) + win.origin_y);
    const int bx1 = std::min(img.width() - 1, static_cast<int>(std::lround(x1)) + win.origin_x);
    const int by1 = std::min(img.height() - 1, static_cast<int>(std::lround(y1)) + win.origin_y);
    loc.aligned_box = BBox{bx0, by0, std::max(1, bx1 - bx0 + 1), std::max(1, by1 - by0 + 1)};

    // Centre of the aligned box mapped back into the unrotated scene.
    const double acx = loc.aligned_box.x + (loc.aligned_box.w - 1) / 2.0 - loc.pivot_x;
    const double acy = loc.aligned_box.y + (loc.aligned_box.h - 1) / 2.0 - loc.pivot_y;
    const double rad = angle * kDegToRad;
    const double scx = loc.pivot_x + acx * std::cos(rad) - acy * std::sin(rad);
    const double scy = loc.pivot_y + acx * std::sin(rad) + acy * std::cos(rad);
    loc.scene_box = BBox{static_cast<int>(std::lround(scx - (loc.aligned_box.w - 1) / 2.0)),
                         static_cast<int>(std::lround(scy - (loc.aligned_box.h - 1) / 2.0)),
                         loc.aligned_box.w, loc.aligned_box.h};
    return loc;
}

GrayImage extract_plate(const GrayImage& img, const PlateLocation& loc, const DetectConfig& cfg) {
    const BBox& b = loc.aligned_box;
    require(b.fits(img.width(), img.height()), "aligned plate box outside image");
    GrayImage plate;
    if (loc.angle == 0.0) {
        plate = imaging::crop(img, b);
    } else {
        // Rotate only a window that holds every source pixel the box needs.
        const int margin = static_cast<int>(std::ceil(0.25 * std::max(b.w, b.h))) + 4;
        const int x0 = std::max(0, b.x - margin);
        const int y0 = std::max(0, b.y - margin);
        const int x1 = std::min(img.width(), b.right() + margin);
        const int y1 = std::min(img.height(), b.bottom() + margin);
        const GrayImage win = imaging::crop(img, BBox{x0, y0, x1 - x0, y1 - y0});
        const GrayImage rotated =
            imaging::rotate_about(win, loc.angle, loc.pivot_x - x0, loc.pivot_y - y0, 255);
        plate = imaging::crop(rotated, BBox{b.x - x0, b.y - y0, b.w, b.h});
    }
    return imaging::resize_bilinear(plate, cfg.plate_out_w, cfg.plate_out_h);
}

GrayImage extract_plate(const GrayImage& img, const PlateCandidate& cand, double angle,
                        const DetectConfig& cfg) {
    return extract_plate(img, relocate(img, cand, angle, cfg), cfg);
}

int text_strokes(const GrayImage& plate) {
    if (plate.width() < 8 || plate.height() < 8) return 0;
    const imaging::EdgeMaps e = imaging::prewitt_edges(plate, 0.25);
    const ComponentLabeling lab = imaging::connected_components(imaging::dilate(e.vertical, 1, 3), 4);
    const int W = plate.width();
    const int H = plate.height();
    int n = 0;
    for (const auto& c : lab.components) {
        const double cy = c.box.y + (c.box.h - 1) / 2.0;
        if (c.box.h < 0.12 * H || c.box.h > 0.7 * H) continue;
        if (cy < 0.3 * H || cy > 0.8 * H) continue;
        if (c.box.x < 0.04 * W || c.box.right() > 0.96 * W) continue;
        ++n;
    }
    return n;
}

std::optional<PlateLocation> locate_plate(const GrayImage& img, const DetectConfig& cfg) {
    const std::vector<PlateCandidate> cands = find_plate_candidates(img, cfg);
    if (!cfg.debug_dir.empty()) {
        write_debug_artifacts(img, cands, cfg, "scene");
    }
    for (const PlateCandidate& cand : cands) {
        try {
            const double angle = alignment_angle(img, cand, cfg);
            PlateLocation loc = relocate(img, cand, angle, cfg);
            if (text_strokes(extract_plate(img, loc, cfg)) >= cfg.min_text_strokes) return loc;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::AlignmentNotFound) throw;
        }
    }
    return std::nullopt;
}

void write_debug_artifacts(const GrayImage& img, const std::vector<PlateCandidate>& cands,
                           const DetectConfig& cfg, const std::string& tag) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.debug_dir, ec);
    if (ec) fail(ErrorCode::Io, cfg.debug_dir + ": " + ec.message());
    const fs::path dir(cfg.debug_dir);
    const imaging::EdgeMaps e = imaging::prewitt_edges(img, cfg.prewitt_threshold);
    imaging::write_png(imaging::mask_to_gray(e.horizontal), (dir / (tag + "_edges_h.png")).string());
    imaging::write_png(imaging::mask_to_gray(e.vertical), (dir / (tag + "_edges_v.png")).string());
    GrayImage overlay = img;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const BBox& b = cands[i].box;
        const std::uint8_t v = i == 0 ? 255 : 0;
        for (int x = b.x; x < b.right(); ++x) {
            overlay.at(x, b.y) = v;
            overlay.at(x, b.bottom() - 1) = v;
        }
        for (int y = b.y; y < b.bottom(); ++y) {
            overlay.at(b.x, y) = v;
            overlay.at(b.right() - 1, y) = v;
        }
    }
    imaging::write_png(overlay, (dir / (tag + "_candidates.png")).string());
}

}  // namespace vlpr::detect
