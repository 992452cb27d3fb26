#include "vlpr/synthgen.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <thread>

#include "json.hpp"
#include "vlpr/alphabet.hpp"

namespace vlpr::synth {

namespace {

// ---------------------------------------------------------------------------
// Randomness: counter-keyed streams so scene i never depends on scene i-1.

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

enum class Stream : std::uint64_t {
    Spec = 1,
    PlateNoise,
    SceneNoise,
    Clutter,
    Subtitle,
    IdentityText,
};

class Rng {
public:
    Rng(std::uint64_t seed, Stream stream, std::uint64_t counter)
        : engine_(splitmix64(splitmix64(seed) ^ splitmix64(static_cast<std::uint64_t>(stream) << 56 ^ counter))) {}

    // 53-bit uniform in [0,1); std distributions are not portable across
    // standard libraries, so the conversions are done here.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int randint(int lo, int hi) {  // inclusive
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(engine_() % span);
    }
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return mag * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Glyph tables. Design units: 100 tall, centerlines kept within x in [6,54],
// strokes have radius 6. Ellipses become 32-gon polylines built from an
// integer cosine table so rasterization stays in integer arithmetic.

struct IPoint {
    int x;
    int y;
};

struct Dot {
    int cx;
    int cy;
    int r;
};

struct Glyph {
    std::vector<std::vector<IPoint>> strokes;
    std::vector<Dot> dots;
    int width = 0;  // design advance width
};

constexpr int kStrokeRadius = 6;

// cos(k * 11.25 deg) * 10000 for k = 0..8
constexpr std::array<int, 9> kCos{10000, 9808, 9239, 8315, 7071, 5556, 3827, 1951, 0};

int table_cos(int k) {
    k = ((k % 32) + 32) % 32;
    if (k <= 8) return kCos[k];
    if (k <= 16) return -kCos[16 - k];
    if (k <= 24) return -kCos[k - 16];
    return kCos[32 - k];
}
int table_sin(int k) { return table_cos(k - 8); }

std::vector<IPoint> ellipse(int cx, int cy, int rx, int ry) {
    std::vector<IPoint> pts;
    for (int k = 0; k <= 32; ++k) {
        pts.push_back({cx + (rx * table_cos(k) + (table_cos(k) >= 0 ? 5000 : -5000)) / 10000,
                       cy + (ry * table_sin(k) + (table_sin(k) >= 0 ? 5000 : -5000)) / 10000});
    }
    return pts;
}

Glyph make(std::vector<std::vector<IPoint>> strokes, std::vector<Dot> dots = {}) {
    Glyph g{std::move(strokes), std::move(dots), 0};
    int max_x = 0;
    for (const auto& s : g.strokes)
        for (const auto& p : s) max_x = std::max(max_x, p.x + kStrokeRadius);
    for (const auto& d : g.dots) max_x = std::max(max_x, d.cx + d.r);
    g.width = max_x;
    return g;
}

const std::array<Glyph, LabelAlphabet::kSize>& glyph_table() {
    static const std::array<Glyph, LabelAlphabet::kSize> table = [] {
        std::array<Glyph, LabelAlphabet::kSize> t;
        // Hindi digits
        t[0] = make({{{6, 18}, {20, 6}, {20, 94}}});
        t[1] = make({{{12, 94}, {12, 8}}, {{12, 36}, {30, 36}, {44, 10}}});
        t[2] = make({{{10, 94}, {10, 10}}, {{10, 40}, {22, 40}, {28, 20}, {34, 40}, {44, 40}, {52, 12}}});
        t[3] = make({{{44, 10}, {16, 10}, {30, 30}, {10, 52}, {10, 72}, {30, 92}, {50, 84}}});
        t[4] = make({ellipse(28, 50, 20, 42)});
        t[5] = make({{{8, 8}, {44, 8}, {44, 94}}});
        t[6] = make({{{8, 6}, {30, 94}, {52, 6}}});
        t[7] = make({{{8, 94}, {30, 6}, {52, 94}}});
        t[8] = make({ellipse(24, 30, 16, 22), {{40, 30}, {40, 94}}});
        // Letters
        t[9] = make({{{20, 34}, {20, 94}}, {{34, 8}, {12, 8}, {12, 20}, {32, 20}}});             // alef + hamza
        t[10] = make({{{8, 6}, {8, 66}, {16, 76}, {44, 76}, {52, 66}, {52, 30}}}, {{30, 91, 6}});  // beh
        t[11] = make({{{8, 12}, {30, 6}, {54, 14}}, {{30, 6}, {10, 40}, {12, 76}, {30, 94}, {54, 88}}},
                     {{34, 52, 6}});                                                          // jeem
        t[12] = make({{{14, 6}, {44, 60}, {44, 94}, {6, 94}}});                                // dal
        t[13] = make({{{40, 6}, {40, 50}, {30, 78}, {8, 94}}});                                // reh
        t[14] = make({{{10, 6}, {10, 44}, {50, 44}, {50, 6}},
                      {{30, 44}, {30, 14}},
                      {{50, 44}, {50, 76}, {36, 94}, {16, 94}, {8, 82}}});                     // seen
        t[15] = make({ellipse(38, 30, 16, 22), {{22, 30}, {22, 80}, {14, 94}, {6, 84}}});      // sad
        t[16] = make({ellipse(32, 72, 22, 20), {{16, 6}, {16, 72}}});                          // tah
        t[17] = make({{{50, 10}, {30, 6}, {14, 18}, {22, 36}, {48, 44}},
                      {{48, 44}, {14, 54}, {8, 78}, {26, 94}, {54, 90}}});                     // ain
        t[18] = make({ellipse(38, 46, 14, 16), {{24, 54}, {24, 88}, {54, 88}, {54, 66}}},
                     {{38, 15, 6}});                                                          // feh
        t[19] = make({ellipse(38, 42, 14, 14), {{52, 46}, {52, 80}, {40, 94}, {18, 94}, {6, 80}}},
                     {{30, 15, 5}, {46, 15, 5}});                                             // qaf
        t[20] = make({{{50, 6}, {50, 76}, {38, 94}, {16, 94}, {6, 80}}});                      // lam
        t[21] = make({ellipse(30, 22, 18, 16), {{30, 38}, {30, 94}}});                         // meem
        t[22] = make({{{8, 8}, {8, 76}, {20, 92}, {40, 92}, {52, 76}, {52, 8}}}, {{30, 50, 6}});  // noon
        t[23] = make({ellipse(30, 50, 24, 44), {{10, 50}, {50, 50}}});                         // heh
        t[24] = make({ellipse(36, 26, 16, 20), {{52, 26}, {52, 60}, {38, 86}, {8, 94}}});      // waw
        t[25] = make({{{54, 6}, {26, 6}, {12, 24}, {26, 44}, {48, 52}, {54, 74}, {42, 94}, {6, 94}}});  // yeh
        return t;
    }();
    return table;
}

// ---------------------------------------------------------------------------
// Fixed-point rasterization (1/64 pixel).

constexpr long long kSub = 64;

struct FixedGlyph {
    std::vector<std::pair<IPoint, IPoint>> segments;  // fixed-point, glyph-local
    std::vector<Dot> dots;                            // fixed-point, glyph-local
    long long stroke_r = 0;
};

long long to_fixed(int units, int glyph_height) {
    return (static_cast<long long>(units) * glyph_height * kSub + 50) / 100;
}

FixedGlyph fix_glyph(const Glyph& g, int glyph_height) {
    FixedGlyph f;
    f.stroke_r = to_fixed(kStrokeRadius, glyph_height);
    for (const auto& s : g.strokes) {
        for (std::size_t i = 0; i + 1 < s.size(); ++i) {
            f.segments.push_back(
                {{static_cast<int>(to_fixed(s[i].x, glyph_height)), static_cast<int>(to_fixed(s[i].y, glyph_height))},
                 {static_cast<int>(to_fixed(s[i + 1].x, glyph_height)),
                  static_cast<int>(to_fixed(s[i + 1].y, glyph_height))}});
        }
    }
    for (const auto& d : g.dots) {
        f.dots.push_back({static_cast<int>(to_fixed(d.cx, glyph_height)),
                          static_cast<int>(to_fixed(d.cy, glyph_height)),
                          static_cast<int>(to_fixed(d.r, glyph_height))});
    }
    return f;
}

bool near_segment(long long px, long long py, const IPoint& a, const IPoint& b, long long r) {
    const long long dx = b.x - a.x;
    const long long dy = b.y - a.y;
    const long long apx = px - a.x;
    const long long apy = py - a.y;
    const long long dd = dx * dx + dy * dy;
    const long long t = apx * dx + apy * dy;
    if (dd == 0 || t <= 0) {
        return apx * apx + apy * apy <= r * r;
    }
    if (t >= dd) {
        const long long bpx = px - b.x;
        const long long bpy = py - b.y;
        return bpx * bpx + bpy * bpy <= r * r;
    }
    // |ap|^2 - t^2/dd <= r^2, multiplied through by dd.
    return (apx * apx + apy * apy) * dd - t * t <= r * r * dd;
}

bool inked(const FixedGlyph& g, long long px, long long py) {
    for (const auto& [a, b] : g.segments) {
        if (near_segment(px, py, a, b, g.stroke_r)) return true;
    }
    for (const auto& d : g.dots) {
        const long long dx = px - d.cx;
        const long long dy = py - d.cy;
        if (dx * dx + dy * dy <= static_cast<long long>(d.r) * d.r) return true;
    }
    return false;
}

constexpr std::uint8_t kPaper = 235;
constexpr std::uint8_t kInk = 25;
constexpr std::uint8_t kBand = 100;

int round_frac(double frac, int value) { return static_cast<int>(std::lround(frac * value)); }

std::uint8_t clamp_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

void add_noise(GrayImage& img, double sigma, Rng& rng) {
    if (sigma <= 0.0) return;
    for (auto& v : img.pixels()) v = clamp_byte(v + sigma * rng.normal());
}

// Rasterizes the plate face with zero noise; fills ground truth in plate coordinates.
RenderedPlate rasterize_plate(const SceneSpec& spec) {
    const int w = spec.plate_width;
    const int h = w / 2;
    const PlateLayout layout = plate_layout(w);
    GrayImage img(w, h, kPaper);
    GroundTruth truth;
    truth.plate_width = w;
    truth.plate_height = h;
    truth.skew = spec.skew;
    truth.identity = spec.identity;
    truth.plate_text = LabelAlphabet::render(spec.digits, spec.letters);

    auto fill_rect = [&](int x0, int y0, int x1, int y1, std::uint8_t v) {
        x0 = std::max(x0, 0);
        y0 = std::max(y0, 0);
        x1 = std::min(x1, w);
        y1 = std::min(y1, h);
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) img.at(x, y) = v;
    };

    const int t = layout.border;
    fill_rect(t, t, w - t, layout.band_bottom, kBand);
    // border frame
    fill_rect(0, 0, w, t, kInk);
    fill_rect(0, h - t, w, h, kInk);
    fill_rect(0, 0, t, h, kInk);
    fill_rect(w - t, 0, w, h, kInk);
    // separator bar between the digit and letter groups
    const int mid = w / 2;
    fill_rect(mid - t, round_frac(0.30, h), mid + t, h, kInk);

    const int gh = layout.glyph_height;
    const int gap = round_frac(0.025, w);
    const int bar_clear = round_frac(0.045, w);
    const int edge_clear = t + round_frac(0.04, w);
    const auto& glyphs = glyph_table();

    auto place_group = [&](const std::vector<int>& group, int zone_x0, int zone_x1) {
        if (group.empty()) return;
        std::vector<int> advances;
        int total = 0;
        for (int idx : group) {
            const int adv = static_cast<int>((static_cast<long long>(glyphs[idx].width) * gh + 50) / 100);
            advances.push_back(adv);
            total += adv;
        }
        total += gap * static_cast<int>(group.size() - 1);
        if (total > zone_x1 - zone_x0) {
            fail(ErrorCode::InvalidArgument, "plate text does not fit the plate width");
        }
        int x = zone_x0 + (zone_x1 - zone_x0 - total) / 2;
        for (std::size_t i = 0; i < group.size(); ++i) {
            const FixedGlyph fg = fix_glyph(glyphs[group[i]], gh);
            const int y = layout.glyph_top;
            int bx0 = w, by0 = h, bx1 = -1, by1 = -1;
            long long ink = 0;
            const int reach = advances[i] + 2;
            for (int py = y - 2; py < y + gh + 2; ++py) {
                for (int px = x - 2; px < x + reach; ++px) {
                    if (px < 0 || py < 0 || px >= w || py >= h) continue;
                    const long long lx = (px - x) * kSub + kSub / 2;
                    const long long ly = (py - y) * kSub + kSub / 2;
                    if (!inked(fg, lx, ly)) continue;
                    img.at(px, py) = kInk;
                    ++ink;
                    bx0 = std::min(bx0, px);
                    by0 = std::min(by0, py);
                    bx1 = std::max(bx1, px);
                    by1 = std::max(by1, py);
                }
            }
            truth.labels.push_back(group[i]);
            truth.glyph_boxes.push_back(BBox{bx0, by0, bx1 - bx0 + 1, by1 - by0 + 1});
            truth.glyph_ink.push_back(ink);
            x += advances[i] + gap;
        }
    };
    place_group(spec.digits, edge_clear, mid - bar_clear);
    place_group(spec.letters, mid + bar_clear, w - edge_clear);

    if (spec.subtitle) {
        Rng rng(spec.seed, Stream::Subtitle, 0);
        const int y0 = round_frac(0.83, h);
        const int y1 = round_frac(0.90, h);
        const int mark_w = std::max(2, round_frac(0.012, w));
        for (int zone = 0; zone < 2; ++zone) {
            const int count = rng.randint(4, 6);
            const int span = count * mark_w * 3;
            int x = zone == 0 ? (edge_clear + mid - bar_clear - span) / 2
                              : (mid + bar_clear + w - edge_clear - span) / 2;
            for (int i = 0; i < count; ++i) {
                const int top = y0 + rng.randint(0, std::max(0, (y1 - y0) / 3));
                fill_rect(x, top, x + mark_w * (1 + rng.randint(0, 1)), y1, kInk);
                x += mark_w * 3;
            }
        }
    }
    return {std::move(img), std::move(truth)};
}

std::array<Point, 4> rotated_corners(const BBox& box, double skew) {
    const double cx = box.x + box.w / 2.0;
    const double cy = box.y + box.h / 2.0;
    const double rad = skew * std::numbers::pi / 180.0;
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    const std::array<Point, 4> local{{{-box.w / 2.0, -box.h / 2.0},
                                      {box.w / 2.0, -box.h / 2.0},
                                      {box.w / 2.0, box.h / 2.0},
                                      {-box.w / 2.0, box.h / 2.0}}};
    std::array<Point, 4> out{};
    for (int i = 0; i < 4; ++i) {
        out[i] = {cx + local[i].x * c + local[i].y * s, cy - local[i].x * s + local[i].y * c};
    }
    return out;
}

}  // namespace

PlateLayout plate_layout(int plate_width) {
    const int h = plate_width / 2;
    PlateLayout l;
    l.border = std::max(2, round_frac(1.0 / 128.0, plate_width));
    l.band_bottom = round_frac(0.24, h);
    l.glyph_top = round_frac(0.36, h);
    l.glyph_height = round_frac(0.38, h);
    return l;
}

void validate(const SceneSpec& spec) {
    require(spec.plate_width >= 64 && spec.plate_width <= 1200, "plate width must be in [64,1200]");
    require(std::abs(spec.skew) <= 10.0, "skew must be within [-10,10] degrees");
    require(spec.noise_sigma >= 0.0, "noise sigma must be non-negative");
    require(spec.clutter_density >= 0.0 && spec.clutter_density <= 1.0,
            "clutter density must be in [0,1]");
    require(!spec.digits.empty() || !spec.letters.empty(), "plate text is empty");
    for (int d : spec.digits) {
        if (!LabelAlphabet::is_digit(d)) fail(ErrorCode::InvalidArgument, "invalid digit symbol");
    }
    for (int l : spec.letters) {
        if (!LabelAlphabet::is_letter(l)) fail(ErrorCode::InvalidArgument, "invalid letter symbol");
    }
    const BBox box{spec.pos_x, spec.pos_y, spec.plate_width, spec.plate_width / 2};
    for (const Point& p : rotated_corners(box, spec.skew)) {
        if (p.x < 0.0 || p.y < 0.0 || p.x > kSceneWidth || p.y > kSceneHeight) {
            fail(ErrorCode::InvalidArgument, "plate does not fit in the 1920x1080 frame");
        }
    }
}

RenderedPlate render_plate(const SceneSpec& spec) {
    require(spec.plate_width >= 64 && spec.plate_width <= 1200, "plate width must be in [64,1200]");
    for (int d : spec.digits) {
        if (!LabelAlphabet::is_digit(d)) fail(ErrorCode::InvalidArgument, "invalid digit symbol");
    }
    for (int l : spec.letters) {
        if (!LabelAlphabet::is_letter(l)) fail(ErrorCode::InvalidArgument, "invalid letter symbol");
    }
    RenderedPlate plate = rasterize_plate(spec);
    Rng rng(spec.seed, Stream::PlateNoise, 0);
    add_noise(plate.image, spec.noise_sigma, rng);
    plate.truth.plate_box = BBox{0, 0, plate.truth.plate_width, plate.truth.plate_height};
    plate.truth.corners = rotated_corners(plate.truth.plate_box, 0.0);
    return plate;
}

RenderedPlate render_scene(const SceneSpec& spec) {
    validate(spec);
    RenderedPlate plate = rasterize_plate(spec);
    const int pw = plate.truth.plate_width;
    const int ph = plate.truth.plate_height;
    const BBox box{spec.pos_x, spec.pos_y, pw, ph};

    Rng clutter_rng(spec.seed, Stream::Clutter, 0);
    const auto base = static_cast<std::uint8_t>(clutter_rng.randint(60, 170));
    GrayImage scene(kSceneWidth, kSceneHeight, base);

    // Exclusion zone: rotated plate extent plus a margin.
    const auto corners = rotated_corners(box, spec.skew);
    double ex0 = kSceneWidth, ey0 = kSceneHeight, ex1 = 0, ey1 = 0;
    for (const Point& p : corners) {
        ex0 = std::min(ex0, p.x);
        ey0 = std::min(ey0, p.y);
        ex1 = std::max(ex1, p.x);
        ey1 = std::max(ey1, p.y);
    }
    constexpr int kMargin = 24;
    const int n_rects = static_cast<int>(std::lround(spec.clutter_density * 24.0));
    for (int i = 0; i < n_rects; ++i) {
        for (int attempt = 0; attempt < 20; ++attempt) {
            const int rw = clutter_rng.randint(16, 320);
            const int rh = clutter_rng.randint(16, 240);
            const int rx = clutter_rng.randint(0, kSceneWidth - rw);
            const int ry = clutter_rng.randint(0, kSceneHeight - rh);
            const auto value = static_cast<std::uint8_t>(clutter_rng.randint(0, 255));
            const bool overlaps = rx < ex1 + kMargin && rx + rw > ex0 - kMargin &&
                                  ry < ey1 + kMargin && ry + rh > ey0 - kMargin;
            if (overlaps) continue;
            for (int y = ry; y < ry + rh; ++y)
                for (int x = rx; x < rx + rw; ++x) scene.at(x, y) = value;
            break;
        }
    }

    // Composite with inverse mapping about the plate centre.
    const double pivot_px = (pw - 1) / 2.0;
    const double pivot_py = (ph - 1) / 2.0;
    const double scx = spec.pos_x + pivot_px;
    const double scy = spec.pos_y + pivot_py;
    const double rad = spec.skew * std::numbers::pi / 180.0;
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    const int x0 = std::max(0, static_cast<int>(std::floor(ex0)) - 1);
    const int y0 = std::max(0, static_cast<int>(std::floor(ey0)) - 1);
    const int x1 = std::min(kSceneWidth - 1, static_cast<int>(std::ceil(ex1)) + 1);
    const int y1 = std::min(kSceneHeight - 1, static_cast<int>(std::ceil(ey1)) + 1);
    const GrayImage& face = plate.image;
    for (int v = y0; v <= y1; ++v) {
        for (int u = x0; u <= x1; ++u) {
            const double du = u - scx;
            const double dv = v - scy;
            const double px = pivot_px + du * c - dv * s;
            const double py = pivot_py + du * s + dv * c;
            if (px < -0.5 || py < -0.5 || px > pw - 0.5 || py > ph - 0.5) continue;
            const double cxp = std::clamp(px, 0.0, pw - 1.0);
            const double cyp = std::clamp(py, 0.0, ph - 1.0);
            const int ix = std::min(static_cast<int>(cxp), pw - 1);
            const int iy = std::min(static_cast<int>(cyp), ph - 1);
            const int jx = std::min(ix + 1, pw - 1);
            const int jy = std::min(iy + 1, ph - 1);
            const double fx = cxp - ix;
            const double fy = cyp - iy;
            const double top = face.at(ix, iy) * (1 - fx) + face.at(jx, iy) * fx;
            const double bot = face.at(ix, jy) * (1 - fx) + face.at(jx, jy) * fx;
            scene.at(u, v) = clamp_byte(top * (1 - fy) + bot * fy);
        }
    }

    if (spec.illumination_slope != 0.0) {
        for (int y = 0; y < kSceneHeight; ++y) {
            std::uint8_t* row = scene.row(y);
            for (int x = 0; x < kSceneWidth; ++x) {
                row[x] = clamp_byte(row[x] + spec.illumination_slope * (x - kSceneWidth / 2) / 1000.0);
            }
        }
    }
    Rng noise_rng(spec.seed, Stream::SceneNoise, 0);
    add_noise(scene, spec.noise_sigma, noise_rng);

    plate.truth.plate_box = box;
    plate.truth.corners = corners;
    return {std::move(scene), std::move(plate.truth)};
}

void validate(const CorpusRanges& r) {
    require(r.skew_min <= r.skew_max && r.skew_min >= -10.0 && r.skew_max <= 10.0,
            "skew range must lie within [-10,10]");
    require(r.skew_step >= 0.0, "skew step must be >= 0");
    require(r.plate_width_min >= 64 && r.plate_width_min <= r.plate_width_max &&
                r.plate_width_max <= 800,
            "plate width range must lie within [64,800]");
    require(r.noise_min >= 0.0 && r.noise_min <= r.noise_max, "invalid noise range");
    require(r.illumination_min <= r.illumination_max, "invalid illumination range");
    require(r.clutter_min >= 0.0 && r.clutter_min <= r.clutter_max && r.clutter_max <= 1.0,
            "clutter range must lie within [0,1]");
    require(r.digits_min >= 0 && r.digits_min <= r.digits_max && r.digits_max <= 3,
            "digit count range must lie within [0,3]");
    require(r.letters_min >= 0 && r.letters_min <= r.letters_max && r.letters_max <= 3,
            "letter count range must lie within [0,3]");
    require(r.digits_max + r.letters_max >= 1, "plates need at least one character");
    require(r.subtitle_probability >= 0.0 && r.subtitle_probability <= 1.0,
            "subtitle probability must be in [0,1]");
    if (r.text_mode == TextMode::Identity) {
        require(r.identities >= 1, "identity mode needs at least one identity");
    }
}

namespace {

void random_text(Rng& rng, const CorpusRanges& r, std::vector<int>& digits, std::vector<int>& letters) {
    digits.clear();
    letters.clear();
    int nd = rng.randint(r.digits_min, r.digits_max);
    int nl = rng.randint(r.letters_min, r.letters_max);
    if (nd + nl == 0) {
        if (r.digits_max > 0) nd = 1; else nl = 1;
    }
    for (int i = 0; i < nd; ++i) digits.push_back(rng.randint(0, LabelAlphabet::kDigits - 1));
    for (int i = 0; i < nl; ++i)
        letters.push_back(LabelAlphabet::kDigits + rng.randint(0, LabelAlphabet::kLetters - 1));
}

void identity_text(std::uint64_t seed, int identity, const CorpusRanges& r, std::vector<int>& digits,
                   std::vector<int>& letters) {
    // Identity texts are made distinct by rejecting any text drawn for a lower id.
    std::set<std::pair<std::vector<int>, std::vector<int>>> taken;
    for (int id = 0; id <= identity; ++id) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            Rng rng(seed, Stream::IdentityText, (static_cast<std::uint64_t>(id) << 16) + attempt);
            random_text(rng, r, digits, letters);
            if (taken.insert({digits, letters}).second) break;
        }
    }
}

}  // namespace

SceneSpec draw_spec(std::uint64_t seed, std::uint64_t index, const CorpusRanges& r) {
    validate(r);
    Rng rng(seed, Stream::Spec, index);
    SceneSpec spec;
    spec.seed = splitmix64(seed ^ splitmix64(index));
    if (r.skew_step > 0.0) {
        const int steps = static_cast<int>(std::floor((r.skew_max - r.skew_min) / r.skew_step + 1e-9));
        spec.skew = r.skew_min + r.skew_step * rng.randint(0, steps);
    } else {
        spec.skew = rng.uniform(r.skew_min, r.skew_max);
    }
    spec.plate_width = rng.randint(r.plate_width_min, r.plate_width_max);
    spec.noise_sigma = rng.uniform(r.noise_min, r.noise_max);
    spec.illumination_slope = rng.uniform(r.illumination_min, r.illumination_max);
    spec.clutter_density = rng.uniform(r.clutter_min, r.clutter_max);
    spec.subtitle = rng.uniform() < r.subtitle_probability;

    const int w = spec.plate_width;
    const int h = w / 2;
    const double rad = std::abs(spec.skew) * std::numbers::pi / 180.0;
    const double half_x = (w * std::cos(rad) + h * std::sin(rad)) / 2.0;
    const double half_y = (w * std::sin(rad) + h * std::cos(rad)) / 2.0;
    constexpr double kEdge = 16.0;
    const double cx = rng.uniform(half_x + kEdge, kSceneWidth - half_x - kEdge);
    const double cy = rng.uniform(half_y + kEdge, kSceneHeight - half_y - kEdge);
    spec.pos_x = static_cast<int>(std::lround(cx - w / 2.0));
    spec.pos_y = static_cast<int>(std::lround(cy - h / 2.0));

    switch (r.text_mode) {
        case TextMode::Random:
            random_text(rng, r, spec.digits, spec.letters);
            break;
        case TextMode::Cycle: {
            // Walks the digit and letter sets in order so every class recurs evenly.
            for (int i = 0; i < r.digits_max; ++i)
                spec.digits.push_back(static_cast<int>((index * r.digits_max + i) % LabelAlphabet::kDigits));
            for (int i = 0; i < r.letters_max; ++i)
                spec.letters.push_back(LabelAlphabet::kDigits +
                                       static_cast<int>((index * r.letters_max + i) % LabelAlphabet::kLetters));
            break;
        }
        case TextMode::Identity: {
            spec.identity = static_cast<int>(index % static_cast<std::uint64_t>(r.identities));
            identity_text(seed, spec.identity, r, spec.digits, spec.letters);
            break;
        }
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

using nlohmann::json;

json box_json(const BBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

BBox box_from(const json& j) {
    require(j.is_array() && j.size() == 4, "manifest box must have four integers");
    return BBox{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

}  // namespace

std::string manifest_line(const ManifestRecord& rec) {
    const GroundTruth& t = rec.truth;
    const SceneSpec& s = rec.spec;
    json corners = json::array();
    for (const Point& p : t.corners) corners.push_back(json::array({p.x, p.y}));
    json glyphs = json::array();
    for (const BBox& b : t.glyph_boxes) glyphs.push_back(box_json(b));
    json labels = json::array();
    for (int l : t.labels) labels.push_back(std::string(LabelAlphabet::at(l).id));
    json digits = json::array();
    for (int d : s.digits) digits.push_back(std::string(LabelAlphabet::at(d).id));
    json letters = json::array();
    for (int l : s.letters) letters.push_back(std::string(LabelAlphabet::at(l).id));

    json j;
    j["index"] = rec.index;
    j["image"] = rec.image;
    j["text"] = t.plate_text;
    j["digits"] = digits;
    j["letters"] = letters;
    j["labels"] = labels;
    j["identity"] = t.identity;
    j["skew"] = t.skew;
    j["plate_box"] = box_json(t.plate_box);
    j["plate_size"] = json::array({t.plate_width, t.plate_height});
    j["plate_corners"] = corners;
    j["glyph_boxes"] = glyphs;
    j["glyph_ink"] = t.glyph_ink;
    j["scene"] = {{"seed", s.seed},
                  {"plate_width", s.plate_width},
                  {"pos", json::array({s.pos_x, s.pos_y})},
                  {"noise_sigma", s.noise_sigma},
                  {"illumination_slope", s.illumination_slope},
                  {"clutter_density", s.clutter_density},
                  {"subtitle", s.subtitle}};
    return j.dump();
}

ManifestRecord parse_manifest_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        fail(ErrorCode::Format, std::string("manifest line is not valid JSON: ") + e.what());
    }
    try {
        ManifestRecord rec;
        rec.index = j.at("index").get<std::uint64_t>();
        rec.image = j.at("image").get<std::string>();
        auto ids = [](const json& arr, std::vector<int>& out) {
            for (const auto& v : arr) {
                const auto idx = LabelAlphabet::find_id(v.get<std::string>());
                if (!idx) fail(ErrorCode::Format, "unknown symbol id in manifest: " + v.get<std::string>());
                out.push_back(*idx);
            }
        };
        ids(j.at("digits"), rec.spec.digits);
        ids(j.at("letters"), rec.spec.letters);
        ids(j.at("labels"), rec.truth.labels);
        rec.truth.plate_text = j.at("text").get<std::string>();
        rec.truth.identity = j.at("identity").get<int>();
        rec.spec.identity = rec.truth.identity;
        rec.truth.skew = j.at("skew").get<double>();
        rec.spec.skew = rec.truth.skew;
        rec.truth.plate_box = box_from(j.at("plate_box"));
        rec.truth.plate_width = j.at("plate_size")[0].get<int>();
        rec.truth.plate_height = j.at("plate_size")[1].get<int>();
        const auto& corners = j.at("plate_corners");
        require(corners.size() == 4, "manifest needs four plate corners");
        for (int i = 0; i < 4; ++i) {
            rec.truth.corners[i] = {corners[i][0].get<double>(), corners[i][1].get<double>()};
        }
        for (const auto& b : j.at("glyph_boxes")) rec.truth.glyph_boxes.push_back(box_from(b));
        rec.truth.glyph_ink = j.at("glyph_ink").get<std::vector<long long>>();
        if (rec.truth.glyph_boxes.size() != rec.truth.labels.size()) {
            fail(ErrorCode::Format, "manifest glyph box count does not match label count");
        }
        const auto& scene = j.at("scene");
        rec.spec.seed = scene.at("seed").get<std::uint64_t>();
        rec.spec.plate_width = scene.at("plate_width").get<int>();
        rec.spec.pos_x = scene.at("pos")[0].get<int>();
        rec.spec.pos_y = scene.at("pos")[1].get<int>();
        rec.spec.noise_sigma = scene.at("noise_sigma").get<double>();
        rec.spec.illumination_slope = scene.at("illumination_slope").get<double>();
        rec.spec.clutter_density = scene.at("clutter_density").get<double>();
        rec.spec.subtitle = scene.at("subtitle").get<bool>();
        return rec;
    } catch (const json::exception& e) {
        fail(ErrorCode::Format, std::string("malformed manifest record: ") + e.what());
    }
}

std::vector<ManifestRecord> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::Io, path + ": cannot open manifest");
    }
    std::vector<ManifestRecord> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(parse_manifest_line(line));
        } catch (const Error& e) {
            fail(e.code(), path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::string generate_corpus(std::uint64_t n, std::uint64_t seed, const CorpusRanges& ranges,
                            const std::string& out_dir, std::uint64_t first_index, int parallelism) {
    require(n >= 1, "corpus size must be >= 1");
    validate(ranges);
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    std::error_code ec;
    if (!fs::exists(dir)) {
        const fs::path parent = dir.parent_path();
        if (!parent.empty() && !fs::is_directory(parent)) {
            fail(ErrorCode::Io, out_dir + ": parent directory does not exist");
        }
        fs::create_directory(dir, ec);
        if (ec) fail(ErrorCode::Io, out_dir + ": " + ec.message());
    } else if (!fs::is_directory(dir)) {
        fail(ErrorCode::Io, out_dir + ": not a directory");
    }

    const fs::path manifest = dir / "manifest.jsonl";
    const fs::path tmp = dir / "manifest.jsonl.tmp";
    const std::uint64_t workers = static_cast<std::uint64_t>(std::max(1, parallelism));
    const std::uint64_t batch = 16 * workers;
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) fail(ErrorCode::Io, tmp.string() + ": cannot open for writing");
        for (std::uint64_t start = first_index; start < first_index + n; start += batch) {
            const std::uint64_t count = std::min(batch, first_index + n - start);
            std::vector<ManifestRecord> recs(count);
            std::vector<std::exception_ptr> errors(count);
            std::atomic<std::uint64_t> next{0};
            auto work = [&] {
                for (std::uint64_t k = next++; k < count; k = next++) {
                    try {
                        ManifestRecord& rec = recs[k];
                        rec.index = start + k;
                        rec.spec = draw_spec(seed, rec.index, ranges);
                        RenderedPlate scene = render_scene(rec.spec);
                        char name[32];
                        std::snprintf(name, sizeof name, "scene_%06llu.pgm",
                                      static_cast<unsigned long long>(rec.index));
                        rec.image = name;
                        imaging::write_pgm(scene.image, (dir / name).string());
                        rec.truth = std::move(scene.truth);
                    } catch (...) {
                        errors[k] = std::current_exception();
                    }
                }
            };
            std::vector<std::thread> pool;
            for (std::uint64_t t = 1; t < std::min(workers, count); ++t) pool.emplace_back(work);
            work();
            for (auto& t : pool) t.join();
            for (const auto& e : errors) {
                if (e) std::rethrow_exception(e);
            }
            for (const ManifestRecord& rec : recs) out << manifest_line(rec) << '\n';
        }
        if (!out) fail(ErrorCode::Io, tmp.string() + ": write failed");
    }
    fs::rename(tmp, manifest, ec);
    if (ec) fail(ErrorCode::Io, manifest.string() + ": " + ec.message());
    return manifest.string();
}

}  // namespace vlpr::synth
