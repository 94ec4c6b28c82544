#include "lanenum/scene.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace lanenum {
namespace {

// Geometry margins, as fractions of the drawable span (W-1 or H-1).
constexpr double kVxLo = 0.475, kVxHi = 0.525;
constexpr double kVyLo = 0.22, kVyHi = 0.32;
constexpr double kCenterMargin = 0.107;  // keeps every fitted slope below ~9
constexpr double kEdge = 0.02;
constexpr double kJitterMax = 0.02;
constexpr double kTopClearance = 0.22;  // no stroke closer to the vanishing point
constexpr double kDashLenFrac = 0.14, kDashGapFrac = 0.08;

// Strokes are painted as horizontal runs of 2*halfw+1 pixels per row. Wide
// strokes need more clearance between neighbouring lines than thin ones.
int stroke_halfw(int width) { return width >= 80 ? 1 : 0; }
double line_separation(int width) { return width >= 80 ? 7.0 : 4.0; }
double min_lane_gap(int width) { return (width >= 80 ? 0.082 : 0.09) * (width - 1); }

struct LineGeom {
    double bx = 0;       // bottom intercept including frame jitter
    double denom = 1;    // vertical span bottom row -> vanishing point
    double sec = 1;      // path length per image row
    double y_top = 0;    // highest drawable row, continuous
    bool dashed = false;
    double dash_len = 0, period = 0, total_path = 0;
};

LineGeom line_geometry(const SceneParams& scene, int idx, int frame_offset) {
    const double hb = scene.height - 1;
    const int n = (static_cast<int>(scene.jitter.size()) - 1) / 2;
    const double jit = scene.jitter.empty() ? 0.0 : scene.jitter[frame_offset + n];

    LineGeom g;
    g.bx = scene.bottom_offsets[idx] + jit;
    g.denom = hb - scene.vy;
    const double dxdy = (g.bx - scene.vx) / g.denom;
    g.sec = std::sqrt(1.0 + dxdy * dxdy);

    // Crowded neighbour pairs are truncated where their separation would
    // fall below line_separation; jitter shifts all lines equally so pair
    // gaps do not depend on the frame.
    const double sep = line_separation(scene.width);
    double t = kTopClearance;
    if (idx > 0) t = std::max(t, sep / (scene.bottom_offsets[idx] - scene.bottom_offsets[idx - 1]));
    if (idx < static_cast<int>(scene.bottom_offsets.size()) - 1)
        t = std::max(t, sep / (scene.bottom_offsets[idx + 1] - scene.bottom_offsets[idx]));
    t = std::min(t, 1.0);
    g.y_top = scene.vy + t * g.denom;
    g.total_path = (hb - g.y_top) * g.sec;

    g.dash_len = kDashLenFrac * (scene.height - 1);
    g.period = g.dash_len + kDashGapFrac * (scene.height - 1);
    const bool interior = idx > 0 && idx < static_cast<int>(scene.bottom_offsets.size()) - 1;
    g.dashed = stroke_halfw(scene.width) == 1 && interior && g.total_path >= 2.2 * g.dash_len;
    return g;
}

// Calls fn(y, center_x) for every drawn row of boundary line idx, bottom up.
// Dashes are phase-anchored at the bottom row; a partial dash at the top end
// is dropped when shorter than 0.65 dash lengths so no fragment can fall
// under the component-size floor of the mask heuristic.
void walk_line(const SceneParams& scene, int idx, int frame_offset,
               const std::function<void(int, double)>& fn) {
    const LineGeom g = line_geometry(scene, idx, frame_offset);
    const double hb = scene.height - 1;
    for (int y = scene.height - 1; y >= static_cast<int>(std::ceil(g.y_top)); --y) {
        if (g.dashed) {
            const double s = (hb - y) * g.sec;
            const double k = std::floor(s / g.period);
            if (s - k * g.period >= g.dash_len) continue;
            if (g.total_path - k * g.period < 0.65 * g.dash_len) continue;
        }
        const double cx = scene.vx + (g.bx - scene.vx) * (y - scene.vy) / g.denom;
        fn(y, cx);
    }
}

void stamp(std::vector<std::uint8_t>& data, int h, int w, int y, int x, int side,
           std::vector<std::int32_t>* pixels) {
    for (int oy = 0; oy < side; ++oy)
        for (int ox = 0; ox < side; ++ox) {
            const int py = y + oy, px = x + ox;
            if (py < 0 || py >= h || px < 0 || px >= w) continue;
            const int idx = py * w + px;
            if (data[idx] == 0) {
                data[idx] = 255;
                if (pixels) pixels->push_back(idx);
            }
        }
}

void walk_stroke(const Stroke& s, const std::function<void(int, int)>& fn) {
    const double dx = s.x1 - s.x0, dy = s.y1 - s.y0;
    const int steps = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(dx), std::abs(dy)))));
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        fn(static_cast<int>(std::lround(s.y0 + t * dy)), static_cast<int>(std::lround(s.x0 + t * dx)));
    }
}

}  // namespace

SceneParams generate_scene(Rng& rng, const GenConfig& cfg) {
    SceneParams scene;
    scene.width = cfg.width;
    scene.height = cfg.height;
    const double wd = cfg.width - 1, hd = cfg.height - 1;

    scene.ambiguous = rng.bernoulli(cfg.p_ambiguous);
    scene.vx = rng.uniform(kVxLo, kVxHi) * wd;
    scene.vy = rng.uniform(kVyLo, kVyHi) * hd;
    scene.brightness_shift = rng.uniform(-10.0, 10.0);
    scene.noise_seed = rng.next_u64();

    // Distractors imitate boundary lines (similar brightness band, steep
    // angles) but never reach the bottom edge and never enter the mask.
    const int n_distract = rng.uniform_int(1, 3);
    for (int d = 0; d < n_distract; ++d) {
        Stroke s;
        s.x0 = rng.uniform(0.08, 0.92) * wd;
        s.y0 = rng.uniform(scene.vy + 0.3 * (hd - scene.vy), 0.95 * hd);
        const double len = rng.uniform(0.12, 0.32) * hd;
        const double ang = rng.uniform(0.18, 1.3);
        const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
        s.x1 = std::clamp(s.x0 + sign * len * std::sin(ang), 0.0, wd);
        s.y1 = std::clamp(s.y0 - len * std::cos(ang), 0.0, hd);
        scene.distractors.push_back(s);
        scene.distractor_brightness.push_back(rng.uniform(150.0, 220.0));
    }

    if (scene.ambiguous) {
        scene.crossing_y = scene.vy + rng.uniform(0.35, 0.65) * (hd - scene.vy);
        // Clutter strokes stay individually below the heuristic component
        // floor and jointly below 0.5% of the mask area.
        const bool big = cfg.width >= 80;
        const int count = big ? rng.uniform_int(2, 3) : 2;
        const double min_dist = big ? 12.0 : 6.0;
        for (int c = 0; c < count; ++c) {
            double cx = 0, cy = 0;
            for (int attempt = 0; attempt < 30; ++attempt) {
                cx = rng.uniform(0.1, 0.9) * wd;
                cy = rng.uniform(scene.vy + 0.25 * (hd - scene.vy), hd - 2.0);
                bool ok = true;
                for (const Stroke& prev : scene.clutter) {
                    const double mx = 0.5 * (prev.x0 + prev.x1), my = 0.5 * (prev.y0 + prev.y1);
                    if (std::hypot(cx - mx, cy - my) < min_dist) ok = false;
                }
                if (ok) break;
            }
            const double len = big ? rng.uniform_int(4, 5) : rng.uniform_int(3, 4);
            const double ang = rng.uniform(0.0, 3.141592653589793);
            Stroke s;
            s.x0 = cx - 0.5 * len * std::cos(ang);
            s.y0 = cy - 0.5 * len * std::sin(ang);
            s.x1 = cx + 0.5 * len * std::cos(ang);
            s.y1 = cy + 0.5 * len * std::sin(ang);
            scene.clutter.push_back(s);
        }
        return scene;
    }

    scene.lane_count = rng.uniform_int(1, 5);
    scene.ego_lane = rng.uniform_int(1, scene.lane_count);
    const int n_left = scene.ego_lane - 1;
    const int n_right = scene.lane_count - scene.ego_lane;

    const double center = 0.5 * wd;
    const double margin = kCenterMargin * wd;
    const double band_lo = std::min(scene.vx, center) - margin;
    const double band_hi = std::max(scene.vx, center) + margin;
    const double edge = kEdge * wd;

    // The ego lane straddles both the image center and the vanishing point
    // with a margin; side lanes fill outward with a floor on the bottom-row
    // gap so truncated crowded lines still form full-size components.
    const double gap_lo =
        n_left > 0 ? std::min(min_lane_gap(cfg.width), (band_lo - edge) / n_left) : 0.0;
    const double gap_hi =
        n_right > 0 ? std::min(min_lane_gap(cfg.width), (wd - edge - band_hi) / n_right) : 0.0;
    const double b_left =
        rng.uniform(std::max(edge + n_left * gap_lo, band_lo - 0.06 * wd), band_lo);
    const double b_right =
        rng.uniform(band_hi, std::min(wd - edge - n_right * gap_hi, band_hi + 0.06 * wd));
    scene.lane_width = b_right - b_left;

    const auto side_widths = [&](int count, double budget, double floor) {
        std::vector<double> w(count, 0.0);
        if (count == 0) return w;
        const double util = rng.uniform(0.25, 0.9);
        double vsum = 0;
        for (double& v : w) {
            v = rng.uniform(0.35, 1.0);
            vsum += v;
        }
        const double extra = std::max(0.0, budget - count * floor);
        for (double& v : w) v = floor + extra * util * v / vsum;
        return w;
    };
    const std::vector<double> left_w = side_widths(n_left, b_left - edge, gap_lo);
    const std::vector<double> right_w = side_widths(n_right, wd - edge - b_right, gap_hi);

    scene.bottom_offsets.assign(scene.lane_count + 1, 0.0);
    scene.bottom_offsets[n_left] = b_left;
    scene.bottom_offsets[n_left + 1] = b_right;
    for (int i = 0; i < n_left; ++i)
        scene.bottom_offsets[n_left - 1 - i] = scene.bottom_offsets[n_left - i] - left_w[i];
    for (int i = 0; i < n_right; ++i)
        scene.bottom_offsets[n_left + 2 + i] = scene.bottom_offsets[n_left + 1 + i] + right_w[i];

    scene.jitter.assign(2 * cfg.temporal_radius + 1, 0.0);
    for (int k = 0; k < static_cast<int>(scene.jitter.size()); ++k)
        if (k != cfg.temporal_radius) scene.jitter[k] = rng.uniform(-kJitterMax, kJitterMax) * wd;

    for (int i = 0; i <= scene.lane_count; ++i) {
        const bool faint = rng.bernoulli(0.3);
        scene.line_brightness.push_back(faint ? rng.uniform(103.0, 124.0)
                                              : rng.uniform(148.0, 235.0));
    }
    return scene;
}

RenderedMask render_mask(const SceneParams& scene, int frame_offset) {
    RenderedMask rm;
    rm.mask.height = scene.height;
    rm.mask.width = scene.width;
    rm.mask.data.assign(static_cast<std::size_t>(scene.height) * scene.width, 0);

    if (scene.ambiguous) {
        const int side = scene.width >= 80 ? 2 : 1;
        for (const Stroke& s : scene.clutter)
            walk_stroke(s, [&](int y, int x) {
                stamp(rm.mask.data, scene.height, scene.width, y, x, side, &rm.extra_pixels);
            });
        return rm;
    }

    const int halfw = stroke_halfw(scene.width);
    rm.line_pixels.resize(scene.bottom_offsets.size());
    for (int i = 0; i < static_cast<int>(scene.bottom_offsets.size()); ++i)
        walk_line(scene, i, frame_offset, [&](int y, double cx) {
            const int x0 = static_cast<int>(std::lround(cx));
            for (int x = std::max(0, x0 - halfw); x <= std::min(scene.width - 1, x0 + halfw); ++x) {
                const int idx = y * scene.width + x;
                if (rm.mask.data[idx] == 0) {
                    rm.mask.data[idx] = 255;
                    rm.line_pixels[i].push_back(idx);
                }
            }
        });
    return rm;
}

ImageU8 render_image(const SceneParams& scene) {
    const int w = scene.width, h = scene.height;
    ImageU8 img;
    img.height = h;
    img.width = w;
    img.channels = 3;
    img.data.assign(static_cast<std::size_t>(3) * h * w, 0);

    std::vector<double> base(static_cast<std::size_t>(3) * h * w, 0.0);
    const auto put = [&](int c, int y, int x, double v) {
        if (y >= 0 && y < h && x >= 0 && x < w) base[(static_cast<std::size_t>(c) * h + y) * w + x] = v;
    };
    for (int y = 0; y < h; ++y) {
        if (y < scene.vy) {
            const double t = y / std::max(1.0, scene.vy);
            for (int x = 0; x < w; ++x) {
                put(0, y, x, 142.0 + 18.0 * t);
                put(1, y, x, 158.0 + 16.0 * t);
                put(2, y, x, 178.0 + 14.0 * t);
            }
        } else {
            const double u = (y - scene.vy) / std::max(1.0, h - 1 - scene.vy);
            const double road = 118.0 - 33.0 * u;
            for (int x = 0; x < w; ++x) {
                put(0, y, x, road + 2.0);
                put(1, y, x, road);
                put(2, y, x, road);
            }
        }
    }

    const int halfw = stroke_halfw(w);
    if (!scene.ambiguous) {
        for (int i = 0; i < static_cast<int>(scene.bottom_offsets.size()); ++i) {
            const double b = scene.line_brightness[i];
            walk_line(scene, i, 0, [&](int y, double cx) {
                const int x0 = static_cast<int>(std::lround(cx));
                for (int x = x0 - halfw; x <= x0 + halfw; ++x) {
                    put(0, y, x, b);
                    put(1, y, x, b);
                    put(2, y, x, b * 0.92);
                }
            });
        }
    }

    const auto paint_stamp = [&](int y, int x, int side, double v) {
        for (int oy = 0; oy < side; ++oy)
            for (int ox = 0; ox < side; ++ox)
                for (int c = 0; c < 3; ++c) put(c, y + oy, x + ox, v - (c == 2 ? 6.0 : 0.0));
    };
    for (std::size_t d = 0; d < scene.distractors.size(); ++d) {
        const double b = scene.distractor_brightness[d];
        walk_stroke(scene.distractors[d],
                    [&](int y, int x) { paint_stamp(y, x, halfw + 1, b); });
    }
    if (scene.ambiguous) {
        for (const Stroke& s : scene.clutter)
            walk_stroke(s, [&](int y, int x) { paint_stamp(y, x, halfw + 1, 150.0); });
        if (scene.crossing_y >= 0) {
            const int cy = static_cast<int>(std::lround(scene.crossing_y));
            for (int y = cy - halfw; y <= cy + halfw; ++y)
                for (int x = static_cast<int>(0.08 * w); x <= static_cast<int>(0.92 * w); ++x)
                    for (int c = 0; c < 3; ++c) put(c, y, x, 162.0);
        }
    }

    Rng noise(scene.noise_seed);
    for (std::size_t i = 0; i < base.size(); ++i) {
        const double v = base[i] + scene.brightness_shift + noise.uniform(-14.0, 14.0);
        img.data[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
    return img;
}

RenderedFrame render(const SceneParams& scene, int frame_offset) {
    RenderedFrame fr;
    fr.mask = render_mask(scene, frame_offset);
    if (frame_offset == 0) fr.image = render_image(scene);
    return fr;
}

Mask corrupt(const RenderedMask& rendered, const CorruptionConfig& cfg, Rng& rng) {
    const int h = rendered.mask.height, w = rendered.mask.width;
    Mask out;
    out.height = h;
    out.width = w;
    out.data.assign(static_cast<std::size_t>(h) * w, 0);

    std::vector<std::uint8_t> scratch;
    for (const std::vector<std::int32_t>& pixels : rendered.line_pixels) {
        if (cfg.line_dropout_p > 0 && rng.bernoulli(cfg.line_dropout_p)) continue;
        const int delta =
            cfg.thickness_jitter > 0 ? rng.uniform_int(-cfg.thickness_jitter, cfg.thickness_jitter)
                                     : 0;
        if (delta > 0) {
            for (const std::int32_t idx : pixels) {
                const int y = idx / w, x = idx % w;
                for (int oy = -delta; oy <= delta; ++oy)
                    for (int ox = -delta; ox <= delta; ++ox) {
                        const int py = y + oy, px = x + ox;
                        if (py >= 0 && py < h && px >= 0 && px < w) out.data[py * w + px] = 255;
                    }
            }
        } else if (delta < 0) {
            scratch.assign(static_cast<std::size_t>(h) * w, 0);
            for (const std::int32_t idx : pixels) scratch[idx] = 1;
            std::vector<std::int32_t> alive(pixels);
            for (int round = 0; round < -delta; ++round) {
                std::vector<std::int32_t> keep, gone;
                for (const std::int32_t idx : alive) {
                    const int y = idx / w, x = idx % w;
                    const bool boundary = y == 0 || y == h - 1 || x == 0 || x == w - 1 ||
                                          !scratch[idx - w] || !scratch[idx + w] ||
                                          !scratch[idx - 1] || !scratch[idx + 1];
                    (boundary ? gone : keep).push_back(idx);
                }
                for (const std::int32_t idx : gone) scratch[idx] = 0;
                alive = std::move(keep);
            }
            for (const std::int32_t idx : alive) out.data[idx] = 255;
        } else {
            for (const std::int32_t idx : pixels) out.data[idx] = 255;
        }
    }
    for (const std::int32_t idx : rendered.extra_pixels) out.data[idx] = 255;

    if (cfg.pixel_flip_q > 0)
        for (std::uint8_t& v : out.data)
            if (rng.bernoulli(cfg.pixel_flip_q)) v = v ? 0 : 255;
    return out;
}

}  // namespace lanenum
