// Synthetic road scenes: ground-truth geometry, mask/image rendering and the
// parametric mask-corruption model that stands in for imperfect detection.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lanenum/common.hpp"
#include "lanenum/image.hpp"

namespace lanenum {

// Short free-standing stroke, used for class-0 clutter and image-only
// distractors. Coordinates are pixels, image convention (y down).
struct Stroke {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

// Ground truth for one scene. All stochastic rendering inputs (brightness,
// clutter, noise seed) are sampled here so that render() is a pure function.
struct SceneParams {
    int width = 0, height = 0;
    bool ambiguous = false;
    int lane_count = 0;  // L in [1,5]; 0 for ambiguous scenes
    int ego_lane = 0;    // e in [1,L], counted from the left
    double vx = 0, vy = 0;
    std::vector<double> bottom_offsets;  // L+1 boundary x-intercepts at the bottom row
    double lane_width = 0;               // ego lane width at the bottom row
    std::vector<double> jitter;          // per-frame ego lateral offset, length 2n+1

    std::vector<double> line_brightness;  // image stroke brightness per boundary
    std::vector<Stroke> clutter;          // ambiguous scenes: mask+image smudges
    std::vector<Stroke> distractors;          // image-only strokes, never in the mask
    std::vector<double> distractor_brightness;  // per stroke, overlaps line range
    double crossing_y = -1;               // ambiguous scenes: image band row, <0 = none
    double brightness_shift = 0;          // global image brightness offset
    std::uint64_t noise_seed = 0;

    int label() const { return ambiguous ? 0 : std::min(ego_lane, 4); }
};

struct GenConfig {
    int width = 100;
    int height = 100;
    int temporal_radius = 1;  // n; masks cover frames t-n..t+n
    double p_ambiguous = 0.1;
};

// Per-frame whole-line erasure, salt/pepper flips and stroke thickness
// jitter. With all parameters zero the corrupted mask equals the input
// bit for bit.
struct CorruptionConfig {
    double line_dropout_p = 0.0;
    double pixel_flip_q = 0.0;
    int thickness_jitter = 0;
};

// Mask plus per-line pixel membership; line identity is what the corruption
// model needs for whole-line erasure.
struct RenderedMask {
    Mask mask;
    std::vector<std::vector<std::int32_t>> line_pixels;  // per boundary line
    std::vector<std::int32_t> extra_pixels;              // clutter, never erased as a line
};

struct RenderedFrame {
    std::optional<ImageU8> image;  // present only for frame_offset 0
    RenderedMask mask;
};

// Draws a scene. The geometry is constructed so that on a perfect mask every
// boundary line yields a separate connected component of at least ~20 pixels
// whose fitted slope sign equals the side of the vanishing point it starts
// from; the slope-count heuristic is exact by construction.
SceneParams generate_scene(Rng& rng, const GenConfig& cfg);

RenderedMask render_mask(const SceneParams& scene, int frame_offset);
ImageU8 render_image(const SceneParams& scene);
RenderedFrame render(const SceneParams& scene, int frame_offset);

Mask corrupt(const RenderedMask& rendered, const CorruptionConfig& cfg, Rng& rng);

}  // namespace lanenum
