// Slope-count heuristic on binary lane masks: connected components, total
// least squares line fits, collinear merging and the left-line count.
#pragma once

#include <vector>

#include "lanenum/image.hpp"

namespace lanenum {

struct HeuristicConfig {
    int min_area = 20;                    // components below this are noise
    double merge_angle_deg = 5.0;         // dash fragments merge under both
    double merge_offset_px = 3.0;         //   thresholds at once
    double vertical_slope_cutoff = 10.0;  // beyond this a fit is near-vertical
};

// Principal-axis fit of one component. Coordinates are pixels with y up, so
// a lane boundary left of the vanishing point has positive slope. Central
// second moments are kept so merged fits pool exactly.
struct LineFit {
    double cx = 0, cy = 0;  // centroid, y up
    double slope = 0;       // dy/dx of the principal axis, dy >= 0
    bool near_vertical = false;
    int support = 0;
    double sxx = 0, sxy = 0, syy = 0;
};

struct MaskAnalysis {
    std::vector<LineFit> fits;  // after merging
    int raw_component_count = 0;  // size-filtered, before merging
    int left_count = 0;
    int predicted_label = 0;  // min(left_count, 4)
};

// 8-connected labels, row-major discovery order; -1 marks background.
std::vector<int> label_components(const Mask& mask);

std::vector<LineFit> fit_components(const Mask& mask, const HeuristicConfig& cfg);

std::vector<LineFit> merge_collinear(std::vector<LineFit> fits, const HeuristicConfig& cfg);

MaskAnalysis analyze_mask(const Mask& mask, const HeuristicConfig& cfg);

int predict_lane_heuristic(const Mask& mask, const HeuristicConfig& cfg);

}  // namespace lanenum
