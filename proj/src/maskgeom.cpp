#include "lanenum/maskgeom.hpp"

#include <array>
#include <cmath>
#include <deque>

namespace lanenum {
namespace {

// Largest-eigenvalue eigenvector of [[sxx,sxy],[sxy,syy]], canonicalised to
// dy >= 0. Falls back to the coordinate axes for degenerate moments.
void principal_axis(double sxx, double sxy, double syy, double& dx, double& dy) {
    const double half_trace = 0.5 * (sxx + syy);
    const double det_term = std::sqrt(0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy);
    const double lambda = half_trace + det_term;
    dx = sxy;
    dy = lambda - sxx;
    const double norm = std::hypot(dx, dy);
    if (norm < 1e-12) {
        dx = syy >= sxx ? 0.0 : 1.0;
        dy = syy >= sxx ? 1.0 : 0.0;
        return;
    }
    dx /= norm;
    dy /= norm;
    if (dy < 0 || (dy == 0 && dx < 0)) {
        dx = -dx;
        dy = -dy;
    }
}

LineFit fit_from_moments(double n, double sum_x, double sum_y, double sum_xx, double sum_xy,
                         double sum_yy, const HeuristicConfig& cfg) {
    LineFit f;
    f.support = static_cast<int>(n);
    f.cx = sum_x / n;
    f.cy = sum_y / n;
    f.sxx = sum_xx - n * f.cx * f.cx;
    f.sxy = sum_xy - n * f.cx * f.cy;
    f.syy = sum_yy - n * f.cy * f.cy;
    double dx = 0, dy = 0;
    principal_axis(f.sxx, f.sxy, f.syy, dx, dy);
    f.near_vertical = std::abs(dy) > cfg.vertical_slope_cutoff * std::abs(dx);
    f.slope = f.near_vertical ? (dy >= 0 ? 1.0 : -1.0) * cfg.vertical_slope_cutoff * 1e3
                              : dy / dx;
    return f;
}

void axis_of(const LineFit& f, double& dx, double& dy) {
    principal_axis(f.sxx, f.sxy, f.syy, dx, dy);
}

bool mergeable(const LineFit& a, const LineFit& b, const HeuristicConfig& cfg) {
    double ax, ay, bx, by;
    axis_of(a, ax, ay);
    axis_of(b, bx, by);
    const double cosang = std::min(1.0, std::abs(ax * bx + ay * by));
    if (std::acos(cosang) > cfg.merge_angle_deg * 3.141592653589793 / 180.0) return false;
    const double perp_b = std::abs(ax * (b.cy - a.cy) - ay * (b.cx - a.cx));
    const double perp_a = std::abs(bx * (a.cy - b.cy) - by * (a.cx - b.cx));
    return std::max(perp_a, perp_b) < cfg.merge_offset_px;
}

LineFit merge_fits(const LineFit& a, const LineFit& b, const HeuristicConfig& cfg) {
    const double n = a.support + b.support;
    const double sum_x = a.support * a.cx + b.support * b.cx;
    const double sum_y = a.support * a.cy + b.support * b.cy;
    // Parallel axis theorem turns central moments into raw moments and back.
    const double sum_xx = a.sxx + a.support * a.cx * a.cx + b.sxx + b.support * b.cx * b.cx;
    const double sum_xy = a.sxy + a.support * a.cx * a.cy + b.sxy + b.support * b.cx * b.cy;
    const double sum_yy = a.syy + a.support * a.cy * a.cy + b.syy + b.support * b.cy * b.cy;
    return fit_from_moments(n, sum_x, sum_y, sum_xx, sum_xy, sum_yy, cfg);
}

}  // namespace

std::vector<int> label_components(const Mask& mask) {
    const int h = mask.height, w = mask.width;
    std::vector<int> labels(static_cast<std::size_t>(h) * w, -1);
    int next = 0;
    std::deque<int> queue;
    for (int start = 0; start < h * w; ++start) {
        if (mask.data[static_cast<std::size_t>(start)] == 0 || labels[static_cast<std::size_t>(start)] >= 0)
            continue;
        labels[static_cast<std::size_t>(start)] = next;
        queue.push_back(start);
        while (!queue.empty()) {
            const int idx = queue.front();
            queue.pop_front();
            const int y = idx / w, x = idx % w;
            for (int oy = -1; oy <= 1; ++oy)
                for (int ox = -1; ox <= 1; ++ox) {
                    const int py = y + oy, px = x + ox;
                    if (py < 0 || py >= h || px < 0 || px >= w) continue;
                    const int nidx = py * w + px;
                    if (mask.data[static_cast<std::size_t>(nidx)] != 0 &&
                        labels[static_cast<std::size_t>(nidx)] < 0) {
                        labels[static_cast<std::size_t>(nidx)] = next;
                        queue.push_back(nidx);
                    }
                }
        }
        ++next;
    }
    return labels;
}

std::vector<LineFit> fit_components(const Mask& mask, const HeuristicConfig& cfg) {
    const std::vector<int> labels = label_components(mask);
    int count = 0;
    for (const int l : labels) count = std::max(count, l + 1);

    std::vector<std::array<double, 6>> acc(static_cast<std::size_t>(count), {0, 0, 0, 0, 0, 0});
    const int h = mask.height, w = mask.width;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int l = labels[static_cast<std::size_t>(y) * w + x];
            if (l < 0) continue;
            const double yu = h - 1 - y;  // fits live in a y-up frame
            auto& a = acc[static_cast<std::size_t>(l)];
            a[0] += 1;
            a[1] += x;
            a[2] += yu;
            a[3] += x * static_cast<double>(x);
            a[4] += x * yu;
            a[5] += yu * yu;
        }

    std::vector<LineFit> fits;
    for (const auto& a : acc)
        if (a[0] >= cfg.min_area)
            fits.push_back(fit_from_moments(a[0], a[1], a[2], a[3], a[4], a[5], cfg));
    return fits;
}

std::vector<LineFit> merge_collinear(std::vector<LineFit> fits, const HeuristicConfig& cfg) {
    bool merged = true;
    while (merged) {
        merged = false;
        for (std::size_t i = 0; i < fits.size() && !merged; ++i)
            for (std::size_t j = i + 1; j < fits.size() && !merged; ++j)
                if (mergeable(fits[i], fits[j], cfg)) {
                    fits[i] = merge_fits(fits[i], fits[j], cfg);
                    fits.erase(fits.begin() + static_cast<std::ptrdiff_t>(j));
                    merged = true;
                }
    }
    return fits;
}

MaskAnalysis analyze_mask(const Mask& mask, const HeuristicConfig& cfg) {
    MaskAnalysis out;
    std::vector<LineFit> fits = fit_components(mask, cfg);
    out.raw_component_count = static_cast<int>(fits.size());
    out.fits = merge_collinear(std::move(fits), cfg);
    for (const LineFit& f : out.fits) {
        // Positive slope in the y-up frame means the line rises toward the
        // vanishing point from the left. Near-vertical fits carry no usable
        // slope sign; side of the image center decides instead.
        if (f.near_vertical ? f.cx < 0.5 * (mask.width - 1) : f.slope > 0) ++out.left_count;
    }
    out.predicted_label = std::min(out.left_count, 4);
    return out;
}

int predict_lane_heuristic(const Mask& mask, const HeuristicConfig& cfg) {
    return analyze_mask(mask, cfg).predicted_label;
}

}  // namespace lanenum
