#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "lanenum/maskgeom.hpp"
#include "lanenum/scene.hpp"

using namespace lanenum;

namespace {

Mask blank(int h, int w) {
    Mask m;
    m.height = h;
    m.width = w;
    m.data.assign(static_cast<std::size_t>(h) * w, 0);
    return m;
}

void set(Mask& m, int y, int x) { m.data[static_cast<std::size_t>(y) * m.width + x] = 255; }

Mask mirrored(const Mask& m) {
    Mask out = m;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            out.data[static_cast<std::size_t>(y) * m.width + x] =
                m.data[static_cast<std::size_t>(y) * m.width + (m.width - 1 - x)];
    return out;
}

SceneParams scene_at(std::uint64_t seed, int index, const GenConfig& cfg) {
    Rng rng = derive_stream(seed, static_cast<std::uint64_t>(index), 0, "scene");
    return generate_scene(rng, cfg);
}

}  // namespace

TEST_CASE("empty mask yields no fits and class 0") {
    const Mask m = blank(50, 50);
    CHECK(fit_components(m, HeuristicConfig{}).empty());
    CHECK(predict_lane_heuristic(m, HeuristicConfig{}) == 0);
}

TEST_CASE("components under min_area are discarded") {
    Mask m = blank(50, 50);
    for (int i = 0; i < 10; ++i) set(m, 10 + i, 10);  // 10 pixels < 20
    CHECK(fit_components(m, HeuristicConfig{}).empty());
}

TEST_CASE("two disjoint strokes produce two fits") {
    Mask m = blank(60, 60);
    for (int i = 0; i < 25; ++i) {
        set(m, 5 + i, 5);
        set(m, 5 + i, 40);
    }
    CHECK(fit_components(m, HeuristicConfig{}).size() == 2);
}

TEST_CASE("a 45 degree line fits slope 1") {
    Mask m = blank(64, 64);
    for (int i = 0; i < 40; ++i) set(m, m.height - 1 - i, i);  // y_up == x
    const auto fits = fit_components(m, HeuristicConfig{});
    REQUIRE(fits.size() == 1);
    CHECK(!fits[0].near_vertical);
    CHECK(fits[0].slope == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("a horizontal stroke fits slope 0") {
    Mask m = blank(40, 40);
    for (int i = 0; i < 30; ++i) set(m, 20, 4 + i);
    const auto fits = fit_components(m, HeuristicConfig{});
    REQUIRE(fits.size() == 1);
    CHECK(fits[0].slope == doctest::Approx(0.0));
}

TEST_CASE("near-vertical fits count by centroid side") {
    HeuristicConfig cfg;
    Mask left = blank(60, 60);
    for (int i = 0; i < 30; ++i) set(left, 10 + i, 10);
    const auto lf = fit_components(left, cfg);
    REQUIRE(lf.size() == 1);
    CHECK(lf[0].near_vertical);
    CHECK(analyze_mask(left, cfg).left_count == 1);

    Mask right = blank(60, 60);
    for (int i = 0; i < 30; ++i) set(right, 10 + i, 50);
    CHECK(analyze_mask(right, cfg).left_count == 0);
}

TEST_CASE("dashes of one line merge into a single fit, support preserved") {
    HeuristicConfig cfg;
    Mask m = blank(100, 100);
    // Three dashes along x = y_up (45 degrees), 3 px wide, gaps between.
    int painted = 0;
    for (const int start : {10, 40, 70}) {
        for (int i = 0; i < 20; ++i) {
            for (int t = -1; t <= 1; ++t) {
                set(m, m.height - 1 - (start + i), start + i + t);
            }
        }
    }
    auto fits = fit_components(m, cfg);
    REQUIRE(fits.size() == 3);
    int support = 0;
    for (const auto& f : fits) support += f.support;
    painted = support;

    const auto merged = merge_collinear(fits, cfg);
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].support == painted);
    CHECK(merged[0].slope == doctest::Approx(1.0).epsilon(1e-3));

    const auto twice = merge_collinear(merged, cfg);
    REQUIRE(twice.size() == 1);
    CHECK(twice[0].support == merged[0].support);
    CHECK(twice[0].cx == doctest::Approx(merged[0].cx));
}

TEST_CASE("lines 30 degrees apart never merge") {
    HeuristicConfig cfg;
    Mask m = blank(100, 100);
    for (int i = 0; i < 60; ++i) {
        set(m, 99 - i, 20 + i);                                    // 45 degrees
        const int x = 20 + static_cast<int>(std::lround(i * std::tan(15.0 * M_PI / 180.0)));
        set(m, 99 - i, 70 + x - 20);                               // 75 degrees from x-axis
    }
    const auto merged = merge_collinear(fit_components(m, cfg), cfg);
    CHECK(merged.size() == 2);
}

TEST_CASE("five positive-slope lines clamp to class 4") {
    HeuristicConfig cfg;
    Mask m = blank(100, 100);
    for (int l = 0; l < 5; ++l)
        for (int i = 0; i < 40; ++i)
            for (int t = 0; t < 2; ++t) set(m, 99 - i, 5 + 18 * l + i / 2 + t);
    const MaskAnalysis an = analyze_mask(m, cfg);
    REQUIRE(an.fits.size() == 5);
    CHECK(an.left_count == 5);
    CHECK(an.predicted_label == 4);
}

TEST_CASE("rendered left boundary of a single-lane scene has positive slope") {
    const GenConfig cfg;
    int seen = 0;
    for (int i = 0; i < 300 && seen < 10; ++i) {
        const SceneParams s = scene_at(91, i, cfg);
        if (s.ambiguous || s.lane_count != 1) continue;
        ++seen;
        const MaskAnalysis an = analyze_mask(render_mask(s, 0).mask, HeuristicConfig{});
        REQUIRE(an.fits.size() == 2);
        CHECK(an.left_count == 1);
    }
    CHECK(seen == 10);
}

TEST_CASE("perfect masks of L=3 e=2 scenes predict 2") {
    const GenConfig cfg;
    int seen = 0;
    for (int i = 0; i < 600 && seen < 10; ++i) {
        const SceneParams s = scene_at(17, i, cfg);
        if (s.ambiguous || s.lane_count != 3 || s.ego_lane != 2) continue;
        ++seen;
        CHECK(predict_lane_heuristic(render_mask(s, 0).mask, HeuristicConfig{}) == 2);
    }
    CHECK(seen == 10);
}

TEST_CASE("mirroring swaps positive and negative slope counts") {
    const GenConfig cfg;
    const HeuristicConfig hcfg;
    int checked = 0;
    for (int i = 0; i < 120; ++i) {
        const SceneParams s = scene_at(28, i, cfg);
        if (s.ambiguous) continue;
        const Mask m = render_mask(s, 0).mask;
        const MaskAnalysis an = analyze_mask(m, hcfg);
        bool any_vertical = false;
        for (const auto& f : an.fits) any_vertical |= f.near_vertical;
        if (any_vertical) continue;
        const MaskAnalysis mir = analyze_mask(mirrored(m), hcfg);
        REQUIRE(mir.fits.size() == an.fits.size());
        CHECK(mir.left_count == static_cast<int>(an.fits.size()) - an.left_count);
        ++checked;
    }
    CHECK(checked >= 80);
}

TEST_CASE("heuristic accuracy does not improve as line dropout grows") {
    const GenConfig cfg;
    const HeuristicConfig hcfg;
    const std::array<double, 3> ps{0.0, 0.15, 0.3};
    std::array<double, 3> med{};
    for (std::size_t pi = 0; pi < ps.size(); ++pi) {
        std::vector<double> accs;
        for (const std::uint64_t seed : {201ULL, 202ULL, 203ULL}) {
            int correct = 0, total = 0;
            for (int i = 0; i < 500; ++i) {
                const SceneParams s = scene_at(seed, i, cfg);
                const RenderedMask rm = render_mask(s, 0);
                CorruptionConfig cc;
                cc.line_dropout_p = ps[pi];
                Rng rng = derive_stream(seed, static_cast<std::uint64_t>(i), 0, "corrupt");
                const Mask m = corrupt(rm, cc, rng);
                correct += predict_lane_heuristic(m, hcfg) == s.label();
                ++total;
            }
            accs.push_back(static_cast<double>(correct) / total);
        }
        std::sort(accs.begin(), accs.end());
        med[pi] = accs[1];
    }
    CHECK(med[0] >= med[1]);
    CHECK(med[1] >= med[2]);
    CHECK(med[0] > 0.99);  // uncorrupted masks are read exactly
}
