#include <doctest.h>

#include <cstdlib>

#include "lanenum/variants.hpp"

using namespace lanenum;

namespace {

const ArchConfig& full_a() {
    static const ArchConfig cfg = build_config(Variant::A, Scale::full, 100, 100, 1);
    return cfg;
}

}  // namespace

TEST_CASE("full-scale shape chain halves 100 -> 50 -> 25 -> 12 and flattens to 9216") {
    const std::vector<Shape3> chain = shape_chain(full_a());
    REQUIRE(chain.size() == 8);
    CHECK(chain[0] == Shape3{3, 100, 100});
    CHECK(chain[1] == Shape3{32, 100, 100});
    CHECK(chain[2] == Shape3{64, 50, 50});
    CHECK(chain[3] == Shape3{256, 25, 25});
    CHECK(chain[4] == Shape3{64, 12, 12});
    CHECK(chain[5] == Shape3{9216, 1, 1});
    CHECK(chain[6] == Shape3{300, 1, 1});
    CHECK(chain[7] == Shape3{5, 1, 1});
}

TEST_CASE("desk-scale shape chain is 50 -> 25 -> 12 -> 6 with flatten 576") {
    const ArchConfig cfg = build_config(Variant::A, Scale::desk, 50, 50, 1);
    const std::vector<Shape3> chain = shape_chain(cfg);
    REQUIRE(chain.size() == 8);
    CHECK(chain[2] == Shape3{16, 25, 25});
    CHECK(chain[3] == Shape3{32, 12, 12});
    CHECK(chain[4] == Shape3{16, 6, 6});
    CHECK(chain[5] == Shape3{576, 1, 1});
}

TEST_CASE("full-scale variant A has exactly 3,081,997 parameters") {
    const CostReport rep = count_costs(full_a());
    CHECK(rep.params == 3'081'997);
    // Within 10% of a nominal 3M.
    CHECK(std::abs(rep.params - 3'000'000) < 300'000);
}

TEST_CASE("first-layer parameter count is 3*3*3*32 + 32 = 896") {
    const CostReport rep = count_costs(full_a());
    REQUIRE(!rep.per_layer.empty());
    CHECK(rep.per_layer[0].params == 896);
}

TEST_CASE("variant input channels and stem parameter deltas") {
    CHECK(variant_input_channels(Variant::A, 1) == 3);
    CHECK(variant_input_channels(Variant::C, 1) == 4);
    CHECK(variant_input_channels(Variant::D, 1) == 6);
    CHECK_THROWS_AS(variant_input_channels(Variant::B, 1), ConfigError);

    const CostReport a = count_costs(full_a());
    const CostReport c = count_costs(build_config(Variant::C, Scale::full, 100, 100, 1));
    const CostReport d = count_costs(build_config(Variant::D, Scale::full, 100, 100, 1));
    CHECK(c.params - a.params == 3 * 3 * 1 * 32);  // 288
    CHECK(d.params - a.params == 3 * 3 * 3 * 32);
}

TEST_CASE("flop counts match hand-derived single-layer values") {
    // 2 FLOPs per multiply-accumulate, spatial dims before pooling.
    SUBCASE("conv stem, 3 channels at 100x100") {
        ArchConfig cfg;
        cfg.input_channels = 3;
        cfg.input_h = 100;
        cfg.input_w = 100;
        cfg.layers = {LayerSpec::conv_stem(32), LayerSpec::flatten(),
                      LayerSpec::softmax_output(5)};
        const CostReport rep = count_costs(cfg);
        CHECK(rep.per_layer[0].flops == 17'280'000);  // 2*9*3*32*100*100
    }
    SUBCASE("conv block, 32 -> 64 channels at 100x100") {
        ArchConfig cfg;
        cfg.input_channels = 32;
        cfg.input_h = 100;
        cfg.input_w = 100;
        cfg.layers = {LayerSpec::conv_block(64, 0.25), LayerSpec::flatten(),
                      LayerSpec::softmax_output(5)};
        const CostReport rep = count_costs(cfg);
        CHECK(rep.per_layer[0].flops == 368'640'000);  // 2*9*32*64*100*100
    }
    SUBCASE("dense 300 -> 5") {
        ArchConfig cfg;
        cfg.input_channels = 300;
        cfg.input_h = 1;
        cfg.input_w = 1;
        cfg.layers = {LayerSpec::flatten(), LayerSpec::softmax_output(5)};
        const CostReport rep = count_costs(cfg);
        CHECK(rep.per_layer[1].flops == 3'000);  // 2*300*5
    }
}

TEST_CASE("cost report names its convention") {
    CHECK(!count_costs(full_a()).convention.empty());
}

TEST_CASE("config validation rejects broken stacks") {
    ArchConfig cfg;
    cfg.input_channels = 3;
    cfg.input_h = 10;
    cfg.input_w = 10;
    cfg.layers = {LayerSpec::conv_stem(8)};  // no softmax head
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);

    cfg.layers = {LayerSpec::dense(5, 0.0)};  // dense before flatten
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}
