#include <doctest.h>

#include <algorithm>

#include "lanenum/network.hpp"

using namespace lanenum;

namespace {

ArchConfig stem_cfg() {
    ArchConfig cfg;
    cfg.input_channels = 2;
    cfg.input_h = 6;
    cfg.input_w = 6;
    cfg.layers = {LayerSpec::conv_stem(3), LayerSpec::flatten(), LayerSpec::softmax_output(5)};
    return cfg;
}

ArchConfig block_cfg(double dropout) {
    ArchConfig cfg;
    cfg.input_channels = 2;
    cfg.input_h = 6;
    cfg.input_w = 6;
    cfg.layers = {LayerSpec::conv_block(3, dropout), LayerSpec::flatten(),
                  LayerSpec::softmax_output(5)};
    return cfg;
}

ArchConfig dense_cfg(double dropout) {
    ArchConfig cfg;
    cfg.input_channels = 2;
    cfg.input_h = 2;
    cfg.input_w = 2;
    cfg.layers = {LayerSpec::flatten(), LayerSpec::dense(7, dropout),
                  LayerSpec::softmax_output(5)};
    return cfg;
}

ArchConfig softmax_cfg() {
    ArchConfig cfg;
    cfg.input_channels = 5;
    cfg.input_h = 1;
    cfg.input_w = 1;
    cfg.layers = {LayerSpec::flatten(), LayerSpec::softmax_output(5)};
    return cfg;
}

void expect_pass(const ArchConfig& cfg, std::uint64_t seed, double tol) {
    const GradCheckReport rep = gradient_check(cfg, seed);
    REQUIRE(!rep.entries.empty());
    for (const GradCheckEntry& e : rep.entries) {
        INFO("group ", e.group, " rel err ", e.max_rel_err);
        CHECK(e.max_rel_err < tol);
    }
    CHECK(rep.max_rel_err < tol);
}

}  // namespace

TEST_CASE("finite differences agree with backprop for a conv stem") {
    expect_pass(stem_cfg(), 11, 1e-4);
}

TEST_CASE("finite differences agree with backprop for a conv block") {
    expect_pass(block_cfg(0.0), 12, 1e-4);
}

TEST_CASE("finite differences agree with backprop for a dense layer") {
    expect_pass(dense_cfg(0.0), 13, 1e-4);
}

TEST_CASE("finite differences agree with backprop for the softmax head") {
    expect_pass(softmax_cfg(), 14, 1e-4);
}

TEST_CASE("frozen dropout masks keep the check exact at nonzero rates") {
    expect_pass(block_cfg(0.25), 15, 1e-4);
    expect_pass(dense_cfg(0.5), 16, 1e-4);
}

TEST_CASE("gradient check reports every parameter group and the input") {
    const GradCheckReport rep = gradient_check(block_cfg(0.0), 17);
    std::vector<std::string> groups;
    for (const GradCheckEntry& e : rep.entries) groups.push_back(e.group);
    // conv w/b, batchnorm gain/beta, softmax affine w/b, input
    CHECK(groups.size() == 7);
    CHECK(std::find(groups.begin(), groups.end(), "input") != groups.end());
}
