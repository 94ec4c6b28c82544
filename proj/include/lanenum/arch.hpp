// Layer specifications, architecture configuration and analytic cost model.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lanenum/common.hpp"

namespace lanenum {

enum class LayerKind { ConvStem, ConvBlock, Flatten, Dense, SoftmaxOutput };

// ConvStem:  Conv(3x3, pad 1, stride 1) -> ReLU
// ConvBlock: Conv(3x3, pad 1, stride 1) -> ReLU -> BatchNorm -> MaxPool(2x2, stride 2) -> Dropout
// Dense:     affine -> ReLU -> Dropout
// SoftmaxOutput: affine -> softmax over 5 classes
struct LayerSpec {
    LayerKind kind = LayerKind::Flatten;
    int out_channels = 0;       // ConvStem / ConvBlock
    int kernel = 3;
    int stride = 1;
    int pad = 1;
    int pool = 2;               // ConvBlock
    double dropout_rate = 0.0;  // ConvBlock / Dense
    int out_units = 0;          // Dense / SoftmaxOutput (class count)

    static LayerSpec conv_stem(int out_channels) {
        LayerSpec s;
        s.kind = LayerKind::ConvStem;
        s.out_channels = out_channels;
        return s;
    }
    static LayerSpec conv_block(int out_channels, double dropout_rate) {
        LayerSpec s;
        s.kind = LayerKind::ConvBlock;
        s.out_channels = out_channels;
        s.dropout_rate = dropout_rate;
        return s;
    }
    static LayerSpec flatten() { return LayerSpec{}; }
    static LayerSpec dense(int out_units, double dropout_rate) {
        LayerSpec s;
        s.kind = LayerKind::Dense;
        s.out_units = out_units;
        s.dropout_rate = dropout_rate;
        return s;
    }
    static LayerSpec softmax_output(int classes = 5) {
        LayerSpec s;
        s.kind = LayerKind::SoftmaxOutput;
        s.out_units = classes;
        return s;
    }
};

struct Shape3 {
    int c = 0, h = 0, w = 0;
    bool operator==(const Shape3&) const = default;
};

struct ArchConfig {
    int input_channels = 3;
    int input_h = 100;
    int input_w = 100;
    std::vector<LayerSpec> layers;
};

// Throws ConfigError if the layer cannot consume `in`.
Shape3 layer_output_shape(const LayerSpec& spec, const Shape3& in);

// Shapes at every layer boundary; chain[0] is the input shape.
std::vector<Shape3> shape_chain(const ArchConfig& cfg);

// Verifies that layer shapes chain and the output class count is 5.
void validate_config(const ArchConfig& cfg);

// Stable per-layer identifier, e.g. "conv_block1(64)".
std::string layer_name(const LayerSpec& spec, int index);

const char* layer_kind_name(LayerKind kind);

struct LayerCost {
    std::string name;
    std::int64_t params = 0;
    std::int64_t flops = 0;
};

struct CostReport {
    std::int64_t params = 0;
    std::int64_t flops = 0;
    std::vector<LayerCost> per_layer;
    std::string convention;
};

// Closed-form parameter and FLOP counts. One multiply-accumulate counts as
// two FLOPs; ReLU, pooling, batchnorm and dropout count as zero.
CostReport count_costs(const ArchConfig& cfg);

}  // namespace lanenum
