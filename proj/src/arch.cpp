#include "lanenum/arch.hpp"

namespace lanenum {

const char* layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::ConvStem: return "conv_stem";
        case LayerKind::ConvBlock: return "conv_block";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Dense: return "dense";
        case LayerKind::SoftmaxOutput: return "softmax_output";
    }
    return "?";
}

std::string layer_name(const LayerSpec& spec, int index) {
    std::string s = std::string(layer_kind_name(spec.kind)) + std::to_string(index);
    switch (spec.kind) {
        case LayerKind::ConvStem:
        case LayerKind::ConvBlock:
            s += "(" + std::to_string(spec.out_channels) + ")";
            break;
        case LayerKind::Dense:
        case LayerKind::SoftmaxOutput:
            s += "(" + std::to_string(spec.out_units) + ")";
            break;
        case LayerKind::Flatten:
            break;
    }
    return s;
}

Shape3 layer_output_shape(const LayerSpec& spec, const Shape3& in) {
    switch (spec.kind) {
        case LayerKind::ConvStem: {
            if (in.h <= 0 || in.w <= 0 || in.c <= 0)
                throw ConfigError("conv_stem requires a spatial input");
            const int oh = (in.h + 2 * spec.pad - spec.kernel) / spec.stride + 1;
            const int ow = (in.w + 2 * spec.pad - spec.kernel) / spec.stride + 1;
            return {spec.out_channels, oh, ow};
        }
        case LayerKind::ConvBlock: {
            if (in.h < spec.pool || in.w < spec.pool)
                throw ConfigError("conv_block input too small to pool");
            const int oh = (in.h + 2 * spec.pad - spec.kernel) / spec.stride + 1;
            const int ow = (in.w + 2 * spec.pad - spec.kernel) / spec.stride + 1;
            return {spec.out_channels, oh / spec.pool, ow / spec.pool};
        }
        case LayerKind::Flatten:
            return {in.c * in.h * in.w, 1, 1};
        case LayerKind::Dense:
        case LayerKind::SoftmaxOutput:
            if (in.h != 1 || in.w != 1)
                throw ConfigError(std::string(layer_kind_name(spec.kind)) +
                                  " expects flattened input, got spatial dims");
            return {spec.out_units, 1, 1};
    }
    throw ConfigError("unknown layer kind");
}

std::vector<Shape3> shape_chain(const ArchConfig& cfg) {
    std::vector<Shape3> chain;
    chain.reserve(cfg.layers.size() + 1);
    Shape3 cur{cfg.input_channels, cfg.input_h, cfg.input_w};
    chain.push_back(cur);
    for (const auto& spec : cfg.layers) {
        cur = layer_output_shape(spec, cur);
        chain.push_back(cur);
    }
    return chain;
}

void validate_config(const ArchConfig& cfg) {
    if (cfg.input_channels <= 0 || cfg.input_h <= 0 || cfg.input_w <= 0)
        throw ConfigError("invalid input dimensions");
    if (cfg.layers.empty()) throw ConfigError("empty layer stack");
    const auto chain = shape_chain(cfg);
    if (cfg.layers.back().kind != LayerKind::SoftmaxOutput)
        throw ConfigError("layer stack must end with softmax_output");
    const Shape3 out = chain.back();
    if (out.c != 5 || out.h != 1 || out.w != 1)
        throw ConfigError("output class count must be exactly 5");
}

CostReport count_costs(const ArchConfig& cfg) {
    const auto chain = shape_chain(cfg);
    CostReport report;
    report.convention =
        "1 multiply-accumulate = 2 FLOPs; relu/pool/batchnorm/dropout = 0 FLOPs; "
        "batchnorm params = gain+bias";
    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        const LayerSpec& spec = cfg.layers[i];
        const Shape3& in = chain[i];
        const Shape3& out = chain[i + 1];
        LayerCost lc;
        lc.name = layer_name(spec, static_cast<int>(i));
        const std::int64_t k2 = static_cast<std::int64_t>(spec.kernel) * spec.kernel;
        switch (spec.kind) {
            case LayerKind::ConvStem: {
                lc.params = k2 * in.c * out.c + out.c;
                lc.flops = 2 * k2 * in.c * out.c * out.h * out.w;
                break;
            }
            case LayerKind::ConvBlock: {
                // Conv output is pre-pool.
                const std::int64_t conv_h = (in.h + 2 * spec.pad - spec.kernel) / spec.stride + 1;
                const std::int64_t conv_w = (in.w + 2 * spec.pad - spec.kernel) / spec.stride + 1;
                lc.params = k2 * in.c * spec.out_channels + spec.out_channels  // conv
                            + 2 * spec.out_channels;                           // batchnorm
                lc.flops = 2 * k2 * in.c * spec.out_channels * conv_h * conv_w;
                break;
            }
            case LayerKind::Flatten:
                break;
            case LayerKind::Dense:
            case LayerKind::SoftmaxOutput: {
                lc.params = static_cast<std::int64_t>(in.c) * out.c + out.c;
                lc.flops = 2 * static_cast<std::int64_t>(in.c) * out.c;
                break;
            }
        }
        report.params += lc.params;
        report.flops += lc.flops;
        report.per_layer.push_back(std::move(lc));
    }
    return report;
}

}  // namespace lanenum
