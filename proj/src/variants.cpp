#include "lanenum/variants.hpp"

namespace lanenum {

Variant variant_from_string(const std::string& name) {
    if (name == "A" || name == "a") return Variant::A;
    if (name == "B" || name == "b") return Variant::B;
    if (name == "C" || name == "c") return Variant::C;
    if (name == "D" || name == "d") return Variant::D;
    throw ConfigError("unknown variant '" + name + "', expected A, B, C or D");
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::A: return "A";
        case Variant::B: return "B";
        case Variant::C: return "C";
        case Variant::D: return "D";
    }
    return "?";
}

int variant_input_channels(Variant v, int temporal_radius) {
    switch (v) {
        case Variant::A: return 3;
        case Variant::B: throw ConfigError("variant B is a mask heuristic, it has no network");
        case Variant::C: return 4;
        case Variant::D: return 3 + 2 * temporal_radius + 1;
    }
    throw ConfigError("bad variant");
}

ArchConfig build_config(Variant v, Scale scale, int height, int width, int temporal_radius) {
    const int stem = scale == Scale::full ? 32 : 8;
    const int b1 = scale == Scale::full ? 64 : 16;
    const int b2 = scale == Scale::full ? 256 : 32;
    const int b3 = scale == Scale::full ? 64 : 16;
    const int dense = scale == Scale::full ? 300 : 64;

    ArchConfig cfg;
    cfg.input_channels = variant_input_channels(v, temporal_radius);
    cfg.input_h = height;
    cfg.input_w = width;
    cfg.layers = {LayerSpec::conv_stem(stem),      LayerSpec::conv_block(b1, 0.25),
                  LayerSpec::conv_block(b2, 0.25), LayerSpec::conv_block(b3, 0.25),
                  LayerSpec::flatten(),            LayerSpec::dense(dense, 0.5),
                  LayerSpec::softmax_output(5)};
    validate_config(cfg);
    return cfg;
}

void fill_input(Tensor& batch, int b, Variant v, const Sample& sample) {
    const int h = sample.image.height, w = sample.image.width;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    if (batch.h != h || batch.w != w) throw ConfigError("batch tensor does not match sample size");

    const int n = (static_cast<int>(sample.masks.size()) - 1) / 2;
    const int want = variant_input_channels(v, n);
    if (batch.c != want) throw ConfigError("batch tensor has wrong channel count for variant");

    float* dst = batch.values.data() + static_cast<std::size_t>(b) * batch.c * plane;
    for (std::size_t i = 0; i < 3 * plane; ++i)
        dst[i] = static_cast<float>(sample.image.data[i]) * (1.0f / 255.0f);
    dst += 3 * plane;

    if (v == Variant::A) return;
    if (v == Variant::C) {
        const Mask& center = sample.masks[static_cast<std::size_t>(n)];
        for (std::size_t i = 0; i < plane; ++i)
            dst[i] = center.data[i] ? 1.0f : 0.0f;
        return;
    }
    for (const Mask& m : sample.masks) {
        for (std::size_t i = 0; i < plane; ++i) dst[i] = m.data[i] ? 1.0f : 0.0f;
        dst += plane;
    }
}

}  // namespace lanenum
