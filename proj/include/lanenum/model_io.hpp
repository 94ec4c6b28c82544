// LNM1 model file format: magic, version, JSON-serialized ArchConfig, then
// per-layer weight arrays as little-endian float32 in declaration order.
#pragma once

#include <string>

#include "lanenum/network.hpp"

namespace lanenum {

struct ModelFile {
    ArchConfig cfg;
    std::string variant;  // "A" | "C" | "D"
    TrainState state;
};

// Weight order per layer: conv kernel (out x in x kh x kw), conv bias;
// batchnorm gain, bias, running mean, running var; dense matrix (out x in),
// dense bias.
void save_model(const std::string& path, const TrainState& state, const std::string& variant);

ModelFile load_model(const std::string& path);

std::string arch_to_json(const ArchConfig& cfg, const std::string& variant);
std::pair<ArchConfig, std::string> arch_from_json(const std::string& text);

}  // namespace lanenum
