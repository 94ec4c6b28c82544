// The four predictor variants: image-only CNN (A), mask heuristic (B),
// image+mask fusion (C) and image+temporal-mask fusion (D).
#pragma once

#include <string>

#include "lanenum/arch.hpp"
#include "lanenum/dataset.hpp"
#include "lanenum/tensor.hpp"

namespace lanenum {

enum class Variant { A, B, C, D };

Variant variant_from_string(const std::string& name);
std::string variant_name(Variant v);

// Input channel layout: RGB image planes, then mask planes in frame order
// t-n..t+n (variant C uses only frame t). Variant B has no network input.
int variant_input_channels(Variant v, int temporal_radius);

// Channel-scale presets: full is the production-size stack for 100x100
// input, desk a reduced one for quick CPU runs at 50x50.
enum class Scale { full, desk };

ArchConfig build_config(Variant v, Scale scale, int height, int width, int temporal_radius);

// Writes one sample into batch slot b; pixels scale to [0,1].
void fill_input(Tensor& batch, int b, Variant v, const Sample& sample);

}  // namespace lanenum
