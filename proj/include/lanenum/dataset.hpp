// Dataset generation and the on-disk container: samples.bin (LND1),
// manifest.json and split.json in one directory.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lanenum/image.hpp"
#include "lanenum/scene.hpp"

namespace lanenum {

struct Sample {
    int label = 0;
    ImageU8 image;             // frame t
    std::vector<Mask> masks;   // frames t-n..t+n after corruption
    std::optional<SceneParams> scene;  // only populated by generate_sample
};

struct DatasetRequest {
    std::string name = "dataset";
    int sample_count = 1000;
    GenConfig gen;
    CorruptionConfig corruption;
    std::uint64_t seed = 1;
    double train_fraction = 0.8;
};

struct DatasetMeta {
    std::string name;
    int sample_count = 0;
    int height = 0, width = 0;
    int temporal_radius = 0;
    std::uint64_t seed = 0;
    double p_ambiguous = 0.0;
    double train_fraction = 0.8;
    CorruptionConfig corruption;
    std::array<int, 5> class_histogram{};
};

struct Dataset {
    DatasetMeta meta;
    std::vector<Sample> samples;
    std::vector<int> train_indices, test_indices;
};

// Fully determined by (request, index); the RNG streams are keyed per sample
// and per frame, so samples can be produced in any order.
Sample generate_sample(const DatasetRequest& req, int index);

Dataset generate_dataset(const DatasetRequest& req);

void save_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace lanenum
