// SGD training loop, split evaluation and the four-variant comparison.
#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "lanenum/dataset.hpp"
#include "lanenum/maskgeom.hpp"
#include "lanenum/network.hpp"
#include "lanenum/variants.hpp"

namespace lanenum {

struct TrainConfig {
    int epochs = 20;
    int batch_size = 32;
    float lr = 0.01f;
    float momentum = 0.9f;
    std::uint64_t seed = 1;
};

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0;
    double train_accuracy = 0;
    double test_accuracy = 0;
};

struct Metrics {
    int total = 0, correct = 0;
    std::array<std::array<int, 5>, 5> confusion{};  // [truth][prediction]

    double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
    void add(int truth, int prediction);
};

struct TrainResult {
    TrainState state;
    std::vector<EpochStats> history;
};

// Deterministic for a fixed (variant, scale, dataset, config): batch order,
// dropout and init all come from derived streams of cfg.seed.
TrainResult train_variant(Variant v, Scale scale, const Dataset& ds, const TrainConfig& cfg,
                          std::ostream* log);

Metrics evaluate_model(const TrainState& st, Variant v, const Dataset& ds,
                       const std::vector<int>& indices, int batch_size = 32);

// Variant B: slope count on the frame-t mask.
Metrics evaluate_heuristic(const Dataset& ds, const std::vector<int>& indices,
                           const HeuristicConfig& cfg = {});

struct CompareConfig {
    Scale scale = Scale::desk;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    TrainConfig train;
    HeuristicConfig heuristic;
    // The upstream lane detector is external; its cost is reported, not computed.
    long long detector_flops = 99'000'000;
    long long detector_params = 35'000'000;
};

struct CompareRow {
    std::string variant;
    std::vector<double> seed_accuracies;
    double median_accuracy = 0;
    long long params = 0;
    long long flops = 0;
    bool external_cost = false;
};

struct CompareReport {
    std::vector<CompareRow> rows;  // A, B, C, D
    long long detector_flops = 0, detector_params = 0;
};

CompareReport run_compare(const Dataset& ds, const CompareConfig& cfg, std::ostream* log);

std::string format_table(const CompareReport& rep);
std::string table_json(const CompareReport& rep);

double median(std::vector<double> values);

}  // namespace lanenum
