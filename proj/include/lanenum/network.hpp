// Training state and the forward/backward/update loop over an ArchConfig.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lanenum/arch.hpp"
#include "lanenum/common.hpp"
#include "lanenum/ops.hpp"
#include "lanenum/tensor.hpp"

namespace lanenum {

enum class Mode { train, eval };

template <typename S>
struct ParamGroupT {
    std::string name;
    std::vector<S> value, grad, mom;

    void init(std::string n, std::size_t count) {
        name = std::move(n);
        value.assign(count, S(0));
        grad.assign(count, S(0));
        mom.assign(count, S(0));
    }
    bool empty() const { return value.empty(); }
};

template <typename S>
struct LayerVarsT {
    ParamGroupT<S> w, b;        // conv kernel / dense matrix, with bias
    ParamGroupT<S> gain, beta;  // batchnorm
    std::vector<S> run_mean, run_var;
};

template <typename S>
struct LayerCacheT {
    TensorT<S> pre_bn;  // ConvBlock: conv output after relu, batchnorm input
    BatchNormCache<S> bn;
    std::vector<std::uint8_t> relu_mask, drop_mask;
    std::vector<std::int32_t> pool_argmax;
};

template <typename S>
struct TrainStateT {
    ArchConfig cfg;
    std::vector<LayerVarsT<S>> layers;

    // Train-mode caches: acts[i] is the input of layer i, acts.back() the
    // class probabilities of the last forward pass.
    std::vector<TensorT<S>> acts;
    std::vector<LayerCacheT<S>> cache;

    Rng dropout_rng{0};
    Mode mode = Mode::train;
    int epoch = 0;
    bool grads_ready = false;
    std::int64_t prob_clamp_warnings = 0;

    S bn_running_momentum = S(0.1);
    S bn_eps = S(1e-5);

    void reseed_dropout(std::uint64_t seed) { dropout_rng = Rng(seed); }

    template <typename Fn>
    void for_each_group(Fn&& fn) {
        for (auto& lv : layers) {
            for (auto* g : {&lv.w, &lv.b, &lv.gain, &lv.beta})
                if (!g->empty()) fn(*g);
        }
    }
};

using TrainState = TrainStateT<float>;

template <typename S>
TrainStateT<S> init_state(const ArchConfig& cfg, std::uint64_t seed);

template <typename S>
TensorT<S> forward_train(TrainStateT<S>& state, const TensorT<S>& input);

// Pure function of (state, input); safe to call concurrently on a frozen state.
template <typename S>
TensorT<S> forward_eval(const TrainStateT<S>& state, const TensorT<S>& input);

template <typename S>
TensorT<S> forward(TrainStateT<S>& state, const TensorT<S>& input, Mode mode) {
    return mode == Mode::train ? forward_train(state, input) : forward_eval(state, input);
}

// Mean cross-entropy of -log p[label]; probabilities below 1e-12 are clamped
// (counted in `clamp_warnings` when given).
template <typename S>
double cross_entropy_loss(const TensorT<S>& probs, std::span<const int> labels,
                          std::int64_t* clamp_warnings);

// Backpropagates mean cross-entropy through the caches of the last
// forward_train call. Populates every parameter grad and the input grad
// (available as state.acts[0].grad).
template <typename S>
double loss_and_backward(TrainStateT<S>& state, const TensorT<S>& probs,
                         std::span<const int> labels);

template <typename S>
void sgd_step(TrainStateT<S>& state, double lr, double momentum);

struct GradCheckEntry {
    std::string group;
    double max_rel_err = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;  // one per weight group, plus "input"
    double max_rel_err = 0.0;
};

// Central finite differences (eps = 1e-5) against the analytic gradients, in
// double precision. Dropout masks are frozen by reseeding per evaluation, so
// the loss is a deterministic function of the weights.
GradCheckReport gradient_check(const ArchConfig& cfg, std::uint64_t seed);

}  // namespace lanenum
