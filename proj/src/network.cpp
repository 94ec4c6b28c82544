#include "lanenum/network.hpp"

#include <cmath>

namespace lanenum {

namespace {

template <typename S>
TensorT<S> reshape_flat(const TensorT<S>& in) {
    TensorT<S> out = in;
    out.c = in.c * in.h * in.w;
    out.h = 1;
    out.w = 1;
    return out;
}

void check_input_shape(const ArchConfig& cfg, int c, int h, int w) {
    if (c != cfg.input_channels || h != cfg.input_h || w != cfg.input_w)
        throw ConfigError("forward: input shape " + std::to_string(c) + "x" + std::to_string(h) +
                          "x" + std::to_string(w) + " does not match config " +
                          std::to_string(cfg.input_channels) + "x" + std::to_string(cfg.input_h) +
                          "x" + std::to_string(cfg.input_w));
}

}  // namespace

template <typename S>
TrainStateT<S> init_state(const ArchConfig& cfg, std::uint64_t seed) {
    validate_config(cfg);
    TrainStateT<S> st;
    st.cfg = cfg;
    st.layers.resize(cfg.layers.size());
    const auto chain = shape_chain(cfg);
    Rng rng = derive_stream(seed, 0, 0, "init");

    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        const LayerSpec& spec = cfg.layers[i];
        const Shape3& in = chain[i];
        LayerVarsT<S>& lv = st.layers[i];
        const std::string base = layer_name(spec, static_cast<int>(i));

        switch (spec.kind) {
            case LayerKind::ConvStem:
            case LayerKind::ConvBlock: {
                const int oc = spec.out_channels;
                const std::size_t wn =
                    static_cast<std::size_t>(spec.kernel) * spec.kernel * in.c * oc;
                lv.w.init(base + ".weight", wn);
                lv.b.init(base + ".bias", oc);
                const double limit = std::sqrt(6.0 / (spec.kernel * spec.kernel * in.c));
                for (auto& v : lv.w.value) v = static_cast<S>(rng.uniform(-limit, limit));
                if (spec.kind == LayerKind::ConvBlock) {
                    lv.gain.init(base + ".bn_gain", oc);
                    lv.beta.init(base + ".bn_bias", oc);
                    std::fill(lv.gain.value.begin(), lv.gain.value.end(), S(1));
                    lv.run_mean.assign(oc, S(0));
                    lv.run_var.assign(oc, S(1));
                }
                break;
            }
            case LayerKind::Flatten:
                break;
            case LayerKind::Dense:
            case LayerKind::SoftmaxOutput: {
                const int d = in.c, out = spec.out_units;
                lv.w.init(base + ".weight", static_cast<std::size_t>(d) * out);
                lv.b.init(base + ".bias", out);
                const double limit = std::sqrt(6.0 / d);
                for (auto& v : lv.w.value) v = static_cast<S>(rng.uniform(-limit, limit));
                break;
            }
        }
    }
    st.dropout_rng = derive_stream(seed, 0, 0, "dropout");
    return st;
}

template <typename S>
TensorT<S> forward_train(TrainStateT<S>& st, const TensorT<S>& input) {
    check_input_shape(st.cfg, input.c, input.h, input.w);
    if (input.n < 1) throw ConfigError("forward: empty batch");
    st.mode = Mode::train;
    const std::size_t nl = st.cfg.layers.size();
    st.acts.assign(nl + 1, {});
    st.cache.assign(nl, {});
    st.acts[0] = input;

    for (std::size_t i = 0; i < nl; ++i) {
        const LayerSpec& spec = st.cfg.layers[i];
        LayerVarsT<S>& lv = st.layers[i];
        LayerCacheT<S>& ca = st.cache[i];
        const TensorT<S>& in = st.acts[i];
        const std::string name = layer_name(spec, static_cast<int>(i));
        TensorT<S> out;

        switch (spec.kind) {
            case LayerKind::ConvStem: {
                conv2d_forward(in, lv.w.value, lv.b.value, spec.out_channels, spec.kernel,
                               spec.stride, spec.pad, out);
                relu_forward(out, &ca.relu_mask);
                break;
            }
            case LayerKind::ConvBlock: {
                conv2d_forward(in, lv.w.value, lv.b.value, spec.out_channels, spec.kernel,
                               spec.stride, spec.pad, out);
                relu_forward(out, &ca.relu_mask);
                ca.pre_bn = std::move(out);
                TensorT<S> bn_out;
                batchnorm_forward_train(ca.pre_bn, lv.gain.value, lv.beta.value, lv.run_mean,
                                        lv.run_var, st.bn_running_momentum, st.bn_eps, bn_out,
                                        ca.bn);
                maxpool2_forward(bn_out, out, &ca.pool_argmax);
                dropout_forward_train(out, spec.dropout_rate, st.dropout_rng, ca.drop_mask);
                break;
            }
            case LayerKind::Flatten:
                out = reshape_flat(in);
                break;
            case LayerKind::Dense: {
                dense_forward(in, lv.w.value, lv.b.value, spec.out_units, out);
                relu_forward(out, &ca.relu_mask);
                dropout_forward_train(out, spec.dropout_rate, st.dropout_rng, ca.drop_mask);
                break;
            }
            case LayerKind::SoftmaxOutput: {
                dense_forward(in, lv.w.value, lv.b.value, spec.out_units, out);
                softmax_forward(out);
                break;
            }
        }
        check_finite(out, name);
        st.acts[i + 1] = std::move(out);
    }
    return st.acts.back();
}

template <typename S>
TensorT<S> forward_eval(const TrainStateT<S>& st, const TensorT<S>& input) {
    check_input_shape(st.cfg, input.c, input.h, input.w);
    if (input.n < 1) throw ConfigError("forward: empty batch");
    TensorT<S> cur = input;

    for (std::size_t i = 0; i < st.cfg.layers.size(); ++i) {
        const LayerSpec& spec = st.cfg.layers[i];
        const LayerVarsT<S>& lv = st.layers[i];
        const std::string name = layer_name(spec, static_cast<int>(i));
        TensorT<S> out;

        switch (spec.kind) {
            case LayerKind::ConvStem: {
                conv2d_forward(cur, lv.w.value, lv.b.value, spec.out_channels, spec.kernel,
                               spec.stride, spec.pad, out);
                relu_forward(out, nullptr);
                break;
            }
            case LayerKind::ConvBlock: {
                conv2d_forward(cur, lv.w.value, lv.b.value, spec.out_channels, spec.kernel,
                               spec.stride, spec.pad, out);
                relu_forward(out, nullptr);
                TensorT<S> bn_out;
                batchnorm_forward_eval(out, lv.gain.value, lv.beta.value, lv.run_mean, lv.run_var,
                                       st.bn_eps, bn_out);
                maxpool2_forward(bn_out, out, nullptr);
                break;
            }
            case LayerKind::Flatten:
                out = reshape_flat(cur);
                break;
            case LayerKind::Dense: {
                dense_forward(cur, lv.w.value, lv.b.value, spec.out_units, out);
                relu_forward(out, nullptr);
                break;
            }
            case LayerKind::SoftmaxOutput: {
                dense_forward(cur, lv.w.value, lv.b.value, spec.out_units, out);
                softmax_forward(out);
                break;
            }
        }
        check_finite(out, name);
        cur = std::move(out);
    }
    return cur;
}

template <typename S>
double cross_entropy_loss(const TensorT<S>& probs, std::span<const int> labels,
                          std::int64_t* clamp_warnings) {
    if (static_cast<int>(labels.size()) != probs.n)
        throw DataError("cross_entropy: label count does not match batch");
    double total = 0;
    for (int b = 0; b < probs.n; ++b) {
        const int y = labels[b];
        if (y < 0 || y >= probs.c)
            throw DataError("cross_entropy: label " + std::to_string(y) + " out of range");
        double p = static_cast<double>(probs.values[static_cast<std::size_t>(b) * probs.c + y]);
        if (p < 1e-12) {
            p = 1e-12;
            if (clamp_warnings) ++*clamp_warnings;
        }
        total -= std::log(p);
    }
    return total / probs.n;
}

template <typename S>
double loss_and_backward(TrainStateT<S>& st, const TensorT<S>& probs,
                         std::span<const int> labels) {
    const std::size_t nl = st.cfg.layers.size();
    if (st.acts.size() != nl + 1 || st.mode != Mode::train)
        throw ConfigError("loss_and_backward requires a prior forward in train mode");
    const TensorT<S>& cached = st.acts.back();
    if (!cached.same_shape(probs))
        throw ConfigError("loss_and_backward: probs shape does not match cached forward");

    const double loss = cross_entropy_loss(cached, labels, &st.prob_clamp_warnings);
    const int bsz = cached.n, k = cached.c;

    // dL/dprob for mean cross-entropy, with the same clamping as the loss.
    std::vector<S> cur(cached.size(), S(0));
    for (int b = 0; b < bsz; ++b) {
        const int y = labels[b];
        const double p =
            std::max(1e-12, static_cast<double>(cached.values[static_cast<std::size_t>(b) * k + y]));
        cur[static_cast<std::size_t>(b) * k + y] = static_cast<S>(-1.0 / (bsz * p));
    }

    for (int i = static_cast<int>(nl) - 1; i >= 0; --i) {
        const LayerSpec& spec = st.cfg.layers[i];
        LayerVarsT<S>& lv = st.layers[i];
        LayerCacheT<S>& ca = st.cache[i];
        const TensorT<S>& in = st.acts[i];
        std::vector<S> gin;

        switch (spec.kind) {
            case LayerKind::SoftmaxOutput: {
                std::vector<S> dlogits;
                softmax_backward(st.acts[i + 1], cur, dlogits);
                dense_backward(in, lv.w.value, spec.out_units, dlogits, gin, lv.w.grad,
                               lv.b.grad);
                break;
            }
            case LayerKind::Dense: {
                dropout_backward(cur, spec.dropout_rate, ca.drop_mask);
                relu_backward(cur, ca.relu_mask);
                dense_backward(in, lv.w.value, spec.out_units, cur, gin, lv.w.grad, lv.b.grad);
                break;
            }
            case LayerKind::Flatten:
                gin = std::move(cur);
                break;
            case LayerKind::ConvBlock: {
                dropout_backward(cur, spec.dropout_rate, ca.drop_mask);
                std::vector<S> g_prepool;
                maxpool2_backward(ca.pre_bn, cur, ca.pool_argmax, g_prepool);
                std::vector<S> g_bn_in;
                batchnorm_backward(ca.pre_bn, lv.gain.value, ca.bn, st.bn_eps, g_prepool, g_bn_in,
                                   lv.gain.grad, lv.beta.grad);
                relu_backward(g_bn_in, ca.relu_mask);
                conv2d_backward(in, lv.w.value, spec.out_channels, spec.kernel, spec.stride,
                                spec.pad, g_bn_in, ca.pre_bn.h, ca.pre_bn.w, gin, lv.w.grad,
                                lv.b.grad);
                break;
            }
            case LayerKind::ConvStem: {
                relu_backward(cur, ca.relu_mask);
                conv2d_backward(in, lv.w.value, spec.out_channels, spec.kernel, spec.stride,
                                spec.pad, cur, st.acts[i + 1].h, st.acts[i + 1].w, gin, lv.w.grad,
                                lv.b.grad);
                break;
            }
        }
        cur = std::move(gin);
    }

    st.acts[0].grad = std::move(cur);
    st.grads_ready = true;
    return loss;
}

template <typename S>
void sgd_step(TrainStateT<S>& st, double lr, double momentum) {
    if (!st.grads_ready) throw ConfigError("sgd_step called before any backward pass");
    st.for_each_group([&](ParamGroupT<S>& g) {
        const S m = static_cast<S>(momentum), step = static_cast<S>(lr);
        for (std::size_t i = 0; i < g.value.size(); ++i) {
            g.mom[i] = m * g.mom[i] + g.grad[i];
            g.value[i] -= step * g.mom[i];
            g.grad[i] = S(0);
        }
    });
    st.grads_ready = false;
}

GradCheckReport gradient_check(const ArchConfig& cfg, std::uint64_t seed) {
    using S = double;
    auto st = init_state<S>(cfg, seed);

    Rng in_rng = derive_stream(seed, 1, 0, "gradcheck-input");
    TensorT<S> input(1, cfg.input_channels, cfg.input_h, cfg.input_w);
    for (auto& v : input.values) v = in_rng.uniform(-1.0, 1.0);
    std::vector<int> labels{in_rng.uniform_int(0, 4)};
    const std::uint64_t mask_seed = splitmix64(seed ^ 0x6d61736bULL);

    const auto eval_loss = [&]() {
        st.reseed_dropout(mask_seed);
        const TensorT<S> probs = forward_train(st, input);
        return cross_entropy_loss(probs, std::span<const int>(labels), nullptr);
    };

    st.reseed_dropout(mask_seed);
    const TensorT<S> probs = forward_train(st, input);
    loss_and_backward(st, probs, std::span<const int>(labels));

    struct Target {
        std::string name;
        std::vector<S> analytic;
        std::vector<S>* value;
    };
    std::vector<Target> targets;
    st.for_each_group([&](ParamGroupT<S>& g) { targets.push_back({g.name, g.grad, &g.value}); });
    targets.push_back({"input", st.acts[0].grad, &input.values});

    const double eps = 1e-5;
    const auto rel = [](double a, double n) {
        return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
    };

    GradCheckReport report;
    for (auto& t : targets) {
        double worst = 0;
        for (std::size_t i = 0; i < t.value->size(); ++i) {
            const S saved = (*t.value)[i];
            (*t.value)[i] = saved + eps;
            const double lp = eval_loss();
            (*t.value)[i] = saved - eps;
            const double lm = eval_loss();
            (*t.value)[i] = saved;
            worst = std::max(worst, rel(t.analytic[i], (lp - lm) / (2 * eps)));
        }
        report.entries.push_back({t.name, worst});
        report.max_rel_err = std::max(report.max_rel_err, worst);
    }
    return report;
}

#define LANENUM_INSTANTIATE(S)                                                              \
    template TrainStateT<S> init_state<S>(const ArchConfig&, std::uint64_t);                \
    template TensorT<S> forward_train<S>(TrainStateT<S>&, const TensorT<S>&);               \
    template TensorT<S> forward_eval<S>(const TrainStateT<S>&, const TensorT<S>&);          \
    template double cross_entropy_loss<S>(const TensorT<S>&, std::span<const int>,          \
                                          std::int64_t*);                                   \
    template double loss_and_backward<S>(TrainStateT<S>&, const TensorT<S>&,                \
                                         std::span<const int>);                             \
    template void sgd_step<S>(TrainStateT<S>&, double, double);

LANENUM_INSTANTIATE(float)
LANENUM_INSTANTIATE(double)
#undef LANENUM_INSTANTIATE

}  // namespace lanenum
