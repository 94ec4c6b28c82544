// Numeric kernels for the layer set: conv2d, relu, batchnorm, maxpool,
// dropout, dense, softmax. Forward and backward, templated so training runs
// in single precision and gradient checks in double.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lanenum/common.hpp"
#include "lanenum/tensor.hpp"

namespace lanenum {

namespace detail {

// Fixed-width lane accumulators: reductions become per-lane vector FMAs and
// vectorize without reassociation flags.
inline constexpr int kLanes = 16;

template <typename S>
S sum_row(const S* a, int n) {
    S lane[kLanes] = {};
    int x = 0;
    for (; x + kLanes <= n; x += kLanes)
        for (int j = 0; j < kLanes; ++j) lane[j] += a[x + j];
    S s = S(0);
    for (int j = 0; j < kLanes; ++j) s += lane[j];
    for (; x < n; ++x) s += a[x];
    return s;
}

template <typename S>
S dot_rows(const S* a, const S* b, int n) {
    S lane[kLanes] = {};
    int x = 0;
    for (; x + kLanes <= n; x += kLanes)
        for (int j = 0; j < kLanes; ++j) lane[j] += a[x + j] * b[x + j];
    S s = S(0);
    for (int j = 0; j < kLanes; ++j) s += lane[j];
    for (; x < n; ++x) s += a[x] * b[x];
    return s;
}

template <typename S>
S sq_dev_row(const S* a, int n, S mean) {
    S lane[kLanes] = {};
    int x = 0;
    for (; x + kLanes <= n; x += kLanes)
        for (int j = 0; j < kLanes; ++j) {
            const S d = a[x + j] - mean;
            lane[j] += d * d;
        }
    S s = S(0);
    for (int j = 0; j < kLanes; ++j) s += lane[j];
    for (; x < n; ++x) {
        const S d = a[x] - mean;
        s += d * d;
    }
    return s;
}

// Patch matrix for one sample: row (ic*kernel + ky)*kernel + kx holds the
// input plane shifted by (ky-pad, kx-pad), flattened to oh*ow with explicit
// zeros where the shift leaves the image. Flat rows make the convolution
// gradients long contiguous dot products and axpys.
template <typename S>
void im2col(const S* in, int channels, int h, int w, int kernel, int pad, int oh, int ow,
            S* cols) {
    const std::size_t oplane = static_cast<std::size_t>(oh) * ow;
    for (int ic = 0; ic < channels; ++ic) {
        const S* plane = in + static_cast<std::size_t>(ic) * h * w;
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                S* dst = cols + ((static_cast<std::size_t>(ic) * kernel + ky) * kernel + kx) * oplane;
                const int dy = ky - pad, dx = kx - pad;
                const int x0 = std::max(0, -dx), x1 = std::min(ow, w - dx);
                for (int y = 0; y < oh; ++y) {
                    S* drow = dst + static_cast<std::size_t>(y) * ow;
                    const int iy = y + dy;
                    if (iy < 0 || iy >= h || x0 >= x1) {
                        std::fill(drow, drow + ow, S(0));
                        continue;
                    }
                    std::fill(drow, drow + x0, S(0));
                    const S* srow = plane + static_cast<std::size_t>(iy) * w + dx;
                    std::copy(srow + x0, srow + x1, drow + x0);
                    std::fill(drow + x1, drow + ow, S(0));
                }
            }
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Convolution. Weights are out x in x kh x kw, row-major. The inner loops
// run over contiguous rows so the compiler can vectorize them.
// ---------------------------------------------------------------------------

template <typename S>
void conv2d_forward(const TensorT<S>& in, const std::vector<S>& weight, const std::vector<S>& bias,
                    int out_channels, int kernel, int stride, int pad, TensorT<S>& out) {
    const int oh = (in.h + 2 * pad - kernel) / stride + 1;
    const int ow = (in.w + 2 * pad - kernel) / stride + 1;
    out = TensorT<S>(in.n, out_channels, oh, ow);
    if (stride != 1) throw ConfigError("conv2d: only stride 1 is implemented");

    const std::size_t oplane = static_cast<std::size_t>(oh) * ow;
    const int rows = in.c * kernel * kernel;
    std::vector<S> cols(static_cast<std::size_t>(rows) * oplane);

    for (int b = 0; b < in.n; ++b) {
        detail::im2col(in.plane(b, 0), in.c, in.h, in.w, kernel, pad, oh, ow, cols.data());
        for (int oc = 0; oc < out_channels; ++oc) {
            S* outp = out.plane(b, oc);
            std::fill(outp, outp + oplane, bias[oc]);
            const S* wrow = weight.data() + static_cast<std::size_t>(oc) * rows;
            for (int r = 0; r < rows; ++r) {
                const S wv = wrow[r];
                const S* col = cols.data() + static_cast<std::size_t>(r) * oplane;
                for (std::size_t i = 0; i < oplane; ++i) outp[i] += wv * col[i];
            }
        }
    }
}

// in_grad is overwritten; weight_grad/bias_grad are accumulated into. Per
// sample: weight grads are flat dots of out_grad rows against the patch
// matrix; input grads come from a patch-space GEMM scattered back through
// col2im. Everything runs over contiguous oh*ow spans, so small spatial
// layers vectorize as well as large ones.
template <typename S>
void conv2d_backward(const TensorT<S>& in, const std::vector<S>& weight, int out_channels,
                     int kernel, int stride, int pad, const std::vector<S>& out_grad, int oh,
                     int ow, std::vector<S>& in_grad, std::vector<S>& weight_grad,
                     std::vector<S>& bias_grad) {
    if (stride != 1) throw ConfigError("conv2d: only stride 1 is implemented");
    in_grad.assign(in.size(), S(0));
    const std::size_t oplane = static_cast<std::size_t>(oh) * ow;
    const int rows = in.c * kernel * kernel;
    std::vector<S> cols(static_cast<std::size_t>(rows) * oplane);
    std::vector<S> dcol(oplane);

    for (int b = 0; b < in.n; ++b) {
        const S* gout0 = out_grad.data() + static_cast<std::size_t>(b) * out_channels * oplane;
        detail::im2col(in.plane(b, 0), in.c, in.h, in.w, kernel, pad, oh, ow, cols.data());

        for (int oc = 0; oc < out_channels; ++oc) {
            const S* gout = gout0 + static_cast<std::size_t>(oc) * oplane;
            bias_grad[oc] += detail::sum_row(gout, static_cast<int>(oplane));
            S* wrow = weight_grad.data() + static_cast<std::size_t>(oc) * rows;
            for (int r = 0; r < rows; ++r)
                wrow[r] += detail::dot_rows(gout, cols.data() + static_cast<std::size_t>(r) * oplane,
                                            static_cast<int>(oplane));
        }

        for (int r = 0; r < rows; ++r) {
            std::fill(dcol.begin(), dcol.end(), S(0));
            for (int oc = 0; oc < out_channels; ++oc) {
                const S wv = weight[static_cast<std::size_t>(oc) * rows + r];
                const S* gout = gout0 + static_cast<std::size_t>(oc) * oplane;
                for (std::size_t i = 0; i < oplane; ++i) dcol[i] += wv * gout[i];
            }
            const int ic = r / (kernel * kernel);
            const int ky = (r / kernel) % kernel, kx = r % kernel;
            const int dy = ky - pad, dx = kx - pad;
            const int y0 = std::max(0, -dy), y1 = std::min(oh, in.h - dy);
            const int x0 = std::max(0, -dx), x1 = std::min(ow, in.w - dx);
            S* gin = in_grad.data() + (static_cast<std::size_t>(b) * in.c + ic) * in.h * in.w;
            for (int y = y0; y < y1; ++y) {
                const S* srow = dcol.data() + static_cast<std::size_t>(y) * ow;
                S* drow = gin + static_cast<std::size_t>(y + dy) * in.w + dx;
                for (int x = x0; x < x1; ++x) drow[x] += srow[x];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// ReLU (in place, mask retained for backward).
// ---------------------------------------------------------------------------

template <typename S>
void relu_forward(TensorT<S>& t, std::vector<std::uint8_t>* mask) {
    if (mask) mask->resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const bool pos = t.values[i] > S(0);
        if (mask) (*mask)[i] = pos;
        if (!pos) t.values[i] = S(0);
    }
}

template <typename S>
void relu_backward(std::vector<S>& grad, const std::vector<std::uint8_t>& mask) {
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (!mask[i]) grad[i] = S(0);
}

// ---------------------------------------------------------------------------
// BatchNorm over (n, h, w) per channel. Train mode uses biased batch
// statistics; eval mode uses running statistics.
// ---------------------------------------------------------------------------

template <typename S>
struct BatchNormCache {
    std::vector<S> mean, var;  // per channel, batch statistics
};

template <typename S>
void batchnorm_forward_train(const TensorT<S>& in, const std::vector<S>& gain,
                             const std::vector<S>& bias, std::vector<S>& running_mean,
                             std::vector<S>& running_var, S running_momentum, S eps,
                             TensorT<S>& out, BatchNormCache<S>& cache) {
    out = TensorT<S>(in.n, in.c, in.h, in.w);
    cache.mean.assign(in.c, S(0));
    cache.var.assign(in.c, S(0));
    const std::size_t plane = static_cast<std::size_t>(in.h) * in.w;
    const S count = static_cast<S>(in.n * plane);

    for (int ch = 0; ch < in.c; ++ch) {
        S sum = 0;
        for (int b = 0; b < in.n; ++b)
            sum += detail::sum_row(in.plane(b, ch), static_cast<int>(plane));
        const S mean = sum / count;
        S vsum = 0;
        for (int b = 0; b < in.n; ++b)
            vsum += detail::sq_dev_row(in.plane(b, ch), static_cast<int>(plane), mean);
        const S var = vsum / count;
        cache.mean[ch] = mean;
        cache.var[ch] = var;
        running_mean[ch] += running_momentum * (mean - running_mean[ch]);
        running_var[ch] += running_momentum * (var - running_var[ch]);

        const S inv_std = S(1) / std::sqrt(var + eps);
        const S g = gain[ch], bta = bias[ch];
        for (int b = 0; b < in.n; ++b) {
            const S* p = in.plane(b, ch);
            S* q = out.plane(b, ch);
            for (std::size_t i = 0; i < plane; ++i) q[i] = g * (p[i] - mean) * inv_std + bta;
        }
    }
}

template <typename S>
void batchnorm_forward_eval(const TensorT<S>& in, const std::vector<S>& gain,
                            const std::vector<S>& bias, const std::vector<S>& running_mean,
                            const std::vector<S>& running_var, S eps, TensorT<S>& out) {
    out = TensorT<S>(in.n, in.c, in.h, in.w);
    const std::size_t plane = static_cast<std::size_t>(in.h) * in.w;
    for (int ch = 0; ch < in.c; ++ch) {
        const S inv_std = S(1) / std::sqrt(running_var[ch] + eps);
        const S g = gain[ch], bta = bias[ch], m = running_mean[ch];
        for (int b = 0; b < in.n; ++b) {
            const S* p = in.plane(b, ch);
            S* q = out.plane(b, ch);
            for (std::size_t i = 0; i < plane; ++i) q[i] = g * (p[i] - m) * inv_std + bta;
        }
    }
}

// Full batch-statistics backward. `in` is the batchnorm input saved at
// forward time; out_grad is consumed, in_grad overwritten.
template <typename S>
void batchnorm_backward(const TensorT<S>& in, const std::vector<S>& gain,
                        const BatchNormCache<S>& cache, S eps, const std::vector<S>& out_grad,
                        std::vector<S>& in_grad, std::vector<S>& gain_grad,
                        std::vector<S>& bias_grad) {
    in_grad.assign(in.size(), S(0));
    const std::size_t plane = static_cast<std::size_t>(in.h) * in.w;
    const S count = static_cast<S>(in.n * plane);

    for (int ch = 0; ch < in.c; ++ch) {
        const S mean = cache.mean[ch];
        const S inv_std = S(1) / std::sqrt(cache.var[ch] + eps);
        // Per-channel reductions: sum(dY) and sum(dY * xhat), the latter via
        // sum(dY * x) since xhat = (x - mean) * inv_std.
        S sum_dy = 0, sum_dy_x = 0;
        for (int b = 0; b < in.n; ++b) {
            const S* p = in.plane(b, ch);
            const S* g = out_grad.data() + (static_cast<std::size_t>(b) * in.c + ch) * plane;
            sum_dy += detail::sum_row(g, static_cast<int>(plane));
            sum_dy_x += detail::dot_rows(g, p, static_cast<int>(plane));
        }
        const S sum_dy_xhat = (sum_dy_x - mean * sum_dy) * inv_std;
        gain_grad[ch] += sum_dy_xhat;
        bias_grad[ch] += sum_dy;

        // dX = (gain * inv_std / count) * (count*dY - sum(dY) - xhat * sum(dY*xhat))
        const S scale = gain[ch] * inv_std / count;
        for (int b = 0; b < in.n; ++b) {
            const S* p = in.plane(b, ch);
            const S* g = out_grad.data() + (static_cast<std::size_t>(b) * in.c + ch) * plane;
            S* q = in_grad.data() + (static_cast<std::size_t>(b) * in.c + ch) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                const S xhat = (p[i] - mean) * inv_std;
                q[i] = scale * (count * g[i] - sum_dy - xhat * sum_dy_xhat);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// MaxPool 2x2, stride 2, floor division of spatial dims (trailing odd
// row/column dropped).
// ---------------------------------------------------------------------------

template <typename S>
void maxpool2_forward(const TensorT<S>& in, TensorT<S>& out, std::vector<std::int32_t>* argmax) {
    const int oh = in.h / 2, ow = in.w / 2;
    out = TensorT<S>(in.n, in.c, oh, ow);
    if (argmax) argmax->assign(out.size(), 0);
    for (int b = 0; b < in.n; ++b) {
        for (int ch = 0; ch < in.c; ++ch) {
            const S* p = in.plane(b, ch);
            S* q = out.plane(b, ch);
            std::int32_t* am =
                argmax ? argmax->data() + (static_cast<std::size_t>(b) * in.c + ch) * oh * ow
                       : nullptr;
            for (int y = 0; y < oh; ++y) {
                for (int x = 0; x < ow; ++x) {
                    const int iy = 2 * y, ix = 2 * x;
                    std::int32_t best = iy * in.w + ix;
                    S bv = p[best];
                    const std::int32_t cand[3] = {iy * in.w + ix + 1, (iy + 1) * in.w + ix,
                                                  (iy + 1) * in.w + ix + 1};
                    for (const std::int32_t idx : cand) {
                        if (p[idx] > bv) {
                            bv = p[idx];
                            best = idx;
                        }
                    }
                    q[y * ow + x] = bv;
                    if (am) am[y * ow + x] = best;
                }
            }
        }
    }
}

template <typename S>
void maxpool2_backward(const TensorT<S>& in, const std::vector<S>& out_grad,
                       const std::vector<std::int32_t>& argmax, std::vector<S>& in_grad) {
    in_grad.assign(in.size(), S(0));
    const int oh = in.h / 2, ow = in.w / 2;
    const std::size_t oplane = static_cast<std::size_t>(oh) * ow;
    for (int b = 0; b < in.n; ++b) {
        for (int ch = 0; ch < in.c; ++ch) {
            const std::size_t obase = (static_cast<std::size_t>(b) * in.c + ch) * oplane;
            S* gin = in_grad.data() + (static_cast<std::size_t>(b) * in.c + ch) * in.h * in.w;
            for (std::size_t i = 0; i < oplane; ++i) gin[argmax[obase + i]] += out_grad[obase + i];
        }
    }
}

// ---------------------------------------------------------------------------
// Inverted dropout: zero with probability `rate`, scale survivors by
// 1/(1-rate). Rate 0 skips the RNG entirely.
// ---------------------------------------------------------------------------

template <typename S>
void dropout_forward_train(TensorT<S>& t, double rate, Rng& rng,
                           std::vector<std::uint8_t>& mask) {
    if (rate <= 0.0) {
        mask.clear();
        return;
    }
    mask.resize(t.size());
    const S scale = S(1.0 / (1.0 - rate));
    for (std::size_t i = 0; i < t.size(); ++i) {
        const bool keep = !rng.bernoulli(rate);
        mask[i] = keep;
        t.values[i] = keep ? t.values[i] * scale : S(0);
    }
}

template <typename S>
void dropout_backward(std::vector<S>& grad, double rate, const std::vector<std::uint8_t>& mask) {
    if (rate <= 0.0 || mask.empty()) return;
    const S scale = S(1.0 / (1.0 - rate));
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = mask[i] ? grad[i] * scale : S(0);
}

// ---------------------------------------------------------------------------
// Dense (affine). Weight is out x in, row-major; input is n x in x 1 x 1.
// ---------------------------------------------------------------------------

template <typename S>
void dense_forward(const TensorT<S>& in, const std::vector<S>& weight, const std::vector<S>& bias,
                   int out_units, TensorT<S>& out) {
    const int d = in.c;
    out = TensorT<S>(in.n, out_units, 1, 1);
    for (int b = 0; b < in.n; ++b) {
        const S* x = in.values.data() + static_cast<std::size_t>(b) * d;
        S* y = out.values.data() + static_cast<std::size_t>(b) * out_units;
        for (int o = 0; o < out_units; ++o) {
            const S* wr = weight.data() + static_cast<std::size_t>(o) * d;
            S acc = bias[o];
            for (int i = 0; i < d; ++i) acc += wr[i] * x[i];
            y[o] = acc;
        }
    }
}

template <typename S>
void dense_backward(const TensorT<S>& in, const std::vector<S>& weight, int out_units,
                    const std::vector<S>& out_grad, std::vector<S>& in_grad,
                    std::vector<S>& weight_grad, std::vector<S>& bias_grad) {
    const int d = in.c;
    in_grad.assign(in.size(), S(0));
    for (int b = 0; b < in.n; ++b) {
        const S* x = in.values.data() + static_cast<std::size_t>(b) * d;
        const S* gy = out_grad.data() + static_cast<std::size_t>(b) * out_units;
        S* gx = in_grad.data() + static_cast<std::size_t>(b) * d;
        for (int o = 0; o < out_units; ++o) {
            const S g = gy[o];
            bias_grad[o] += g;
            const S* wr = weight.data() + static_cast<std::size_t>(o) * d;
            S* gwr = weight_grad.data() + static_cast<std::size_t>(o) * d;
            for (int i = 0; i < d; ++i) {
                gwr[i] += g * x[i];
                gx[i] += g * wr[i];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Row-wise softmax, numerically stabilized.
// ---------------------------------------------------------------------------

template <typename S>
void softmax_forward(TensorT<S>& t) {
    const int k = t.c;
    for (int b = 0; b < t.n; ++b) {
        S* row = t.values.data() + static_cast<std::size_t>(b) * k;
        S mx = row[0];
        for (int i = 1; i < k; ++i) mx = std::max(mx, row[i]);
        S sum = 0;
        for (int i = 0; i < k; ++i) {
            row[i] = std::exp(row[i] - mx);
            sum += row[i];
        }
        const S inv = S(1) / sum;
        for (int i = 0; i < k; ++i) row[i] *= inv;
    }
}

// Jacobian-vector product: dlogit_j = p_j * (g_j - sum_k g_k p_k).
template <typename S>
void softmax_backward(const TensorT<S>& probs, const std::vector<S>& prob_grad,
                      std::vector<S>& logit_grad) {
    const int k = probs.c;
    logit_grad.assign(probs.size(), S(0));
    for (int b = 0; b < probs.n; ++b) {
        const S* p = probs.values.data() + static_cast<std::size_t>(b) * k;
        const S* g = prob_grad.data() + static_cast<std::size_t>(b) * k;
        S dot = 0;
        for (int i = 0; i < k; ++i) dot += g[i] * p[i];
        S* q = logit_grad.data() + static_cast<std::size_t>(b) * k;
        for (int i = 0; i < k; ++i) q[i] = p[i] * (g[i] - dot);
    }
}

}  // namespace lanenum
