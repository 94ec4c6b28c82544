// N x C x H x W tensor with a paired gradient grid.
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lanenum/common.hpp"

namespace lanenum {

// Row-major n -> c -> h -> w. The grad array is allocated on demand; it is
// absent for inference-only tensors.
template <typename S>
struct TensorT {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<S> values;
    std::vector<S> grad;

    TensorT() = default;
    TensorT(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), values(static_cast<std::size_t>(n_) * c_ * h_ * w_, S(0)) {}

    std::size_t size() const { return static_cast<std::size_t>(n) * c * h * w; }

    std::size_t index(int in, int ic, int iy, int ix) const {
        return ((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix;
    }
    S& at(int in, int ic, int iy, int ix) { return values[index(in, ic, iy, ix)]; }
    S at(int in, int ic, int iy, int ix) const { return values[index(in, ic, iy, ix)]; }

    S* plane(int in, int ic) { return values.data() + (static_cast<std::size_t>(in) * c + ic) * h * w; }
    const S* plane(int in, int ic) const {
        return values.data() + (static_cast<std::size_t>(in) * c + ic) * h * w;
    }

    bool has_grad() const { return !grad.empty(); }
    void ensure_grad() {
        if (grad.size() != size()) grad.assign(size(), S(0));
    }
    void zero_grad() { grad.assign(size(), S(0)); }

    bool same_shape(const TensorT& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    std::string shape_str() const {
        return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
               std::to_string(w);
    }
};

using Tensor = TensorT<float>;

// Every operation must leave values finite; a violation raises a numeric
// error naming the producing layer.
template <typename S>
void check_finite(const TensorT<S>& t, const std::string& where) {
    for (const S v : t.values) {
        if (!std::isfinite(static_cast<double>(v))) {
            throw NumericError("non-finite activation in " + where);
        }
    }
}

}  // namespace lanenum
