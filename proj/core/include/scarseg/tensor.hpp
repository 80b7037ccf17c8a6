#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "scarseg/error.hpp"

namespace scarseg {

// Dense (batch, channel, row, col) tensor, row-major. The engine is float32
// in production; the double instantiation exists so gradient checks can run
// the identical code at full precision.
template <typename T>
struct Tens4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;

    Tens4() = default;
    Tens4(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<std::size_t>(n_) * c_ * h_ * w_, T(0)) {}

    std::size_t size() const { return data.size(); }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }

    std::size_t index(int i, int j, int y, int x) const {
        return ((static_cast<std::size_t>(i) * c + j) * h + y) * w + x;
    }
    T at(int i, int j, int y, int x) const { return data[index(i, j, y, x)]; }
    T& at(int i, int j, int y, int x) { return data[index(i, j, y, x)]; }

    const T* plane_ptr(int i, int j) const {
        return data.data() + (static_cast<std::size_t>(i) * c + j) * plane();
    }
    T* plane_ptr(int i, int j) {
        return data.data() + (static_cast<std::size_t>(i) * c + j) * plane();
    }
    const T* sample_ptr(int i) const {
        return data.data() + static_cast<std::size_t>(i) * c * plane();
    }
    T* sample_ptr(int i) {
        return data.data() + static_cast<std::size_t>(i) * c * plane();
    }

    bool same_shape(const Tens4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    std::string shape_str() const {
        return std::to_string(n) + "x" + std::to_string(c) + "x" +
               std::to_string(h) + "x" + std::to_string(w);
    }
};

using Tensor4 = Tens4<float>;

template <typename T>
bool all_finite(const Tens4<T>& t) {
    for (T v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}

template <typename T>
void require_finite(const Tens4<T>& t, const char* what) {
    if (!all_finite(t))
        throw Error("nn_engine", std::string(what) + " contains NaN or Inf");
}

}  // namespace scarseg
