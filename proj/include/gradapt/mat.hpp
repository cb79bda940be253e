#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "gradapt/common.hpp"

namespace gradapt {

// Dense row-major matrix. Parameters and activations use Mat<float>;
// tests that need 64-bit gradient accumulation instantiate Mat<double>.
template <typename T>
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Mat() = default;
    Mat(int r, int c, T fill = T(0)) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

    T* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
    const T* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }

    T& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    const T& at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    void fill(T v) { data.assign(data.size(), v); }
};

using MatF = Mat<float>;
using MatD = Mat<double>;

template <typename T>
Mat<T> select_rows(const Mat<T>& m, const std::vector<int>& idx) {
    Mat<T> out(static_cast<int>(idx.size()), m.cols);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const T* src = m.row(idx[i]);
        T* dst = out.row(static_cast<int>(i));
        for (int c = 0; c < m.cols; ++c) dst[c] = src[c];
    }
    return out;
}

template <typename T>
bool all_finite(const Mat<T>& m) {
    for (T v : m.data)
        if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
}

}  // namespace gradapt
