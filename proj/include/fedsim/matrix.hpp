#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fedsim {

using Vec = std::vector<double>;

// Dense row-major matrix. Rows are the unit of exchange between clients and
// the server (one embedding per row), so row views are the main accessor.
struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    Vec data;

    Matrix() = default;
    Matrix(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(size_t i, size_t j) { return data[i * cols + j]; }
    double operator()(size_t i, size_t j) const { return data[i * cols + j]; }

    std::span<double> row(size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(size_t i) const { return {data.data() + i * cols, cols}; }

    Vec row_copy(size_t i) const {
        return Vec(data.begin() + static_cast<ptrdiff_t>(i * cols),
                   data.begin() + static_cast<ptrdiff_t>((i + 1) * cols));
    }

    void set_row(size_t i, std::span<const double> v) {
        if (v.size() != cols) throw std::invalid_argument("set_row: size mismatch");
        std::copy(v.begin(), v.end(), data.begin() + static_cast<ptrdiff_t>(i * cols));
    }

    bool operator==(const Matrix& o) const = default;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace fedsim
