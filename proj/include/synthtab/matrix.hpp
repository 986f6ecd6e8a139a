#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace synthtab {

/// Row-major dense matrix of 64-bit reals; the carrier for every weight,
/// activation and encoded batch in the toolkit.
struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(size_t i, size_t j) { return data[i * cols + j]; }
    double at(size_t i, size_t j) const { return data[i * cols + j]; }

    std::span<double> row(size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(size_t i) const { return {data.data() + i * cols, cols}; }

    size_t size() const { return data.size(); }

    static Matrix identity(size_t n);
};

// c = a (m x k) * b (k x n)
Matrix matmul(const Matrix& a, const Matrix& b);
// c = a (m x k) * b', with b given as (n x k)
Matrix matmul_transb(const Matrix& a, const Matrix& b);
// c = a' * b, with a given as (k x m), b as (k x n)
Matrix matmul_transa(const Matrix& a, const Matrix& b);

void add_inplace(Matrix& dst, const Matrix& src);

bool all_finite(const Matrix& m);
// throws NumericError naming `what` if any entry is NaN/Inf
void ensure_finite(const Matrix& m, const std::string& what);

} // namespace synthtab
