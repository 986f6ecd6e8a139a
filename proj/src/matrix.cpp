#include "synthtab/matrix.hpp"

#include <cmath>

#include "synthtab/errors.hpp"

namespace synthtab {

Matrix Matrix::identity(size_t n) {
    Matrix m(n, n);
    for (size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw ValidationError("matmul: inner dimensions disagree (" + std::to_string(a.cols) +
                              " vs " + std::to_string(b.rows) + ")");
    }
    Matrix c(a.rows, b.cols);
    for (size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + i * a.cols;
        double* crow = c.data.data() + i * c.cols;
        for (size_t k = 0; k < a.cols; ++k) {
            const double av = arow[k];
            if (av == 0.0) continue;
            const double* brow = b.data.data() + k * b.cols;
            for (size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

Matrix matmul_transb(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) {
        throw ValidationError("matmul_transb: inner dimensions disagree (" +
                              std::to_string(a.cols) + " vs " + std::to_string(b.cols) + ")");
    }
    Matrix c(a.rows, b.rows);
    for (size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + i * a.cols;
        double* crow = c.data.data() + i * c.cols;
        for (size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.data.data() + j * b.cols;
            double acc = 0.0;
            for (size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            crow[j] = acc;
        }
    }
    return c;
}

Matrix matmul_transa(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) {
        throw ValidationError("matmul_transa: inner dimensions disagree (" +
                              std::to_string(a.rows) + " vs " + std::to_string(b.rows) + ")");
    }
    Matrix c(a.cols, b.cols);
    for (size_t t = 0; t < a.rows; ++t) {
        const double* arow = a.data.data() + t * a.cols;
        const double* brow = b.data.data() + t * b.cols;
        for (size_t i = 0; i < a.cols; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* crow = c.data.data() + i * c.cols;
            for (size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

void add_inplace(Matrix& dst, const Matrix& src) {
    if (dst.rows != src.rows || dst.cols != src.cols) {
        throw ValidationError("add_inplace: shape mismatch");
    }
    for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

bool all_finite(const Matrix& m) {
    for (double v : m.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void ensure_finite(const Matrix& m, const std::string& what) {
    if (!all_finite(m)) throw NumericError(what + ": non-finite entry");
}

} // namespace synthtab
