#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace linalg {

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;

    Matrix operator*(const Matrix& other) const;
    Matrix operator+(const Matrix& other) const;
    Matrix transpose() const;

    // Sum of the diagonal; the matrix must be square.
    double trace() const;

    bool approx_equal(const Matrix& other, double eps = 1e-9) const;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace linalg
