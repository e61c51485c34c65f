#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace tppfit {

using Vector = std::vector<double>;

// Dense row-major matrix. Sizes here are tiny (p <= 16) or tall-skinny (m x p).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const noexcept { return data_; }

    Vector row(std::size_t i) const;
    Vector col(std::size_t j) const;
    void set_row(std::size_t i, const Vector& v);

    Matrix transpose() const;
    Matrix submatrix(const std::vector<std::size_t>& idx) const;  // principal sub-block
    double trace() const;
    double frobenius() const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, const Vector& x);

Vector transpose_times(const Matrix& a, const Vector& x);  // A^T x
Matrix weighted_gram(const Matrix& j, const Vector& w);    // J^T diag(w) J

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);
double norm_inf(const Vector& a);

// Lower Cholesky factor, or nullopt if A is not numerically positive definite.
std::optional<Matrix> cholesky(const Matrix& a);
Vector cholesky_solve(const Matrix& lower, const Vector& b);
// Inverse of an SPD matrix; nullopt on factorization failure.
std::optional<Matrix> spd_inverse(const Matrix& a);

// argmin ||J x - b||^2 + mu ||x||^2 via Householder QR of [J; sqrt(mu) I].
// nullopt when the stacked system is numerically rank deficient.
std::optional<Vector> damped_least_squares(const Matrix& j, const Vector& b, double mu);

}  // namespace tppfit
