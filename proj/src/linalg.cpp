#include "tppfit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tppfit {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Vector Matrix::row(std::size_t i) const {
    return Vector(data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
                  data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_));
}

Vector Matrix::col(std::size_t j) const {
    Vector v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
}

void Matrix::set_row(std::size_t i, const Vector& v) {
    if (v.size() != cols_) throw std::invalid_argument("set_row: length mismatch");
    std::copy(v.begin(), v.end(), data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::submatrix(const std::vector<std::size_t>& idx) const {
    Matrix s(idx.size(), idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = 0; b < idx.size(); ++b) s(a, b) = (*this)(idx[a], idx[b]);
    return s;
}

double Matrix::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
}

double Matrix::frobenius() const {
    double s = 0.0;
    for (double x : data_) s += x * x;
    return std::sqrt(s);
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matrix product: shape mismatch");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

Vector operator*(const Matrix& a, const Vector& x) {
    if (a.cols() != x.size()) throw std::invalid_argument("matrix-vector: shape mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
    return y;
}

Vector transpose_times(const Matrix& a, const Vector& x) {
    if (a.rows() != x.size()) throw std::invalid_argument("transpose_times: shape mismatch");
    Vector y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(i, j) * x[i];
    return y;
}

Matrix weighted_gram(const Matrix& j, const Vector& w) {
    const std::size_t p = j.cols();
    Matrix g(p, p);
    for (std::size_t i = 0; i < j.rows(); ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        for (std::size_t a = 0; a < p; ++a) {
            const double ja = wi * j(i, a);
            for (std::size_t b = a; b < p; ++b) g(a, b) += ja * j(i, b);
        }
    }
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < a; ++b) g(a, b) = g(b, a);
    return g;
}

double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

double norm_inf(const Vector& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

std::optional<Matrix> cholesky(const Matrix& a) {
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = a(j, j);
        for (std::size_t k = 0; k < j; ++k) s -= l(j, k) * l(j, k);
        if (!(s > 0.0) || !std::isfinite(s)) return std::nullopt;
        l(j, j) = std::sqrt(s);
        for (std::size_t i = j + 1; i < n; ++i) {
            double t = a(i, j);
            for (std::size_t k = 0; k < j; ++k) t -= l(i, k) * l(j, k);
            l(i, j) = t / l(j, j);
        }
    }
    return l;
}

Vector cholesky_solve(const Matrix& lower, const Vector& b) {
    const std::size_t n = lower.rows();
    Vector y(b);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) y[i] -= lower(i, k) * y[k];
        y[i] /= lower(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t k = ii + 1; k < n; ++k) y[ii] -= lower(k, ii) * y[k];
        y[ii] /= lower(ii, ii);
    }
    return y;
}

std::optional<Matrix> spd_inverse(const Matrix& a) {
    auto l = cholesky(a);
    if (!l) return std::nullopt;
    const std::size_t n = a.rows();
    Matrix inv(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        Vector e(n, 0.0);
        e[j] = 1.0;
        Vector x = cholesky_solve(*l, e);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = x[i];
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            const double s = 0.5 * (inv(i, j) + inv(j, i));
            inv(i, j) = inv(j, i) = s;
        }
    return inv;
}

std::optional<Vector> damped_least_squares(const Matrix& j, const Vector& b, double mu) {
    const std::size_t m = j.rows();
    const std::size_t p = j.cols();
    if (b.size() != m) throw std::invalid_argument("damped_least_squares: shape mismatch");
    const std::size_t rows = m + (mu > 0.0 ? p : 0);
    if (rows < p) return std::nullopt;
    Matrix a(rows, p);
    Vector y(rows, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t c = 0; c < p; ++c) a(i, c) = j(i, c);
        y[i] = b[i];
    }
    if (mu > 0.0)
        for (std::size_t c = 0; c < p; ++c) a(m + c, c) = std::sqrt(mu);

    double scale = 0.0;
    for (double x : a.data()) scale = std::max(scale, std::abs(x));
    if (scale == 0.0) return std::nullopt;

    for (std::size_t k = 0; k < p; ++k) {
        double norm = 0.0;
        for (std::size_t i = k; i < rows; ++i) norm += a(i, k) * a(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) return std::nullopt;
        const double alpha = a(k, k) > 0.0 ? -norm : norm;
        Vector v(rows - k);
        for (std::size_t i = k; i < rows; ++i) v[i - k] = a(i, k);
        v[0] -= alpha;
        const double vv = dot(v, v);
        if (vv > 0.0) {
            for (std::size_t c = k; c < p; ++c) {
                double s = 0.0;
                for (std::size_t i = k; i < rows; ++i) s += v[i - k] * a(i, c);
                s = 2.0 * s / vv;
                for (std::size_t i = k; i < rows; ++i) a(i, c) -= s * v[i - k];
            }
            double s = 0.0;
            for (std::size_t i = k; i < rows; ++i) s += v[i - k] * y[i];
            s = 2.0 * s / vv;
            for (std::size_t i = k; i < rows; ++i) y[i] -= s * v[i - k];
        }
    }
    double rmax = 0.0;
    for (std::size_t k = 0; k < p; ++k) rmax = std::max(rmax, std::abs(a(k, k)));
    for (std::size_t k = 0; k < p; ++k)
        if (!(std::abs(a(k, k)) > 1e-14 * rmax)) return std::nullopt;
    Vector x(p);
    for (std::size_t kk = p; kk-- > 0;) {
        double s = y[kk];
        for (std::size_t c = kk + 1; c < p; ++c) s -= a(kk, c) * x[c];
        x[kk] = s / a(kk, kk);
    }
    for (double xi : x)
        if (!std::isfinite(xi)) return std::nullopt;
    return x;
}

}  // namespace tppfit
