#include "tppfit/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tppfit/errors.hpp"

namespace tppfit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kClampRatio = 1e-14;

double ratio_kappa(double lmax, double lmin, bool* clamped = nullptr) {
    if (!(lmax > 0.0)) return kInf;
    if (lmin < kClampRatio * lmax) {
        if (clamped) *clamped = true;
        return 1.0 / kClampRatio;
    }
    return lmax / lmin;
}

}  // namespace

Matrix gram_matrix(const Matrix& j) {
    if (j.rows() < 1) throw DomainError("gram_matrix needs at least one row");
    return weighted_gram(j, {});
}

EigenDecomposition eigendecompose_small(const Matrix& sym) {
    const std::size_t n = sym.rows();
    if (sym.cols() != n) throw NonSymmetricError("matrix is not square");
    if (n == 0 || n > 16) throw DomainError("eigendecompose_small supports 1 <= p <= 16");
    double amax = 0.0;
    for (double x : sym.data()) amax = std::max(amax, std::abs(x));
    Matrix a = sym;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            if (std::abs(a(i, j) - a(j, i)) > 1e-10 * amax) throw NonSymmetricError("matrix is not symmetric");
            a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));
        }
    Matrix v = Matrix::identity(n);
    const double fro = a.frobenius();

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s += a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    for (int sweep = 0; sweep < 100; ++sweep) {
        if (off_norm() <= 1e-13 * fro) break;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
    EigenDecomposition out{Vector(n), Matrix(n, n)};
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t src = order[c];
        out.values[c] = a(src, src);
        std::size_t big = 0;
        for (std::size_t k = 1; k < n; ++k)
            if (std::abs(v(k, src)) > std::abs(v(big, src))) big = k;
        const double sign = v(big, src) < 0.0 ? -1.0 : 1.0;
        double norm = 0.0;
        for (std::size_t k = 0; k < n; ++k) norm += v(k, src) * v(k, src);
        norm = std::sqrt(norm);
        for (std::size_t k = 0; k < n; ++k) out.vectors(k, c) = sign * v(k, src) / norm;
    }
    return out;
}

double weighted_variance(const Vector& w, const Vector& x) {
    if (w.size() != x.size() || w.empty()) throw DomainError("weighted_variance: length mismatch");
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); })) return 0.0;
    double sw = 0.0;
    double mean = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        sw += w[i];
        mean += w[i] * x[i];
    }
    if (!(sw > 0.0)) throw DomainError("weights must have positive total");
    mean /= sw;
    double var = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) var += w[i] * (x[i] - mean) * (x[i] - mean);
    return var / sw;
}

CsGap cs_gap_determinant(const Vector& f, double c, const Vector& h) {
    if (f.size() != h.size() || f.empty()) throw DomainError("cs_gap: length mismatch");
    double sff = 0.0, sfg = 0.0, sgg = 0.0;
    Vector w(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double g = c * f[i] * h[i];
        sff += f[i] * f[i];
        sfg += f[i] * g;
        sgg += g * g;
        w[i] = f[i] * f[i];
    }
    if (!(sff > 0.0)) throw DomainError("cs_gap: f must be nonzero");
    return {sff * sgg - sfg * sfg, c * c * sff * sff * weighted_variance(w, h)};
}

PowerSumProfile power_sums(const std::vector<double>& sizes, double alpha, const std::vector<double>& q) {
    if (sizes.empty()) throw DomainError("power_sums needs at least one size");
    PowerSumProfile out;
    out.q = q;
    out.weights.resize(sizes.size());
    Vector logs(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (!(sizes[i] > 0.0)) throw DomainError("sizes must be positive");
        const double ln = std::log(sizes[i]);
        const double t = safe_pow(sizes[i], -alpha);
        logs[i] = ln;
        out.phi1 += t;
        out.phi2 += t * t;
        out.t1 += t * ln;
        out.t2 += t * t * ln;
        out.u2 += t * t * ln * ln;
    }
    for (double qq : q) {
        double s = 0.0;
        for (double n : sizes) s += safe_pow(n, -qq * alpha);
        out.phi_q.push_back(s);
    }
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const double t = safe_pow(sizes[i], -alpha);
        out.weights[i] = t * t / out.phi2;
    }
    out.logn_variance = weighted_variance(out.weights, logs);
    return out;
}

double kappa_2x2(double a, double b, double d) {
    const double det = a * d - b * b;
    if (!(det > 0.0)) return kInf;
    const double disc = std::hypot(a - d, 2.0 * b);
    const double lplus = 0.5 * (a + d + disc);
    const double lminus = det / lplus;
    return lplus / lminus;
}

double kappa_scale_pair(const GramDiagnostics& diag, LawKind kind) {
    const auto idx = scale_pair_indices(kind);
    const Matrix sub = diag.gram.submatrix(idx);
    if (idx.size() == 2) return kappa_2x2(sub(0, 0), sub(0, 1), sub(1, 1));
    const auto eig = eigendecompose_small(sub);
    if (!(eig.values.front() > 0.0)) return kInf;
    return eig.values.back() / eig.values.front();
}

GramDiagnostics diagnose(const Matrix& jacobian, const LawParams& params) {
    if (jacobian.cols() != params.size()) throw DomainError("jacobian width does not match parameters");
    GramDiagnostics d;
    d.kind = params.kind;
    d.gram = gram_matrix(jacobian);
    const auto eig = eigendecompose_small(d.gram);
    d.eigenvalues = eig.values;
    d.eigenvectors = eig.vectors;
    d.kappa_full = ratio_kappa(eig.values.back(), eig.values.front(), &d.lambda_min_clamped);
    d.sloppy_vector = eig.vectors.col(0);

    const std::size_t p = params.size();
    Vector scale(p);
    bool zero_col = false;
    for (std::size_t j = 0; j < p; ++j) {
        zero_col = zero_col || !(d.gram(j, j) > 0.0);
        scale[j] = zero_col ? 0.0 : 1.0 / std::sqrt(d.gram(j, j));
    }
    if (zero_col) {
        d.kappa_full_equilibrated = kInf;
    } else {
        Matrix eq = d.gram;
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b) eq(a, b) *= scale[a] * scale[b];
        const auto ee = eigendecompose_small(eq);
        d.kappa_full_equilibrated = ratio_kappa(ee.values.back(), ee.values.front());
    }
    try {
        d.kappa_scale_pair = kappa_scale_pair(d, params.kind);
    } catch (const UnsupportedVariantError&) {
        d.kappa_scale_pair = d.kappa_full;
    }
    try {
        d.epsilon = exponent_gap(params).magnitude;
    } catch (const UnsupportedVariantError&) {
        d.epsilon.reset();
    }
    return d;
}

double residual_sigma(const FitResult& fit) {
    const std::size_t m = fit.residuals.size();
    const std::size_t p = fit.params.size();
    if (m <= p) throw DomainError("residual sigma needs more observations than parameters");
    double s = 0.0;
    for (double r : fit.residuals) s += r * r;
    return std::sqrt(s / static_cast<double>(m - p));
}

CIReport ci_report(const FitResult& fit, double sigma, const FitResult* paired) {
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    CIReport rep;
    rep.sigma = sigma;
    const Matrix g = gram_matrix(fit.jacobian);
    const std::size_t p = g.rows();
    rep.half_widths.assign(p, std::numeric_limits<double>::quiet_NaN());

    Vector scale(p);
    bool zero_col = false;
    for (std::size_t j = 0; j < p; ++j) {
        zero_col = zero_col || !(g(j, j) > 0.0);
        scale[j] = zero_col ? 0.0 : 1.0 / std::sqrt(g(j, j));
    }
    if (zero_col) {
        rep.reliable = false;
        rep.kappa_equilibrated = kInf;
    } else {
        // Equilibrate, then regularize by 1e-12 of the trace before inverting.
        Matrix eq = g;
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b) eq(a, b) *= scale[a] * scale[b];
        const auto ee = eigendecompose_small(eq);
        rep.kappa_equilibrated =
            ee.values.front() > 0.0 ? ee.values.back() / ee.values.front() : kInf;
        const double reg = 1e-12 * eq.trace();
        rep.reliable = ee.values.front() > reg;
        for (std::size_t a = 0; a < p; ++a) eq(a, a) += reg;
        if (auto inv = spd_inverse(eq)) {
            for (std::size_t j = 0; j < p; ++j)
                rep.half_widths[j] = 1.96 * sigma * std::sqrt(std::max((*inv)(j, j), 0.0)) * scale[j];
        } else {
            rep.reliable = false;
        }
    }

    std::vector<std::size_t> idx;
    try {
        idx = scale_pair_indices(fit.params.kind);
    } catch (const UnsupportedVariantError&) {
    }
    double var_first = std::numeric_limits<double>::quiet_NaN();
    if (!idx.empty()) {
        const Matrix sub = g.submatrix(idx);
        if (idx.size() == 2) {
            const double det = sub(0, 0) * sub(1, 1) - sub(0, 1) * sub(0, 1);
            var_first = det > 0.0 ? sub(1, 1) / det : kInf;
        } else {
            auto inv = spd_inverse(sub);
            var_first = inv ? (*inv)(0, 0) : kInf;
        }
        rep.pair_inflation = std::sqrt(var_first * sub(0, 0));
    }

    if (paired) {
        if (paired->params.kind != LawKind::ReducedChinchilla)
            throw UnsupportedVariantError("paired fit must be a reduced-model fit");
        const LawKind k = fit.params.kind;
        if (k == LawKind::Chinchilla || k == LawKind::RepeatedData || k == LawKind::Interaction) {
            const Matrix gr = gram_matrix(paired->jacobian);
            rep.inflation_ratio = std::sqrt(var_first * gr(0, 0));
        } else if (!idx.empty()) {
            rep.inflation_ratio = rep.pair_inflation;
        }
    }
    return rep;
}

double sloppy_leverage(const ExperimentDataset& holdout, double k, double alpha, double beta_eff, double phi2) {
    if (holdout.empty()) throw EmptySplitError("holdout is empty");
    if (!(k > 0.0) || !(phi2 > 0.0)) throw DomainError("sloppy_leverage needs k > 0 and phi2 > 0");
    double s = 0.0;
    for (const auto& o : holdout.observations()) {
        const double bracket = 1.0 - safe_pow(k / o.ratio(), beta_eff);
        s += safe_pow(o.n, -2.0 * alpha) * bracket * bracket;
    }
    return s / (static_cast<double>(holdout.size()) * phi2);
}

}  // namespace tppfit
