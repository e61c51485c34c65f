#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "support.hpp"
#include "tppfit/conditioning.hpp"
#include "tppfit/errors.hpp"
#include "tppfit/fitter.hpp"

using namespace tppfit;
using namespace tppfit::testing;

namespace {

Matrix design_jacobian(const LawParams& p, const ExperimentDataset& ds) {
    Matrix j(ds.size(), p.size());
    for (std::size_t i = 0; i < ds.size(); ++i) j.set_row(i, jacobian_row(p, ds[i].n, ds[i].d));
    return j;
}

LawParams chinchilla_with_gap(double eps) {
    return LawParams::make(LawKind::Chinchilla, {406.4, 410.7, 1.69, 0.34, 0.34 - eps});
}

ExperimentDataset ray(double k, std::size_t count = 10) {
    return generate_collinear(truth(LawKind::Chinchilla), log_space(1e7, 1e9, count), {k}, {0.0, 0});
}

}  // namespace

TEST_CASE("gram basics") {
    CHECK(gram_matrix(Matrix::identity(4)) == Matrix::identity(4));
    Matrix f(3, 1);
    f(0, 0) = 1, f(1, 0) = 2, f(2, 0) = 2;
    CHECK(gram_matrix(f)(0, 0) == 9.0);
}

TEST_CASE("five-size single-ray gram") {
    const auto t = truth(LawKind::Chinchilla);
    const auto ds = generate_collinear(t, {1e7, 3e7, 1e8, 3e8, 1e9}, {20.0}, {0.0, 0});
    const auto d = diagnose(design_jacobian(t, ds), t);
    CHECK(rel_err(d.kappa_scale_pair, 775.945347243848) < 1e-9);
    CHECK(d.kappa_full >= d.kappa_scale_pair);
    CHECK(d.lambda_min_clamped);
    CHECK(d.kappa_full_equilibrated >= 1.0);
    const double eps2 = 0.06 * 0.06;
    CHECK(d.kappa_scale_pair * eps2 > 0.5);
    CHECK(d.kappa_scale_pair * eps2 < 10.0);
    REQUIRE(d.epsilon.has_value());
    CHECK(*d.epsilon == doctest::Approx(0.06));
    CHECK(norm2(d.sloppy_vector) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("jacobi eigendecomposition") {
    Matrix dg(2, 2);
    dg(0, 0) = 4, dg(1, 1) = 1;
    auto e = eigendecompose_small(dg);
    CHECK(e.values == Vector{1.0, 4.0});
    CHECK(std::abs(e.vectors(1, 0)) == 1.0);
    CHECK(std::abs(e.vectors(0, 1)) == 1.0);

    Matrix s(2, 2);
    s(0, 0) = 2, s(0, 1) = 1, s(1, 0) = 1, s(1, 1) = 2;
    e = eigendecompose_small(s);
    CHECK(e.values[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e.values[1] == doctest::Approx(3.0).epsilon(1e-14));

    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    Matrix a(6, 6);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t k = 0; k <= i; ++k) a(i, k) = a(k, i) = g(rng);
    e = eigendecompose_small(a);
    Matrix lam(6, 6);
    for (std::size_t i = 0; i < 6; ++i) lam(i, i) = e.values[i];
    const Matrix rec = e.vectors * lam * e.vectors.transpose();
    double err = 0.0;
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t k = 0; k < 6; ++k) err += (rec(i, k) - a(i, k)) * (rec(i, k) - a(i, k));
    CHECK(std::sqrt(err) < 1e-9);
    for (std::size_t c = 0; c < 6; ++c) {
        const Vector v = e.vectors.col(c);
        const Vector av = a * v;
        for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(av[i] - e.values[c] * v[i]) < 1e-8 * a.frobenius());
        if (c) CHECK(e.values[c] >= e.values[c - 1]);
    }
    Matrix ns = a;
    ns(0, 1) += 1.0;
    CHECK_THROWS_AS(eigendecompose_small(ns), NonSymmetricError);
    CHECK_THROWS(eigendecompose_small(Matrix::identity(17)));
}

TEST_CASE("cauchy-schwarz gap identity") {
    const auto hand = cs_gap_determinant({1, 1}, 1.0, {1, 2});
    CHECK(hand.lhs == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(hand.rhs == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(cs_gap_determinant({1, 2, 3}, 2.0, {5, 5, 5}).lhs == 0.0);
    CHECK(cs_gap_determinant({1, 2, 3}, 2.0, {5, 5, 5}).rhs == 0.0);

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (int t = 0; t < 200; ++t) {
        const std::size_t m = 2 + static_cast<std::size_t>(rng() % 10);
        Vector f(m), h(m);
        for (std::size_t i = 0; i < m; ++i) f[i] = u(rng), h[i] = u(rng);
        const auto r = cs_gap_determinant(f, u(rng) - 1.05, h);
        CHECK(rel_err(r.lhs, r.rhs) < 1e-10);
    }
}

TEST_CASE("taylor expansion of the weighted variance") {
    const auto sizes = log_space(1e7, 1e9, 10);
    const auto ps = power_sums(sizes, 0.34);
    double maxlog = 0.0;
    for (double n : sizes) maxlog = std::max(maxlog, std::abs(std::log(n)));
    for (double e : {0.05, 0.02, 0.01, 0.005, -0.03}) {
        Vector h;
        for (double n : sizes) h.push_back(std::pow(n, e));
        const double lhs = weighted_variance(ps.weights, h);
        CHECK(std::abs(lhs - e * e * ps.logn_variance) <= 5.0 * std::abs(e * e * e) * maxlog * maxlog * maxlog);
    }
}

TEST_CASE("power sums") {
    const auto ps = power_sums({1e7, 1e8, 1e9}, 0.3, {1.0, 2.0, 3.0});
    double s = 0.0;
    for (double w : ps.weights) s += w;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ps.phi_q.size() == 3);
    CHECK(ps.phi_q[0] == doctest::Approx(ps.phi1).epsilon(1e-14));
    CHECK(ps.phi_q[1] == doctest::Approx(ps.phi2).epsilon(1e-14));
    CHECK(ps.logn_variance > 0.0);
    CHECK(power_sums({1e8, 1e8}, 0.3).logn_variance == 0.0);
}

TEST_CASE("scale pair condition number") {
    CHECK(kappa_2x2(1.0, 1.0, 1.0) == std::numeric_limits<double>::infinity());
    CHECK(kappa_2x2(2.0, 0.0, 1.0) == doctest::Approx(2.0));

    Matrix prop(3, 5);
    for (std::size_t i = 0; i < 3; ++i) {
        prop(i, 0) = 1.0 + static_cast<double>(i);
        prop(i, 1) = 2.0 * prop(i, 0);
        prop(i, 2) = 1.0;
    }
    CHECK(diagnose(prop, truth(LawKind::Chinchilla)).kappa_scale_pair == std::numeric_limits<double>::infinity());

    SUBCASE("halving the gap quadruples kappa") {
        const auto ds = ray(20.0);
        std::vector<double> le, lk;
        for (double eps : {0.1, 0.05, 0.025, 0.0125}) {
            const auto p = chinchilla_with_gap(eps);
            le.push_back(std::log(eps));
            lk.push_back(std::log(diagnose(design_jacobian(p, ds), p).kappa_scale_pair));
        }
        const double s = slope(le, lk);
        CHECK(s >= -2.15);
        CHECK(s <= -1.85);
        double prev = 0.0;
        for (double eps = 0.0125; eps > 1e-4; eps /= 2.0) {
            const auto p = chinchilla_with_gap(eps);
            const double k = diagnose(design_jacobian(p, ds), p).kappa_scale_pair;
            if (prev > 0.0) CHECK(k / prev == doctest::Approx(4.0).epsilon(0.2));
            prev = k;
        }
    }
    SUBCASE("closed-form determinant") {
        const auto t = truth(LawKind::Chinchilla);
        const auto ds = ray(20.0);
        const auto g = gram_matrix(design_jacobian(t, ds));
        const auto sizes = ds.distinct_sizes();
        const auto ps = power_sums(sizes, 0.34);
        Vector h;
        for (double n : sizes) h.push_back(std::pow(n, 0.34 - 0.28));
        const double det = std::pow(20.0, -0.56) * ps.phi2 * ps.phi2 * weighted_variance(ps.weights, h);
        const double tr = g(0, 0) + g(1, 1);
        const double direct = kappa_2x2(g(0, 0), g(0, 1), g(1, 1));
        const double viaformula = tr * tr / det;
        const double lplus_over_lminus = [&] {
            const double disc = std::sqrt(tr * tr - 4.0 * det);
            return (tr + disc) / (tr - disc);
        }();
        CHECK(rel_err(det, g(0, 0) * g(1, 1) - g(0, 1) * g(0, 1)) < 1e-8);
        CHECK(rel_err(direct, lplus_over_lminus) < 1e-8);
        CHECK(viaformula >= direct);
    }
}

TEST_CASE("interlacing, padding and replication") {
    std::mt19937_64 rng(77);
    for (int t = 0; t < 10; ++t) {
        const auto p = random_params(LawKind::Chinchilla, rng);
        const auto ds = generate_collinear(p, log_space(1e7, 1e9, 6), {5.0 + t, 40.0 + 10.0 * t}, {0.0, 0});
        const Matrix j = design_jacobian(p, ds);
        const auto d = diagnose(j, p);
        CHECK(d.kappa_scale_pair <= d.kappa_full * (1.0 + 1e-8));

        const Matrix sub = d.gram.submatrix({0, 1});
        const auto se = eigendecompose_small(sub);
        Vector w(5, 0.0);
        w[0] = se.vectors(0, 0);
        w[1] = se.vectors(1, 0);
        CHECK(rel_err(dot(w, d.gram * w), se.values[0]) < 1e-10);
        CHECK(d.eigenvalues.front() <= se.values[0] * (1.0 + 1e-10));

        const Matrix j2 = design_jacobian(p, ds.replicated(2));
        CHECK(rel_err(diagnose(j2, p).kappa_scale_pair, d.kappa_scale_pair) < 1e-10);
    }
}

TEST_CASE("confidence intervals") {
    SUBCASE("orthonormal columns") {
        const Matrix j = Matrix::identity(5);
        FitResult f;
        f.params = truth(LawKind::Chinchilla);
        f.jacobian = j;
        f.residuals = Vector(5, 0.0);
        const auto rep = ci_report(f, 1.0);
        CHECK(rep.reliable);
        for (double h : rep.half_widths) CHECK(h == doctest::Approx(1.96).epsilon(1e-10));
        CHECK(rep.pair_inflation == doctest::Approx(1.0));
        CHECK_FALSE(rep.inflation_ratio.has_value());
        CHECK_THROWS_AS(ci_report(f, 0.0), DomainError);
    }
    SUBCASE("chinchilla single ray at eps = 0.06") {
        const auto t = truth(LawKind::Chinchilla);
        const auto ds = ray(20.0);
        const auto full = result_at(ds, t, LossSpec::squared());
        const auto red = result_at(ds, reduce_on_ray(t, 20.0), LossSpec::squared());
        const auto rep = ci_report(full, 0.01, &red);
        REQUIRE(rep.inflation_ratio.has_value());
        CHECK(*rep.inflation_ratio > 10.0);
        CHECK(*rep.inflation_ratio >= 1.0 - 1e-6);
        CHECK(rep.pair_inflation >= 1.0);
        for (double h : rep.half_widths) CHECK(h >= 0.0);
    }
    SUBCASE("kaplan single ray at eps = 0.019") {
        const auto t = truth(LawKind::KaplanAdditive);
        const auto ds = generate_collinear(t, log_space(1e7, 1e9, 10), {20.0}, {0.0, 0});
        const auto full = result_at(ds, t, LossSpec::squared());
        const auto rep = ci_report(full, 0.01);
        CHECK(rep.pair_inflation > 53.0 / 2.0);
    }
    SUBCASE("rank deficiency is flagged") {
        Matrix j(6, 5);
        for (std::size_t i = 0; i < 6; ++i) {
            j(i, 0) = 1.0 + static_cast<double>(i);
            j(i, 1) = 2.0 * j(i, 0);
            j(i, 2) = 1.0;
            j(i, 3) = static_cast<double>(i * i);
            j(i, 4) = std::sqrt(static_cast<double>(i) + 1.0);
        }
        FitResult f;
        f.params = truth(LawKind::Chinchilla);
        f.jacobian = j;
        f.residuals = Vector(6, 0.0);
        CHECK_FALSE(ci_report(f, 1.0).reliable);
    }
}

TEST_CASE("residual sigma") {
    FitResult f;
    f.params = truth(LawKind::Chinchilla);
    f.residuals = {1, -1, 1, -1, 1, -1, 1};
    CHECK(residual_sigma(f) == doctest::Approx(std::sqrt(7.0 / 2.0)));
    f.residuals.resize(5);
    CHECK_THROWS_AS(residual_sigma(f), DomainError);
}

TEST_CASE("sloppy leverage") {
    std::vector<Observation> on{{1e8, 2e9, 3.0}, {1e9, 2e10, 2.5}};
    CHECK(sloppy_leverage(ExperimentDataset(on), 20.0, 0.34, 0.28, 1.0) == 0.0);
    std::vector<Observation> off{{1e8, 5e9, 3.0}};
    CHECK(sloppy_leverage(ExperimentDataset(off), 20.0, 0.34, 0.28, 1.0) > 0.0);
    std::vector<Observation> hand{{1.0, 1.0, 1.0}, {1.0, 2.0, 1.0}};
    CHECK(sloppy_leverage(ExperimentDataset(hand), 1.0, 0.0, 1.0, 2.0) == doctest::Approx(0.0625).epsilon(1e-15));
    CHECK_THROWS_AS(sloppy_leverage(ExperimentDataset(), 1.0, 0.0, 1.0, 2.0), EmptySplitError);
}
