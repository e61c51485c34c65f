#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "tppfit/conditioning.hpp"
#include "tppfit/errors.hpp"
#include "tppfit/fitter.hpp"
#include "tppfit/planner.hpp"

using namespace tppfit;
using namespace tppfit::testing;

TEST_CASE("seed protocols") {
    CHECK(protocol_seed(SeedProtocol::Stride1, 7) == 7);
    CHECK(protocol_seed(SeedProtocol::Stride137, 3) == 411);
    CHECK(protocol_seed(SeedProtocol::Affine, 21) == 2100105);
    CHECK(protocol_seed(SeedProtocol::Affine, 0) == 42);
    for (auto p : {SeedProtocol::Stride1, SeedProtocol::Stride137, SeedProtocol::Affine})
        CHECK(parse_seed_protocol(seed_protocol_name(p)) == p);
}

TEST_CASE("loss objectives") {
    CHECK(loss_objective({1.0, -2.0}, LossSpec::squared()) == 2.5);
    CHECK(loss_objective({0.25, -2.0}, LossSpec::huber(0.5)) == doctest::Approx(0.03125 + 0.5 * 1.75));
    CHECK(default_loss(LawKind::RepeatedData) == LossSpec::huber(0.5));
    CHECK(default_loss(LawKind::Chinchilla) == LossSpec::squared());
}

TEST_CASE("config validation") {
    FitConfig c;
    c.restarts = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c.restarts = 1;
    c.loss = LossSpec::huber(0.0);
    CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("gauss-newton step on a linear model lands on the OLS optimum") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    const std::size_t m = 15, p = 3;
    Matrix x(m, p);
    Vector y(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < p; ++j) x(i, j) = g(rng);
        y[i] = g(rng);
    }
    const Vector theta0{0.3, -1.0, 2.0};
    Matrix jac(m, p);
    Vector r(m);
    for (std::size_t i = 0; i < m; ++i) {
        double pred = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            jac(i, j) = -x(i, j);
            pred += x(i, j) * theta0[j];
        }
        r[i] = y[i] - pred;
    }
    const Vector step = gauss_newton_step(jac, r, 0.0);
    const Vector ols = cholesky_solve(*cholesky(x.transpose() * x), transpose_times(x, y));
    for (std::size_t j = 0; j < p; ++j) CHECK(theta0[j] + step[j] == doctest::Approx(ols[j]).epsilon(1e-10));

    CHECK(gauss_newton_step(jac, Vector(m, 0.0)) == Vector(p, 0.0));
    CHECK_THROWS_AS(gauss_newton_step(Matrix(m, p), r), SingularSystemError);
    Matrix dup(4, 2);
    for (std::size_t i = 0; i < 4; ++i) dup(i, 0) = dup(i, 1) = 1.0 + static_cast<double>(i);
    const Vector s = gauss_newton_step(dup, {1, 2, 3, 4});
    CHECK(std::isfinite(s[0]));
}

TEST_CASE("(A, E) subproblem converges within five steps") {
    const auto t = truth(LawKind::Chinchilla);
    const auto sizes = log_space(1e7, 1e9, 8);
    std::vector<double> n, l;
    for (double s : sizes) {
        n.push_back(s);
        l.push_back(evaluate(t, s, 20.0 * s));
    }
    double a = 900.0, e = 0.5;
    int steps = 0;
    for (; steps < 5; ++steps) {
        Matrix jac(n.size(), 2);
        Vector r(n.size());
        for (std::size_t i = 0; i < n.size(); ++i) {
            const double pred = a * std::pow(n[i], -0.34) + 410.7 * std::pow(20.0 * n[i], -0.28) + e;
            r[i] = l[i] - pred;
            jac(i, 0) = -std::pow(n[i], -0.34);
            jac(i, 1) = -1.0;
        }
        if (norm_inf(r) < 1e-12) break;
        const Vector d = gauss_newton_step(jac, r);
        a += d[0];
        e += d[1];
    }
    CHECK(steps <= 5);
    CHECK(a == doctest::Approx(406.4).epsilon(1e-9));
    CHECK(e == doctest::Approx(1.69).epsilon(1e-9));
}

TEST_CASE("noiseless grid recovers chinchilla truth") {
    const auto t = truth(LawKind::Chinchilla);
    const auto ds = generate_grid(t, log_space(5e6, 8e7, 14), log_space(1e7, 3e8, 12), {0.0, 0});
    const FitResult f = fit(ds, LawKind::Chinchilla, FitConfig{});
    for (std::size_t j = 0; j < 5; ++j) CHECK(rel_err(f.params[j], t[j]) < 1e-3);
    CHECK(f.converged);
    CHECK(f.params.within_bounds());
    CHECK(f.restart_index < 100);

    SUBCASE("result is self-consistent") {
        const auto again = result_at(ds, f.params, f.loss);
        CHECK(rel_err(again.objective, f.objective, 1e-300) <= 1e-10);
        for (std::size_t i = 0; i < ds.size(); ++i) CHECK(f.jacobian.row(i) == jacobian_row(f.params, ds[i].n, ds[i].d));
    }
    SUBCASE("deterministic") {
        CHECK(fit(ds, LawKind::Chinchilla, FitConfig{}) == f);
    }
}

TEST_CASE("fit respects splits and sizes") {
    const auto t = truth(LawKind::Chinchilla);
    const auto ds = generate_collinear(t, log_space(1e7, 1e8, 3), {1.0}, {0.0, 0});
    CHECK_THROWS_AS(fit(ds, LawKind::Chinchilla, FitConfig{}), DomainError);
    const auto big = generate_collinear(t, log_space(1e7, 1e8, 4), {1.0, 2.0, 8.0}, {0.0, 0});
    const auto marked = mark_holdout(big, 8.0, 1e300);
    FitConfig c;
    c.restarts = 5;
    const auto f = fit(marked, LawKind::Chinchilla, c);
    CHECK(f.residuals.size() == 8);
}

TEST_CASE("repeated-data fit defaults to Huber") {
    auto t = truth(LawKind::RepeatedData);
    const auto ds = generate_grid(t, log_space(5e6, 8e7, 8), log_space(1e7, 3e8, 8), {0.0, 0});
    FitConfig c;
    c.restarts = 10;
    c.repetition = t.repetition;
    const auto f = fit(ds, LawKind::RepeatedData, c);
    CHECK(f.loss == LossSpec::huber(0.5));
    CHECK(f.params.repetition == t.repetition);
}

TEST_CASE("profile reduced fit") {
    const auto t = truth(LawKind::Chinchilla);
    FitConfig c;
    c.restarts = 10;
    SUBCASE("determinant identity") {
        const auto ds = generate_collinear(t, log_space(1e7, 1e9, 6), {20.0}, {0.0, 0});
        const auto f = profile_reduced_fit(ds, c);
        CHECK(f.params.kind == LawKind::ReducedChinchilla);
        const Matrix g = gram_matrix(f.jacobian);
        const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
        const auto ps = power_sums(ds.distinct_sizes(), f.params[1]);
        const double formula = f.params[0] * f.params[0] * ps.phi2 * ps.phi2 * ps.logn_variance;
        CHECK(det > 0.0);
        CHECK(rel_err(det, formula) < 1e-8);
    }
    SUBCASE("two sizes suffice") {
        const auto ds = generate_collinear(t, {1e7, 1e9}, {20.0}, {0.0, 0}).replicated(2);
        const auto f = profile_reduced_fit(ds, c);
        const Matrix g = gram_matrix(f.jacobian);
        CHECK(g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0) > 0.0);
    }
    SUBCASE("determinant does not depend on beta") {
        const auto base = generate_collinear(t, log_space(1e7, 1e9, 6), {20.0}, {0.0, 0});
        auto shifted = t;
        shifted.values[4] = 0.30;
        const auto other = generate_collinear(shifted, log_space(1e7, 1e9, 6), {20.0}, {0.0, 0});
        const auto red = reduce_on_ray(t, 20.0);
        const Matrix g1 = gram_matrix(result_at(base, red, LossSpec::squared()).jacobian);
        const Matrix g2 = gram_matrix(result_at(other, red, LossSpec::squared()).jacobian);
        const double d1 = g1(0, 0) * g1(1, 1) - g1(0, 1) * g1(0, 1);
        const double d2 = g2(0, 0) * g2(1, 1) - g2(0, 1) * g2(0, 1);
        CHECK(rel_err(d1, d2) < 1e-10);
    }
    SUBCASE("degenerate inputs") {
        const auto one = generate_collinear(t, {1e8}, {20.0}, {0.0, 0}).replicated(4);
        CHECK_THROWS_AS(profile_reduced_fit(one, c), NotSingleRayError);
        const auto two = generate_collinear(t, log_space(1e7, 1e9, 4), {10.0, 20.0}, {0.0, 0});
        CHECK_THROWS_AS(profile_reduced_fit(two, c), NotSingleRayError);
    }
}

TEST_CASE("restart spread shrinks on diverse designs") {
    const auto t = truth(LawKind::Chinchilla);
    const auto sizes = log_space(1e7, 1e9, 10);
    auto spread = [&](const std::vector<double>& ratios) {
        const auto ds = generate_collinear(t, sizes, ratios, {1e-4, 3});
        FitConfig c;
        c.restarts = 1;
        c.polish_iterations = 0;
        c.execution = Execution::Serial;
        std::vector<std::pair<double, double>> runs;
        for (std::uint64_t s = 0; s < 40; ++s) {
            c.seed_index = s;
            const auto f = fit(ds, LawKind::Chinchilla, c);
            runs.emplace_back(f.objective, std::log(f.params[0]));
        }
        double best = runs.front().first;
        for (const auto& r : runs) best = std::min(best, r.first);
        std::vector<double> a;
        for (const auto& r : runs)
            if (r.first <= 2.0 * best) a.push_back(r.second);
        REQUIRE(a.size() >= 3);
        double mean = 0.0;
        for (double x : a) mean += x;
        mean /= static_cast<double>(a.size());
        double v = 0.0;
        for (double x : a) v += (x - mean) * (x - mean);
        return std::sqrt(v / static_cast<double>(a.size() - 1));
    };
    const double single = spread({20.0});
    const double diverse = spread({5.0, 1000.0});
    CHECK(diversity_check({5.0, 1000.0}, 0.28, 100.0).passes);
    CHECK(single > 10.0 * diverse);
}
