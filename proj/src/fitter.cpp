#include "tppfit/fitter.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "tppfit/errors.hpp"

namespace tppfit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double standard_normal(std::mt19937_64& rng) {
    const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Least-squares problem in optimizer coordinates: log for scale roles, raw otherwise.
class Problem {
public:
    Problem(std::vector<Observation> obs, LawParams templ, LossSpec loss)
        : obs_(std::move(obs)), templ_(std::move(templ)), loss_(loss) {
        const auto& roles = parameter_roles(templ_.kind);
        const std::size_t p = roles.size();
        log_.resize(p);
        lo_.resize(p);
        hi_.resize(p);
        for (std::size_t j = 0; j < p; ++j) {
            log_[j] = roles[j] == ParamRole::Scale && templ_.lower[j] > 0.0;
            lo_[j] = log_[j] ? std::log(templ_.lower[j]) : templ_.lower[j];
            hi_[j] = log_[j] ? std::log(templ_.upper[j]) : templ_.upper[j];
        }
    }

    std::size_t dim() const { return lo_.size(); }
    const Vector& lo() const { return lo_; }
    const Vector& hi() const { return hi_; }

    LawParams params(const Vector& u) const {
        LawParams p = templ_;
        for (std::size_t j = 0; j < u.size(); ++j) {
            const double v = log_[j] ? std::exp(u[j]) : u[j];
            p.values[j] = std::clamp(v, templ_.lower[j], templ_.upper[j]);
        }
        return p;
    }

    Vector to_internal(const LawParams& p) const {
        Vector u(dim());
        for (std::size_t j = 0; j < u.size(); ++j)
            u[j] = std::clamp(log_[j] ? std::log(p.values[j]) : p.values[j], lo_[j], hi_[j]);
        return u;
    }

    void clamp(Vector& u) const {
        for (std::size_t j = 0; j < u.size(); ++j) u[j] = std::clamp(u[j], lo_[j], hi_[j]);
    }

    // Objective at u; +inf if the law cannot be evaluated there.
    double objective(const Vector& u, Vector* residuals = nullptr) const {
        Vector r(obs_.size());
        try {
            const LawParams p = params(u);
            for (std::size_t i = 0; i < obs_.size(); ++i) r[i] = obs_[i].loss - evaluate(p, obs_[i].n, obs_[i].d);
        } catch (const std::exception&) {
            return kInf;
        }
        const double f = loss_objective(r, loss_);
        if (!std::isfinite(f)) return kInf;
        if (residuals) *residuals = std::move(r);
        return f;
    }

    // Weighted Jacobian and residuals so that ||rw + Jw du||^2 is the local model.
    bool weighted_system(const Vector& u, const Vector& r, Matrix& jw, Vector& rw) const {
        const LawParams p = params(u);
        const std::size_t m = obs_.size();
        jw = Matrix(m, dim());
        rw = Vector(m);
        try {
            for (std::size_t i = 0; i < m; ++i) {
                const Vector row = jacobian_row(p, obs_[i].n, obs_[i].d);
                double sw = 1.0;
                if (loss_.kind == LossSpec::Kind::Huber && std::abs(r[i]) > loss_.delta)
                    sw = std::sqrt(loss_.delta / std::abs(r[i]));
                for (std::size_t j = 0; j < dim(); ++j) {
                    const double chain = log_[j] ? p.values[j] : 1.0;
                    jw(i, j) = sw * row[j] * chain;
                    if (!std::isfinite(jw(i, j))) return false;
                }
                rw[i] = sw * r[i];
            }
        } catch (const std::exception&) {
            return false;
        }
        return true;
    }

private:
    std::vector<Observation> obs_;
    LawParams templ_;
    LossSpec loss_;
    std::vector<bool> log_;
    Vector lo_;
    Vector hi_;
};

struct Outcome {
    Vector u;
    double objective = kInf;
    bool converged = false;
    int iterations = 0;
};

Outcome levenberg_marquardt(const Problem& prob, Vector u, const FitConfig& cfg) {
    Outcome out;
    Vector r;
    double f = prob.objective(u, &r);
    if (!std::isfinite(f)) return {u, kInf, false, 0};
    const std::size_t p = prob.dim();
    double mu = -1.0;
    Matrix jw;
    Vector rw;
    int it = 0;
    bool converged = false;
    for (; it < cfg.max_iterations; ++it) {
        if (!prob.weighted_system(u, r, jw, rw)) break;
        const Vector g = transpose_times(jw, rw);
        // Coordinates pinned at a bound by an outward gradient are frozen for this step.
        std::vector<bool> frozen(p, false);
        Vector gp = g;
        for (std::size_t j = 0; j < p; ++j) {
            const bool at_lo = u[j] <= prob.lo()[j] && g[j] > 0.0;
            const bool at_hi = u[j] >= prob.hi()[j] && g[j] < 0.0;
            if (at_lo || at_hi) {
                frozen[j] = true;
                gp[j] = 0.0;
            }
        }
        if (norm_inf(gp) < cfg.gradient_tolerance * (1.0 + f)) {
            converged = true;
            break;
        }
        double tr = 0.0;
        for (std::size_t i = 0; i < jw.rows(); ++i)
            for (std::size_t j = 0; j < p; ++j) {
                if (frozen[j]) jw(i, j) = 0.0;
                tr += jw(i, j) * jw(i, j);
            }
        if (!(tr > 0.0)) break;
        if (mu < 0.0) mu = 1e-3 * tr / static_cast<double>(p);
        const double mu_floor = 1e-15 * tr / static_cast<double>(p);
        const double mu_ceiling = 1e16 * tr;
        Vector neg_r(rw.size());
        for (std::size_t i = 0; i < rw.size(); ++i) neg_r[i] = -rw[i];

        bool accepted = false;
        double step = 0.0;
        while (mu <= mu_ceiling) {
            auto delta = damped_least_squares(jw, neg_r, mu);
            if (delta) {
                Vector un = u;
                for (std::size_t j = 0; j < p; ++j)
                    if (!frozen[j]) un[j] += (*delta)[j];
                prob.clamp(un);
                Vector rn;
                const double fn = prob.objective(un, &rn);
                if (fn < f) {
                    Vector du(p);
                    for (std::size_t j = 0; j < p; ++j) du[j] = un[j] - u[j];
                    step = norm_inf(du) / (1.0 + norm_inf(u));
                    u = std::move(un);
                    r = std::move(rn);
                    f = fn;
                    mu = std::max(mu / 3.0, mu_floor);
                    accepted = true;
                    break;
                }
            }
            mu *= 3.0;
        }
        if (!accepted) break;
        if (step < cfg.step_tolerance) {
            converged = true;
            ++it;
            break;
        }
    }
    out.u = std::move(u);
    out.objective = f;
    out.converged = converged;
    out.iterations = it;
    return out;
}

Outcome run_restart(const Problem& prob, std::uint64_t base_seed, std::size_t r, const FitConfig& cfg) {
    try {
        std::mt19937_64 rng(mix(base_seed, r));
        Vector u0(prob.dim());
        for (std::size_t j = 0; j < u0.size(); ++j)
            u0[j] = prob.lo()[j] + (prob.hi()[j] - prob.lo()[j]) * uniform01(rng);
        return levenberg_marquardt(prob, std::move(u0), cfg);
    } catch (const std::exception&) {
        return {};
    }
}

Outcome polish(const Problem& prob, const Outcome& best, std::uint64_t base_seed, const FitConfig& cfg) {
    if (cfg.polish_iterations <= 0 || !std::isfinite(best.objective)) return best;
    std::mt19937_64 rng(mix(base_seed, 0x706f6c697368ULL));
    Vector u = best.u;
    double f = best.objective;
    bool moved = false;
    const std::size_t p = prob.dim();
    for (int it = 0; it < cfg.polish_iterations; ++it) {
        const std::size_t j = static_cast<std::size_t>(rng() % p);
        const double width = prob.hi()[j] - prob.lo()[j];
        Vector trial = u;
        trial[j] += cfg.polish_scale * width * standard_normal(rng);
        prob.clamp(trial);
        const double ft = prob.objective(trial);
        if (ft < f) {
            u = std::move(trial);
            f = ft;
            moved = true;
        }
    }
    if (!moved) return best;
    Outcome refined = levenberg_marquardt(prob, u, cfg);
    if (refined.objective < best.objective) {
        refined.iterations += best.iterations;
        return refined;
    }
    return best;
}

}  // namespace

std::string_view seed_protocol_name(SeedProtocol p) {
    switch (p) {
        case SeedProtocol::Stride1: return "stride1";
        case SeedProtocol::Stride137: return "stride137";
        case SeedProtocol::Affine: return "affine";
    }
    return "stride1";
}

std::optional<SeedProtocol> parse_seed_protocol(std::string_view s) {
    if (s == "stride1") return SeedProtocol::Stride1;
    if (s == "stride137") return SeedProtocol::Stride137;
    if (s == "affine") return SeedProtocol::Affine;
    return std::nullopt;
}

std::uint64_t protocol_seed(SeedProtocol p, std::uint64_t index) {
    switch (p) {
        case SeedProtocol::Stride1: return index;
        case SeedProtocol::Stride137: return 137 * index;
        case SeedProtocol::Affine: return 42 + 100003 * index;
    }
    return index;
}

LossSpec default_loss(LawKind kind) {
    return kind == LawKind::RepeatedData ? LossSpec::huber(0.5) : LossSpec::squared();
}

double loss_objective(const Vector& r, const LossSpec& loss) {
    double s = 0.0;
    if (loss.kind == LossSpec::Kind::SquaredError) {
        for (double x : r) s += x * x;
        return 0.5 * s;
    }
    for (double x : r) {
        const double a = std::abs(x);
        s += a <= loss.delta ? 0.5 * x * x : loss.delta * (a - 0.5 * loss.delta);
    }
    return s;
}

void FitConfig::validate() const {
    if (restarts < 1) throw DomainError("restarts must be at least 1");
    if (max_iterations < 1) throw DomainError("max_iterations must be positive");
    if (!(gradient_tolerance > 0.0) || !(step_tolerance > 0.0)) throw DomainError("tolerances must be positive");
    if (loss && loss->kind == LossSpec::Kind::Huber && !(loss->delta > 0.0))
        throw DomainError("Huber delta must be positive");
    if (polish_iterations < 0 || !(polish_scale >= 0.0)) throw DomainError("invalid polish settings");
}

Vector gauss_newton_step(const Matrix& j, const Vector& r, double mu) {
    if (!(mu >= 0.0)) throw DomainError("damping must be nonnegative");
    if (j.rows() != r.size()) throw DomainError("jacobian and residual sizes differ");
    const std::size_t p = j.cols();
    if (norm_inf(r) == 0.0) return Vector(p, 0.0);
    double tr = 0.0;
    for (double x : j.data()) tr += x * x;
    if (!(tr > 0.0)) throw SingularSystemError("jacobian is identically zero");
    Vector neg_r(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) neg_r[i] = -r[i];
    const double ceiling = 1e8 * tr;
    double m = mu;
    for (;;) {
        if (auto x = damped_least_squares(j, neg_r, m)) return *x;
        m = m == 0.0 ? 1e-12 * tr / static_cast<double>(p) : 10.0 * m;
        if (m > ceiling) throw SingularSystemError("damped normal equations remain rank deficient");
    }
}

FitResult result_at(const ExperimentDataset& ds, const LawParams& params, const LossSpec& loss) {
    std::vector<Observation> train;
    for (const auto& o : ds.observations())
        if (o.split == Split::Train) train.push_back(o);
    if (train.empty()) throw EmptyTrainError("dataset has no training observations");
    FitResult res;
    res.params = params;
    res.loss = loss;
    res.residuals.resize(train.size());
    res.jacobian = Matrix(train.size(), params.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        res.residuals[i] = train[i].loss - evaluate(params, train[i].n, train[i].d);
        res.jacobian.set_row(i, jacobian_row(params, train[i].n, train[i].d));
    }
    res.objective = loss_objective(res.residuals, loss);
    return res;
}

FitResult fit(const ExperimentDataset& ds, LawKind kind, const FitConfig& cfg) {
    cfg.validate();
    std::vector<Observation> train;
    for (const auto& o : ds.observations())
        if (o.split == Split::Train) train.push_back(o);
    const std::size_t p = parameter_count(kind);
    if (train.size() < p) throw DomainError("fewer training observations than parameters");

    double min_loss = kInf;
    for (const auto& o : train) min_loss = std::min(min_loss, o.loss);
    Bounds b = cfg.bounds ? *cfg.bounds : default_bounds(kind, min_loss);
    if (b.lower.size() != p || b.upper.size() != p) throw DomainError("bounds length does not match law");
    LawParams templ{kind, b.lower, b.lower, b.upper, cfg.repetition};
    const LossSpec loss = cfg.loss.value_or(default_loss(kind));
    const Problem prob(train, templ, loss);
    const std::uint64_t base = protocol_seed(cfg.seed_protocol, cfg.seed_index);

    const auto restarts = static_cast<std::size_t>(cfg.restarts);
    std::vector<Outcome> outcomes(restarts);
    if (cfg.execution == Execution::Parallel && !omp_in_parallel()) {
#pragma omp parallel for schedule(dynamic, 1)
        for (std::size_t r = 0; r < restarts; ++r) outcomes[r] = run_restart(prob, base, r, cfg);
    } else {
        for (std::size_t r = 0; r < restarts; ++r) outcomes[r] = run_restart(prob, base, r, cfg);
    }

    std::size_t best = 0;
    for (std::size_t r = 1; r < restarts; ++r)
        if (outcomes[r].objective < outcomes[best].objective) best = r;
    if (!std::isfinite(outcomes[best].objective))
        throw DomainError("no restart produced a finite objective");

    const Outcome final = polish(prob, outcomes[best], base, cfg);
    FitResult res = result_at(ds, prob.params(final.u), loss);
    res.restart_index = best;
    res.converged = final.converged;
    res.iterations = final.iterations;
    res.seed = base;
    return res;
}

FitResult profile_reduced_fit(const ExperimentDataset& ds, const FitConfig& cfg) {
    const ExperimentDataset train = ds.train();
    if (!train.is_collinear() || train.distinct_ratios().size() != 1)
        throw NotSingleRayError("reduced fit requires a single-ray collinear training set");
    if (train.distinct_sizes().size() < 2)
        throw NotSingleRayError("reduced fit requires at least two distinct model sizes");
    return fit(ds, LawKind::ReducedChinchilla, cfg);
}

}  // namespace tppfit
