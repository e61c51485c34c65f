#include "tppfit/evaluation.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>

#include "tppfit/conditioning.hpp"
#include "tppfit/errors.hpp"

namespace tppfit {

namespace {

std::uint64_t hash_pair(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a * 0x9e3779b97f4a7c15ULL ^ (b + 0x632be59bd9b4e019ULL);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::string_view selector_name(SplitSelector s) {
    switch (s) {
        case SplitSelector::Train: return "train";
        case SplitSelector::HoldoutCollinear: return "holdout_co";
        case SplitSelector::HoldoutNonCollinear: return "holdout_nc";
        case SplitSelector::UnifiedHoldout: return "holdout";
        case SplitSelector::All: return "all";
    }
    return "all";
}

bool selects(SplitSelector s, Split split) {
    switch (s) {
        case SplitSelector::Train: return split == Split::Train;
        case SplitSelector::HoldoutCollinear: return split == Split::HoldoutCollinear;
        case SplitSelector::HoldoutNonCollinear: return split == Split::HoldoutNonCollinear;
        case SplitSelector::UnifiedHoldout: return split != Split::Train;
        case SplitSelector::All: return true;
    }
    return false;
}

double rmse_of(const std::vector<double>& observed, const std::vector<double>& predicted) {
    if (observed.size() != predicted.size() || observed.empty()) throw DomainError("rmse_of: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = observed[i] - predicted[i];
        s += e * e;
    }
    return std::sqrt(s / static_cast<double>(observed.size()));
}

HoldoutMetrics holdout_metrics(const LawParams& params, const ExperimentDataset& ds, SplitSelector selector) {
    std::vector<double> obs, pred;
    for (const auto& o : ds.observations())
        if (selects(selector, o.split)) {
            obs.push_back(o.loss);
            pred.push_back(evaluate(params, o.n, o.d));
        }
    if (obs.empty()) throw EmptySplitError("selected split is empty");
    HoldoutMetrics m;
    m.split = selector;
    m.count = obs.size();
    m.rmse = rmse_of(obs, pred);
    double mean = 0.0;
    for (double x : obs) mean += x;
    mean /= static_cast<double>(obs.size());
    double var = 0.0;
    for (double x : obs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(obs.size());
    if (var > 0.0) m.r2 = 1.0 - m.rmse * m.rmse / var;
    return m;
}

HoldoutMetrics holdout_metrics(const FitResult& fit, const ExperimentDataset& ds, SplitSelector selector) {
    return holdout_metrics(fit.params, ds, selector);
}

ComparisonRecord compare(double rmse_co, double rmse_nc) {
    ComparisonRecord r;
    r.rmse_co = rmse_co;
    r.rmse_nc = rmse_nc;
    r.nc_wins = rmse_nc < rmse_co;
    return r;
}

WinRate wilson_interval(std::size_t wins, std::size_t total, double z) {
    if (total == 0) throw DomainError("win rate needs at least one record");
    WinRate w;
    w.wins = wins;
    w.total = total;
    const double n = static_cast<double>(total);
    const double p = static_cast<double>(wins) / n;
    w.fraction = p;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    w.lower = std::max(0.0, centre - half);
    w.upper = std::min(1.0, centre + half);
    return w;
}

WinRate win_rate(const std::vector<ComparisonRecord>& records) {
    std::size_t wins = 0;
    for (const auto& r : records) wins += r.nc_wins ? 1 : 0;
    return wilson_interval(wins, records.size());
}

SweepResult regime_a_sweep(const LawParams& truth, const std::vector<double>& ratio_pool,
                           const ExperimentDataset& holdout, const std::vector<double>& kappa_targets,
                           const std::vector<std::uint64_t>& seeds, const FitConfig& config,
                           const SweepDesign& design) {
    if (ratio_pool.empty()) throw DomainError("ratio pool is empty");
    if (ratio_pool.size() > 12) throw PoolTooLargeError("ratio pool is limited to 12 ratios");
    if (seeds.empty() || kappa_targets.empty()) throw DomainError("sweep needs seeds and kappa targets");
    if (holdout.empty()) throw EmptySplitError("holdout is empty");
    std::vector<double> pool = ratio_pool;
    std::sort(pool.begin(), pool.end());

    const std::uint32_t total_masks = (1U << pool.size()) - 1U;
    std::vector<std::uint32_t> masks;
    for (std::uint32_t m = 1; m <= total_masks; ++m) masks.push_back(m);
    if (design.max_subsets && *design.max_subsets < masks.size()) {
        std::vector<std::uint32_t> picked;
        const std::size_t keep = *design.max_subsets;
        for (std::size_t i = 0; i < keep; ++i) picked.push_back(masks[i * masks.size() / keep]);
        masks = std::move(picked);
    }

    struct SeedData {
        ExperimentDataset co;
        ExperimentDataset nc;
    };
    std::vector<SeedData> data;
    for (auto s : seeds)
        data.push_back({generate_collinear(truth, design.sizes, pool, {design.sigma, 2 * s}),
                        generate_grid(truth, design.nc_sizes, design.nc_tokens, {design.sigma, 2 * s + 1})});

    FitConfig inner = config;
    inner.execution = Execution::Serial;
    const std::size_t tasks = seeds.size() * masks.size();
    std::vector<ComparisonRecord> records(tasks);
    std::vector<std::exception_ptr> errors(tasks);

    auto run = [&](std::size_t t) {
        try {
            const std::size_t si = t / masks.size();
            const std::uint32_t mask = masks[t % masks.size()];
            std::vector<double> subset;
            for (std::size_t b = 0; b < pool.size(); ++b)
                if (mask & (1U << b)) subset.push_back(pool[b]);
            std::vector<Observation> co;
            for (const auto& o : data[si].co.observations())
                for (double k : subset)
                    if (o.ray && *o.ray == k) co.push_back(o);
            const auto cells = bounding_box_nc(design.nc_sizes, design.nc_tokens, co.size(), subset,
                                               hash_pair(seeds[si], mask));
            std::vector<Observation> nc;
            for (const auto& c : cells) nc.push_back(data[si].nc[c.i * design.nc_tokens.size() + c.j]);
            const FitResult fco = fit(ExperimentDataset(co), truth.kind, inner);
            const FitResult fnc = fit(ExperimentDataset(nc), truth.kind, inner);
            ComparisonRecord rec = compare(holdout_metrics(fco, holdout, SplitSelector::All).rmse,
                                           holdout_metrics(fnc, holdout, SplitSelector::All).rmse);
            rec.subset = subset;
            rec.seed = seeds[si];
            for (double kt : kappa_targets) rec.regimes.push_back(classify_regime(subset, design.beta_eff, kt));
            records[t] = std::move(rec);
        } catch (...) {
            errors[t] = std::current_exception();
        }
    };

    if (config.execution == Execution::Parallel && !omp_in_parallel()) {
#pragma omp parallel for schedule(dynamic, 1)
        for (std::size_t t = 0; t < tasks; ++t) run(t);
    } else {
        for (std::size_t t = 0; t < tasks; ++t) run(t);
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    SweepResult out;
    out.records = std::move(records);
    out.kappa_targets = kappa_targets;
    out.overall = win_rate(out.records);
    for (std::size_t q = 0; q < kappa_targets.size(); ++q) {
        std::size_t wins = 0, total = 0;
        for (const auto& r : out.records)
            if (r.regimes[q] == Regime::A) {
                ++total;
                wins += r.nc_wins ? 1 : 0;
            }
        out.regime_a.push_back(total ? wilson_interval(wins, total) : WinRate{});
    }
    return out;
}

SyntheticSweep synthetic_sweep(const LawParams& truth, const std::vector<double>& ratio_pool,
                               const std::vector<double>& sizes, double sigma_fraction) {
    if (ratio_pool.empty() || sizes.size() < 2) throw DomainError("synthetic sweep needs ratios and two sizes");
    if (!(sigma_fraction >= 0.0)) throw DomainError("sigma fraction must be nonnegative");
    const auto [klo, khi] = std::minmax_element(ratio_pool.begin(), ratio_pool.end());
    const auto [nlo, nhi] = std::minmax_element(sizes.begin(), sizes.end());
    const std::size_t cells = sizes.size() * ratio_pool.size();
    const std::size_t cols = std::max<std::size_t>(ratio_pool.size(), 3);
    const std::size_t rows = std::max<std::size_t>((cells + cols - 1) / cols, 3);

    SyntheticSweep out;
    auto& d = out.design;
    d.sizes = sizes;
    std::sort(d.sizes.begin(), d.sizes.end());
    d.nc_sizes = log_space(*nlo, *nhi, rows);
    d.nc_tokens = log_space(*klo * *nlo, *khi * *nhi, cols);
    d.beta_eff = truth.kind == LawKind::Chinchilla ? truth[4] : 0.28;
    const double nm = std::sqrt(*nlo * *nhi);
    const double dm = std::sqrt(d.nc_tokens.front() * d.nc_tokens.back());
    d.sigma = sigma_fraction * (evaluate(truth, nm, dm) - evaluate(truth, 1e300, 1e300));

    std::vector<Observation> h;
    for (double f : {1.2, 1.24, 1.3, 1.34, 1.4})
        for (double n : d.sizes) {
            const double k = *khi * f;
            h.push_back({n, k * n, evaluate(truth, n, k * n), Split::HoldoutCollinear, k});
        }
    for (double n : d.nc_sizes)
        for (double f : {1.09, 1.27, 1.45}) {
            const double t = f * d.nc_tokens.back();
            h.push_back({n, t, evaluate(truth, n, t), Split::HoldoutNonCollinear, std::nullopt});
        }
    out.holdout = ExperimentDataset(h);
    return out;
}

std::vector<IsoFlopCurve> isoflop_curves(const LawParams& params, const ExperimentDataset& holdout,
                                         std::size_t samples) {
    if (holdout.empty()) throw EmptySplitError("holdout is empty");
    if (samples == 0) throw DomainError("samples_per_curve must be positive");
    const auto sizes = holdout.distinct_sizes();
    const auto grid = log_space(sizes.front(), sizes.back(), samples);
    std::vector<IsoFlopCurve> curves;
    curves.reserve(holdout.size());
    for (const auto& o : holdout.observations()) {
        IsoFlopCurve c;
        c.anchor = o;
        c.compute = 6.0 * o.n * o.d;
        std::vector<double> ns = grid;
        ns.push_back(o.n);
        std::sort(ns.begin(), ns.end());
        ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
        for (std::size_t i = 0; i < ns.size(); ++i) {
            const double n = ns[i];
            if (n == o.n) {
                c.anchor_index = i;
                c.points.push_back({n, evaluate(params, o.n, o.d)});
            } else {
                c.points.push_back({n, evaluate(params, n, c.compute / (6.0 * n))});
            }
        }
        curves.push_back(std::move(c));
    }
    return curves;
}

std::vector<IsoFlopCurve> isoflop_curves(const FitResult& fit, const ExperimentDataset& holdout, std::size_t samples) {
    return isoflop_curves(fit.params, holdout, samples);
}

double rmse_from_curves(const std::vector<IsoFlopCurve>& curves) {
    std::vector<double> obs, pred;
    for (const auto& c : curves) {
        obs.push_back(c.anchor.loss);
        pred.push_back(c.points[c.anchor_index].loss);
    }
    return rmse_of(obs, pred);
}

MsePrediction analytic_mse_prediction(const ExperimentDataset& train_design, const ExperimentDataset& holdout,
                                      const LawParams& truth, double sigma) {
    if (truth.kind != LawKind::Chinchilla) throw UnsupportedVariantError("analytic MSE is defined for Chinchilla");
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    if (holdout.empty()) throw EmptySplitError("holdout is empty");
    ExperimentDataset train = train_design.train();
    if (train.empty()) throw EmptyTrainError("train design is empty");
    const auto ratios = train.distinct_ratios();
    if (!train.is_collinear() || ratios.size() != 1)
        throw UnsupportedVariantError("analytic MSE prediction is single-ray only");
    const double k = ratios.front();
    const double alpha = truth[3];
    const double beta = truth[4];

    std::vector<double> sizes;
    Matrix j(train.size(), 2);
    for (std::size_t i = 0; i < train.size(); ++i) {
        sizes.push_back(train[i].n);
        j(i, 0) = safe_pow(train[i].n, -alpha);
        j(i, 1) = safe_pow(train[i].d, -beta);
    }
    const PowerSumProfile ps = power_sums(sizes, alpha);
    MsePrediction out;
    out.epsilon = std::abs(alpha - beta);
    out.leverage = sloppy_leverage(holdout, k, alpha, beta, ps.phi2);
    const double s2 = sigma * sigma;
    out.sloppy = out.leverage == 0.0 ? 0.0 : s2 * out.leverage / (out.epsilon * out.epsilon * ps.logn_variance);

    const Matrix g = gram_matrix(j);
    const auto eig = eigendecompose_small(g);
    const auto inv = spd_inverse(g);
    double stiff = 0.0, exact = 0.0;
    for (const auto& o : holdout.observations()) {
        const Vector jh{safe_pow(o.n, -alpha), safe_pow(o.d, -beta)};
        const double proj = jh[0] * eig.vectors(0, 1) + jh[1] * eig.vectors(1, 1);
        stiff += proj * proj / eig.values[1];
        if (inv) exact += jh[0] * ((*inv)(0, 0) * jh[0] + (*inv)(0, 1) * jh[1]) +
                          jh[1] * ((*inv)(1, 0) * jh[0] + (*inv)(1, 1) * jh[1]);
    }
    const double h = static_cast<double>(holdout.size());
    out.stiff = s2 * stiff / h;
    out.exact_linear = inv ? s2 * exact / h : std::numeric_limits<double>::infinity();
    out.total = out.sloppy + out.stiff;
    return out;
}

double misspecified_mse_ratio(double mse_co, double mse_nc, double bias_squared) {
    if (!(bias_squared >= 0.0) || !(mse_nc + bias_squared > 0.0)) throw DomainError("invalid MSE ratio inputs");
    return (mse_co + bias_squared) / (mse_nc + bias_squared);
}

}  // namespace tppfit
