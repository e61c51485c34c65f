#include "tppfit/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <tuple>

#include "tppfit/conditioning.hpp"
#include "tppfit/dataset.hpp"
#include "tppfit/errors.hpp"

namespace tppfit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <class T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
        std::swap(v[i - 1], v[std::min(j, i - 1)]);
    }
}

double chinchilla_pair_kappa(const std::vector<PlannedRun>& runs, const LawParams& prior) {
    Matrix j(runs.size(), prior.size());
    for (std::size_t r = 0; r < runs.size(); ++r) j.set_row(r, jacobian_row(prior, runs[r].n, runs[r].d));
    const Matrix g = gram_matrix(j);
    return kappa_2x2(g(0, 0), g(0, 1), g(1, 1));
}

}  // namespace

DiversityReport diversity_check(const std::vector<double>& ratios, double beta_eff, double kappa_target) {
    if (ratios.empty()) throw DomainError("diversity check needs at least one ratio");
    if (!(beta_eff > 0.0) || !(kappa_target > 0.0)) throw DomainError("beta_eff and kappa_target must be positive");
    DiversityReport rep;
    rep.k_count = ratios.size();
    rep.beta_eff = beta_eff;
    rep.kappa_target = kappa_target;
    const double k = static_cast<double>(ratios.size());
    Vector x(ratios.size());
    for (std::size_t l = 0; l < ratios.size(); ++l) {
        if (!(ratios[l] > 0.0)) throw DomainError("ratios must be positive");
        x[l] = safe_pow(ratios[l], -beta_eff);
        rep.s1 += x[l];
        rep.s2 += x[l] * x[l];
    }
    double mean = rep.s1 / k;
    double var = 0.0;
    for (double xi : x) var += (xi - mean) * (xi - mean);
    rep.v_k = std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); }) ? 0.0 : var / k;
    const double lead = (k + rep.s2) * (k + rep.s2) / (k * k);
    rep.tau_k = lead / kappa_target;
    rep.passes = rep.v_k >= rep.tau_k;
    rep.predicted_kappa = rep.v_k > 0.0 ? lead / rep.v_k : kInf;
    return rep;
}

double two_ray_variance(double k1, double k2, double beta_eff) {
    const double r = k2 / k1;
    const double f = 1.0 - safe_pow(r, -beta_eff);
    return 0.25 * safe_pow(k1, -2.0 * beta_eff) * f * f;
}

double default_kappa_one(double epsilon, double c) {
    if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
    return c / (epsilon * epsilon);
}

RMinResult r_min(double epsilon, double kappa_one, double kappa_target, double beta_eff, bool conservative) {
    if (!(epsilon > 0.0) || !(kappa_one > 0.0) || !(kappa_target > 0.0) || !(beta_eff > 0.0))
        throw DomainError("r_min inputs must be positive");
    RMinResult out;
    out.radicand = epsilon * std::sqrt(kappa_one / kappa_target);
    if (out.radicand >= 1.0) {
        out.feasible = false;
        out.value = kInf;
        out.note =
            "kappa_target is unachievable with two rays on this single-ray baseline; widen the model-size grid "
            "to reduce kappa_one, or use K >= 3 with extra rays placed near the endpoints";
        return out;
    }
    out.feasible = true;
    out.value = std::pow(1.0 - out.radicand, -1.0 / beta_eff);
    if (conservative) {
        out.value *= kConservativeMargin;
        out.note = "conservative margin x1.35 applied";
    }
    return out;
}

DesignPlan plan_design(int budget, std::pair<double, double> k_range, std::pair<double, double> n_range, int k_count,
                       double kappa_target, const DesignPriors& priors) {
    const auto [k_lo, k_hi] = k_range;
    const auto [n_lo, n_hi] = n_range;
    if (k_count < 2) throw DomainError("plan_design needs K >= 2");
    if (budget < 2 * k_count) throw DomainError("budget must be at least 2K");
    if (!(k_lo > 0.0) || !(k_hi >= k_lo)) throw DomainError("k range must satisfy 0 < k_lo <= k_hi");
    if (!(n_lo > 0.0) || !(n_hi >= n_lo)) throw DomainError("N range must satisfy 0 < N_lo <= N_hi");
    if (!(priors.epsilon > 0.0) || !(priors.beta_eff > 0.0)) throw DomainError("priors must be positive");

    const DiversityReport endpoints = diversity_check({k_lo, k_hi}, priors.beta_eff, kappa_target);
    if (!endpoints.passes)
        throw InfeasibleDesignError("even the endpoint-only design fails the diversity check (V_2 < tau_2)");

    DesignPlan plan;
    plan.budget = budget;
    plan.kappa_target = kappa_target;
    plan.priors = priors;
    plan.spread = k_hi / k_lo;
    const auto kk = static_cast<std::size_t>(k_count);
    for (std::size_t j = 0; j < kk; ++j)
        plan.ratios.push_back(k_lo * std::pow(plan.spread, static_cast<double>(j) / static_cast<double>(kk - 1)));
    plan.ratios.front() = k_lo;
    plan.ratios.back() = k_hi;

    plan.allocation.assign(kk, budget / k_count);
    int remainder = budget % k_count;
    for (std::size_t step = 0; remainder > 0; ++step, --remainder) {
        const std::size_t idx = step % 2 == 0 ? step / 2 : kk - 1 - step / 2;
        ++plan.allocation[idx];
    }

    std::set<double> all_sizes;
    for (std::size_t j = 0; j < kk; ++j) {
        const auto sizes = log_space(n_lo, n_hi, static_cast<std::size_t>(plan.allocation[j]));
        for (double n : sizes) {
            plan.runs.push_back({n, plan.ratios[j] * n, plan.ratios[j]});
            all_sizes.insert(n);
        }
    }
    plan.sizes.assign(all_sizes.begin(), all_sizes.end());

    plan.diversity = diversity_check(plan.ratios, priors.beta_eff, kappa_target);
    plan.predicted_kappa = plan.diversity.predicted_kappa;

    const double alpha = priors.beta_eff + priors.epsilon;
    const LawParams prior = LawParams::make(LawKind::Chinchilla, {priors.a, priors.b, priors.e, alpha, priors.beta_eff});
    plan.expected_kappa_scale_pair = chinchilla_pair_kappa(plan.runs, prior);

    if (priors.kappa_one) {
        plan.kappa_one = *priors.kappa_one;
    } else {
        std::vector<PlannedRun> single;
        for (double n : log_space(n_lo, n_hi, static_cast<std::size_t>(budget))) single.push_back({n, k_lo * n, k_lo});
        plan.kappa_one = chinchilla_pair_kappa(single, prior);
    }
    plan.r_min = r_min(priors.epsilon, plan.kappa_one, kappa_target, priors.beta_eff, priors.uncertain);
    plan.feasible = plan.r_min.feasible;
    return plan;
}

std::string_view regime_name(Regime r) { return r == Regime::A ? "A" : "B"; }

Regime classify_regime(const std::vector<double>& ratios, double beta_eff, double kappa_target) {
    const DiversityReport rep = diversity_check(ratios, beta_eff, kappa_target);
    return rep.v_k < rep.tau_k ? Regime::A : Regime::B;
}

long tpp_bin(double ratio) {
    if (!(ratio > 0.0)) throw DomainError("TPP ratio must be positive");
    return std::lround(4.0 * std::log2(ratio));
}

std::vector<GridCell> bounding_box_nc(const std::vector<double>& grid_sizes, const std::vector<double>& grid_tokens,
                                      std::size_t target_count, const std::vector<double>& target_ratios,
                                      std::uint64_t seed) {
    const std::size_t mn = grid_sizes.size();
    const std::size_t md = grid_tokens.size();
    if (target_count > mn * md) throw InsufficientGridError("grid has fewer cells than the target count");
    if (target_count == 0) return {};

    std::mt19937_64 rng(seed);
    std::set<long> target_bins;
    for (double k : target_ratios) target_bins.insert(tpp_bin(k));
    std::set<long> covered;
    std::vector<GridCell> selected;
    auto bin_of = [&](const GridCell& c) { return tpp_bin(grid_tokens[c.j] / grid_sizes[c.i]); };

    auto take = [&](const std::vector<GridCell>& cells) {
        for (const auto& c : cells) {
            selected.push_back(c);
            covered.insert(bin_of(c));
        }
    };
    auto priority_take = [&](const std::vector<GridCell>& ring, std::size_t r) {
        std::vector<GridCell> a, b, c;
        for (const auto& cell : ring) {
            const long bin = bin_of(cell);
            if (covered.count(bin))
                c.push_back(cell);
            else if (target_bins.count(bin))
                a.push_back(cell);
            else
                b.push_back(cell);
        }
        seeded_shuffle(a, rng);
        seeded_shuffle(b, rng);
        seeded_shuffle(c, rng);
        std::vector<GridCell> order = a;
        order.insert(order.end(), b.begin(), b.end());
        order.insert(order.end(), c.begin(), c.end());
        order.resize(r);
        take(order);
    };

    auto initial = [&](std::size_t m) -> std::pair<std::size_t, std::size_t> {
        const std::size_t offset = rng() & 1U;
        if (m == 1) return {0, 0};
        std::size_t lo = m / 2 + offset >= 1 ? m / 2 + offset - 1 : 0;
        lo = std::min(lo, m - 2);
        return {lo, lo + 1};
    };
    auto [ilo, ihi] = initial(mn);
    auto [jlo, jhi] = initial(md);

    std::vector<GridCell> box;
    for (std::size_t i = ilo; i <= ihi; ++i)
        for (std::size_t j = jlo; j <= jhi; ++j) box.push_back({i, j});
    if (box.size() > target_count) {
        priority_take(box, target_count);
    } else {
        take(box);
        while (selected.size() < target_count) {
            struct Candidate {
                bool rows;
                std::vector<GridCell> ring;
                std::tuple<std::size_t, std::size_t, double> score;
            };
            std::vector<Candidate> cands;
            auto ring_score = [&](const std::vector<GridCell>& ring) {
                std::set<long> t, nt;
                for (const auto& c : ring) {
                    const long bin = bin_of(c);
                    if (covered.count(bin)) continue;
                    (target_bins.count(bin) ? t : nt).insert(bin);
                }
                return std::make_tuple(t.size(), nt.size(), uniform01(rng));
            };
            if (ilo > 0 || ihi + 1 < mn) {
                std::vector<GridCell> ring;
                for (std::size_t j = jlo; j <= jhi; ++j) {
                    if (ilo > 0) ring.push_back({ilo - 1, j});
                    if (ihi + 1 < mn) ring.push_back({ihi + 1, j});
                }
                cands.push_back({true, ring, ring_score(ring)});
            }
            if (jlo > 0 || jhi + 1 < md) {
                std::vector<GridCell> ring;
                for (std::size_t i = ilo; i <= ihi; ++i) {
                    if (jlo > 0) ring.push_back({i, jlo - 1});
                    if (jhi + 1 < md) ring.push_back({i, jhi + 1});
                }
                cands.push_back({false, ring, ring_score(ring)});
            }
            if (cands.empty()) break;
            const Candidate* best = &cands.front();
            for (const auto& c : cands)
                if (c.score > best->score) best = &c;
            const std::size_t remaining = target_count - selected.size();
            if (best->rows) {
                if (ilo > 0) --ilo;
                if (ihi + 1 < mn) ++ihi;
            } else {
                if (jlo > 0) --jlo;
                if (jhi + 1 < md) ++jhi;
            }
            if (best->ring.size() <= remaining) {
                take(best->ring);
            } else {
                priority_take(best->ring, remaining);
                break;
            }
        }
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

}  // namespace tppfit
