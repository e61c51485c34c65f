#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tppfit/laws.hpp"

namespace tppfit {

struct DiversityReport {
    std::size_t k_count = 0;
    double v_k = 0.0;
    double tau_k = 0.0;
    double s1 = 0.0;  // sum k^-beta
    double s2 = 0.0;  // sum k^-2beta
    bool passes = false;
    double beta_eff = 0.0;
    double kappa_target = 0.0;
    double predicted_kappa = 0.0;  // (K + S2)^2 / (K^2 V_K); +inf when V_K = 0
};

DiversityReport diversity_check(const std::vector<double>& ratios, double beta_eff, double kappa_target);

// 1/4 k1^(-2 beta) (1 - R^-beta)^2 with R = k2 / k1.
double two_ray_variance(double k1, double k2, double beta_eff);

inline constexpr double kDefaultKappaOneConstant = 20.0;
inline constexpr double kConservativeMargin = 1.35;

struct RMinResult {
    bool feasible = false;
    double value = 0.0;     // minimum spread; +inf when infeasible
    double radicand = 0.0;  // epsilon sqrt(kappa_one / kappa_target)
    std::string note;
};

RMinResult r_min(double epsilon, double kappa_one, double kappa_target, double beta_eff, bool conservative = false);

// c / epsilon^2 baseline for the single-ray condition number.
double default_kappa_one(double epsilon, double c = kDefaultKappaOneConstant);

struct DesignPriors {
    double epsilon = 0.06;
    double beta_eff = 0.28;
    double a = 406.4;
    double b = 410.7;
    double e = 1.69;
    std::optional<double> kappa_one;  // measured on the k_lo ray when empty
    bool uncertain = false;           // apply the conservative margin to R_min
};

struct PlannedRun {
    double n;
    double d;
    double ratio;
};

struct DesignPlan {
    std::vector<double> ratios;
    std::vector<double> sizes;  // union of per-ray size grids
    std::vector<int> allocation;
    std::vector<PlannedRun> runs;
    RMinResult r_min;
    double spread = 1.0;  // k_hi / k_lo
    bool feasible = false;
    double predicted_kappa = 0.0;
    double expected_kappa_scale_pair = 0.0;  // from the expected Jacobian at the priors
    double kappa_one = 0.0;
    DiversityReport diversity;
    double kappa_target = 0.0;
    DesignPriors priors;
    int budget = 0;
};

DesignPlan plan_design(int budget, std::pair<double, double> k_range, std::pair<double, double> n_range, int k_count,
                       double kappa_target, const DesignPriors& priors);

enum class Regime { A, B };
std::string_view regime_name(Regime r);
Regime classify_regime(const std::vector<double>& ratios, double beta_eff, double kappa_target);

struct GridCell {
    std::size_t i;  // size index
    std::size_t j;  // token index
    bool operator==(const GridCell&) const = default;
    auto operator<=>(const GridCell&) const = default;
};

// Quarter-octave bin of a TPP ratio.
long tpp_bin(double ratio);

std::vector<GridCell> bounding_box_nc(const std::vector<double>& grid_sizes, const std::vector<double>& grid_tokens,
                                      std::size_t target_count, const std::vector<double>& target_ratios,
                                      std::uint64_t seed);

}  // namespace tppfit
