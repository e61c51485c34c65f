#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "tppfit/dataset.hpp"
#include "tppfit/fitter.hpp"
#include "tppfit/laws.hpp"
#include "tppfit/planner.hpp"

namespace tppfit {

enum class SplitSelector { Train, HoldoutCollinear, HoldoutNonCollinear, UnifiedHoldout, All };

std::string_view selector_name(SplitSelector s);
bool selects(SplitSelector s, Split split);

struct HoldoutMetrics {
    SplitSelector split = SplitSelector::UnifiedHoldout;
    std::size_t count = 0;
    double rmse = 0.0;
    std::optional<double> r2;  // empty when the split has zero variance
};

// Shared by direct and curve-based paths so both produce identical bits.
double rmse_of(const std::vector<double>& observed, const std::vector<double>& predicted);

HoldoutMetrics holdout_metrics(const LawParams& params, const ExperimentDataset& ds, SplitSelector selector);
HoldoutMetrics holdout_metrics(const FitResult& fit, const ExperimentDataset& ds, SplitSelector selector);

struct ComparisonRecord {
    double rmse_co = 0.0;
    double rmse_nc = 0.0;
    bool nc_wins = false;  // strict; ties go to CO
    std::vector<double> subset;
    std::uint64_t seed = 0;
    std::vector<Regime> regimes;  // one tag per kappa target
};

ComparisonRecord compare(double rmse_co, double rmse_nc);

struct WinRate {
    std::size_t wins = 0;
    std::size_t total = 0;
    double fraction = 0.0;
    double lower = 0.0;  // Wilson 95%
    double upper = 0.0;
    bool excludes_half() const { return lower > 0.5 || upper < 0.5; }
};

WinRate wilson_interval(std::size_t wins, std::size_t total, double z = 1.96);
WinRate win_rate(const std::vector<ComparisonRecord>& records);

struct SweepDesign {
    std::vector<double> sizes;       // CO pool model sizes
    std::vector<double> nc_sizes;    // NC grid rows
    std::vector<double> nc_tokens;   // NC grid columns
    double sigma = 0.0;
    double beta_eff = 0.28;
    std::optional<std::size_t> max_subsets;
};

struct SweepResult {
    std::vector<ComparisonRecord> records;  // ordered by (seed, subset mask)
    std::vector<double> kappa_targets;
    std::vector<WinRate> regime_a;  // per kappa target
    WinRate overall;
};

SweepResult regime_a_sweep(const LawParams& truth, const std::vector<double>& ratio_pool,
                           const ExperimentDataset& holdout, const std::vector<double>& kappa_targets,
                           const std::vector<std::uint64_t>& seeds, const FitConfig& config,
                           const SweepDesign& design);

// Synthetic CO/NC pairing: the NC grid holds the CO pool's cardinality over the pool's (N, D)
// rectangle with at least three levels per axis; sigma is a fraction of the reducible loss at the
// rectangle's geometric centre; the unified holdout takes rays just past the fan plus tokens past the grid.
struct SyntheticSweep {
    SweepDesign design;
    ExperimentDataset holdout;
};

SyntheticSweep synthetic_sweep(const LawParams& truth, const std::vector<double>& ratio_pool,
                               const std::vector<double>& sizes, double sigma_fraction = 0.01);

struct IsoFlopPoint {
    double n;
    double loss;
};

struct IsoFlopCurve {
    double compute = 0.0;
    Observation anchor;
    std::vector<IsoFlopPoint> points;  // ascending n; includes the anchor size
    std::size_t anchor_index = 0;
};

std::vector<IsoFlopCurve> isoflop_curves(const FitResult& fit, const ExperimentDataset& holdout,
                                         std::size_t samples_per_curve);
std::vector<IsoFlopCurve> isoflop_curves(const LawParams& params, const ExperimentDataset& holdout,
                                         std::size_t samples_per_curve);
double rmse_from_curves(const std::vector<IsoFlopCurve>& curves);

struct MsePrediction {
    double sloppy = 0.0;
    double stiff = 0.0;
    double total = 0.0;
    double exact_linear = 0.0;  // sigma^2 mean_h j_h^T G^-1 j_h on the same block
    double leverage = 0.0;
    double epsilon = 0.0;
};

// Single-ray CO prediction on the (A, B) block with exponents and E at truth.
MsePrediction analytic_mse_prediction(const ExperimentDataset& train_design, const ExperimentDataset& holdout,
                                      const LawParams& truth, double sigma);

// (co + b2) / (nc + b2): a shared model-form bias floor pulls the ratio toward 1.
double misspecified_mse_ratio(double mse_co, double mse_nc, double bias_squared);

}  // namespace tppfit
