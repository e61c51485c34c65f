#pragma once

#include <optional>
#include <vector>

#include "tppfit/dataset.hpp"
#include "tppfit/fitter.hpp"
#include "tppfit/laws.hpp"
#include "tppfit/linalg.hpp"

namespace tppfit {

Matrix gram_matrix(const Matrix& jacobian);

struct EigenDecomposition {
    Vector values;   // ascending
    Matrix vectors;  // column j pairs with values[j]
};

// Cyclic Jacobi for p <= 16.
EigenDecomposition eigendecompose_small(const Matrix& sym);

struct CsGap {
    double lhs;
    double rhs;
};
CsGap cs_gap_determinant(const Vector& f, double c, const Vector& h);

// Variance of values under weights (normalized internally).
double weighted_variance(const Vector& weights, const Vector& values);

struct PowerSumProfile {
    std::vector<double> q;
    std::vector<double> phi_q;  // sum N^(-q alpha) for each requested q
    Vector weights;             // N^(-2 alpha) / Phi_2
    double logn_variance = 0.0;
    double phi1 = 0.0;
    double phi2 = 0.0;
    double t1 = 0.0;  // sum N^-a log N
    double t2 = 0.0;  // sum N^-2a log N
    double u2 = 0.0;  // sum N^-2a (log N)^2
};
PowerSumProfile power_sums(const std::vector<double>& sizes, double alpha, const std::vector<double>& q = {1.0, 2.0});

struct GramDiagnostics {
    Matrix gram;
    Vector eigenvalues;
    Matrix eigenvectors;
    double kappa_full = 0.0;
    double kappa_scale_pair = 0.0;
    double kappa_full_equilibrated = 0.0;
    Vector sloppy_vector;
    std::optional<double> epsilon;
    bool lambda_min_clamped = false;  // lambda_min fell below 1e-14 lambda_max
    LawKind kind = LawKind::Chinchilla;
};

GramDiagnostics diagnose(const Matrix& jacobian, const LawParams& params);

// +inf when the sub-block determinant vanishes.
double kappa_scale_pair(const GramDiagnostics& diag, LawKind kind);
double kappa_2x2(double a, double b, double d);  // [[a, b], [b, d]]

struct CIReport {
    double sigma = 0.0;
    Vector half_widths;  // NaN entries when unreliable
    std::optional<double> inflation_ratio;
    double pair_inflation = 1.0;  // same ratio from the full Jacobian alone
    bool reliable = true;
    double kappa_equilibrated = 0.0;
};

CIReport ci_report(const FitResult& fit, double sigma, const FitResult* paired_reduced = nullptr);

// sqrt(sum r^2 / (m - p)).
double residual_sigma(const FitResult& fit);

double sloppy_leverage(const ExperimentDataset& holdout, double k, double alpha, double beta_eff, double phi2);

}  // namespace tppfit
