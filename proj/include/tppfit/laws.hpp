#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tppfit/linalg.hpp"

namespace tppfit {

enum class LawKind { Chinchilla, RepeatedData, KaplanAdditive, DroppoElibol, ReducedChinchilla, Interaction };

// How a coordinate is treated by the optimizer and the start sampler.
enum class ParamRole {
    Scale,     // positive coefficient spanning decades; log-uniform starts
    Exponent,  // uniform starts
    Offset,    // additive floor (E); uniform starts
};

std::size_t parameter_count(LawKind kind);
std::string_view law_name(LawKind kind);  // CLI spelling, e.g. "repeated-data"
std::optional<LawKind> parse_law(std::string_view name);
const std::vector<std::string>& parameter_names(LawKind kind);
const std::vector<ParamRole>& parameter_roles(LawKind kind);

struct Bounds {
    Vector lower;
    Vector upper;
};

// Box from the fitting protocol. DroppoElibol needs the smallest observed loss
// for its L_inf ceiling; other laws ignore it.
Bounds default_bounds(LawKind kind, double min_loss = std::numeric_limits<double>::infinity());

// Repetition inputs for RepeatedData. Infinite unique_tokens means no repetition;
// an absent unique_params means U_N = n (R_N = 0).
struct RepetitionContext {
    double unique_tokens = std::numeric_limits<double>::infinity();
    std::optional<double> unique_params;

    bool operator==(const RepetitionContext&) const = default;
};

struct LawParams {
    LawKind kind = LawKind::Chinchilla;
    Vector values;
    Vector lower;
    Vector upper;
    RepetitionContext repetition;

    // values with the default box; throws DomainError if outside it.
    static LawParams make(LawKind kind, Vector values,
                          double min_loss = std::numeric_limits<double>::infinity());

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double at(std::string_view name) const;
    bool within_bounds() const;
    void validate() const;  // DomainError on shape or bound violation

    bool operator==(const LawParams&) const = default;
};

struct EffectiveSizes {
    double d_eff;
    double n_eff;
};

double evaluate(const LawParams& params, double n, double d);

EffectiveSizes effective_sizes(const LawParams& params, double n, double d, double unique_tokens,
                               double unique_param_budget);

// Residual-Jacobian row, r = L - Lhat, so entries are -dLhat/dtheta.
Vector jacobian_row(const LawParams& params, double n, double d);

LawParams reduce_on_ray(const LawParams& chinchilla, double k);

struct ExponentGap {
    double signed_gap;
    double magnitude;
};
ExponentGap exponent_gap(const LawParams& params);

// Indices of the collinear scale coefficients: (A,B), (N_c,D_c), (N_C,D_C), or (A,B,F).
std::vector<std::size_t> scale_pair_indices(LawKind kind);

// Original Kaplan composition [(N_c/N)^(aN/aD) + D_c/D]^aD. The additive fit maps to it
// by identity on (N_c, D_c, aN, aD), which preserves both one-dimensional limits.
struct KaplanCompositional {
    double n_c;
    double d_c;
    double alpha_n;
    double alpha_d;
};
KaplanCompositional to_compositional(const LawParams& kaplan_additive);
double evaluate_compositional(const KaplanCompositional& k, double n, double d);

// exp(c * log x) with an overflow guard.
double safe_pow(double x, double c);

}  // namespace tppfit
