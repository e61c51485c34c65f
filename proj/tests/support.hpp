#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "tppfit/dataset.hpp"
#include "tppfit/laws.hpp"

namespace tppfit::testing {

inline Vector truth_values(LawKind kind) {
    switch (kind) {
        case LawKind::Chinchilla: return {406.4, 410.7, 1.69, 0.34, 0.28};
        case LawKind::RepeatedData: return {406.4, 410.7, 1.69, 0.34, 0.28, 15.0, 5.0};
        case LawKind::KaplanAdditive: return {8.8e13, 5.4e13, 0.076, 0.095};
        case LawKind::DroppoElibol: return {1.6, 3e7, 5e8, 0.35, 0.3, 0.8};
        case LawKind::ReducedChinchilla: return {550.0, 0.34, 1.69};
        case LawKind::Interaction: return {406.4, 410.7, 50.0, 1.69, 0.34, 0.28, 0.2, 0.16};
    }
    return {};
}

inline const std::vector<LawKind>& all_laws() {
    static const std::vector<LawKind> k{LawKind::Chinchilla,   LawKind::RepeatedData,      LawKind::KaplanAdditive,
                                        LawKind::DroppoElibol, LawKind::ReducedChinchilla, LawKind::Interaction};
    return k;
}

inline LawParams truth(LawKind kind) {
    LawParams p = LawParams::make(kind, truth_values(kind));
    if (kind == LawKind::RepeatedData) p.repetition = {6e7, 2e7};
    return p;
}

// Truth jittered by +-40% on scales and +-15% elsewhere.
inline LawParams random_params(LawKind kind, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector v = truth_values(kind);
    const auto& roles = parameter_roles(kind);
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] *= roles[i] == ParamRole::Scale ? std::exp(0.4 * u(rng)) : 1.0 + 0.15 * u(rng);
    const Bounds b = default_bounds(kind);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::clamp(v[i], b.lower[i] * 1.01, b.upper[i] * 0.99);
    LawParams p = LawParams::make(kind, v);
    if (kind == LawKind::RepeatedData) p.repetition = {6e7, 2e7};
    return p;
}

// Central differences of the residual L - Lhat.
inline Vector fd_row(const LawParams& p, double n, double d, double rel_step = 1e-6) {
    Vector row(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double h = rel_step * std::abs(p.values[j]);
        LawParams up = p, dn = p;
        up.values[j] += h;
        dn.values[j] -= h;
        row[j] = -(evaluate(up, n, d) - evaluate(dn, n, d)) / (2.0 * h);
    }
    return row;
}

inline double rel_err(double a, double b, double floor = 0.0) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
    return sxy / sxx;
}

}  // namespace tppfit::testing
