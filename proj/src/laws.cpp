#include "tppfit/laws.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "tppfit/errors.hpp"

namespace tppfit {

namespace {

constexpr double kMaxExp = 709.0;

struct LawInfo {
    LawKind kind;
    std::string_view cli_name;
    std::vector<std::string> names;
    std::vector<ParamRole> roles;
};

using R = ParamRole;

const std::array<LawInfo, 6>& law_table() {
    static const std::array<LawInfo, 6> table{{
        {LawKind::Chinchilla, "chinchilla", {"A", "B", "E", "alpha", "beta"},
         {R::Scale, R::Scale, R::Offset, R::Exponent, R::Exponent}},
        {LawKind::RepeatedData, "repeated-data", {"A", "B", "E", "alpha", "beta", "R_star_D", "R_star_N"},
         {R::Scale, R::Scale, R::Offset, R::Exponent, R::Exponent, R::Scale, R::Scale}},
        {LawKind::KaplanAdditive, "kaplan", {"N_c", "D_c", "alpha_N", "alpha_D"},
         {R::Scale, R::Scale, R::Exponent, R::Exponent}},
        {LawKind::DroppoElibol, "droppo-elibol", {"L_inf", "N_C", "D_C", "alpha_N", "alpha_D", "alpha"},
         {R::Scale, R::Scale, R::Scale, R::Exponent, R::Exponent, R::Exponent}},
        {LawKind::ReducedChinchilla, "reduced", {"psi", "alpha", "E"}, {R::Scale, R::Exponent, R::Offset}},
        {LawKind::Interaction, "interaction", {"A", "B", "F", "E", "alpha", "beta", "gamma_N", "gamma_D"},
         {R::Scale, R::Scale, R::Scale, R::Offset, R::Exponent, R::Exponent, R::Exponent, R::Exponent}},
    }};
    return table;
}

const LawInfo& info(LawKind kind) {
    for (const auto& e : law_table())
        if (e.kind == kind) return e;
    throw UnsupportedVariantError("unknown law kind");
}

void check_point(double n, double d) {
    if (!(n > 0.0) || !(d > 0.0) || !std::isfinite(n) || !std::isfinite(d))
        throw DomainError("law evaluation requires finite n > 0 and d > 0");
}

void check_shape(const LawParams& p) {
    if (p.values.size() != parameter_count(p.kind))
        throw DomainError("parameter vector length does not match law " + std::string(law_name(p.kind)));
}

// Saturating effective size and its derivative with respect to the half-life.
struct Saturation {
    double value;
    double d_rstar;
};

Saturation saturate(double total, double unique, double rstar) {
    const double u = std::min(unique, total);
    const double rep = total / u - 1.0;
    if (rep <= 0.0) return {total, 0.0};
    const double q = rep / rstar;
    const double e = std::exp(-q);
    return {u + u * rstar * (1.0 - e), u * ((1.0 - e) - q * e)};
}

}  // namespace

double safe_pow(double x, double c) {
    if (!(x > 0.0)) throw DomainError("power of a nonpositive base");
    const double arg = c * std::log(x);
    if (arg > kMaxExp) throw OverflowError("power term exceeds representable range");
    return std::exp(arg);
}

std::size_t parameter_count(LawKind kind) { return info(kind).names.size(); }

std::string_view law_name(LawKind kind) { return info(kind).cli_name; }

std::optional<LawKind> parse_law(std::string_view name) {
    for (const auto& e : law_table())
        if (e.cli_name == name) return e.kind;
    return std::nullopt;
}

const std::vector<std::string>& parameter_names(LawKind kind) { return info(kind).names; }

const std::vector<ParamRole>& parameter_roles(LawKind kind) { return info(kind).roles; }

Bounds default_bounds(LawKind kind, double min_loss) {
    switch (kind) {
        case LawKind::Chinchilla:
            return {{1e-2, 1e-2, 0.0, 0.01, 0.01}, {1e10, 1e10, 10.0, 2.0, 2.0}};
        case LawKind::RepeatedData:
            return {{1e-2, 1e-2, 0.0, 0.01, 0.01, 0.1, 0.1}, {1e12, 1e12, 10.0, 2.0, 2.0, 50.0, 50.0}};
        case LawKind::KaplanAdditive:
            return {{1e3, 1e3, 0.01, 0.01}, {1e14, 1e14, 2.0, 2.0}};
        case LawKind::DroppoElibol: {
            const double ceiling = std::isfinite(min_loss) ? 0.99 * min_loss : 10.0;
            if (!(ceiling > 1e-6)) throw DomainError("Droppo-Elibol L_inf ceiling falls below its floor");
            return {{1e-6, 1e3, 1e3, 0.01, 0.01, 0.01}, {ceiling, 1e14, 1e14, 2.0, 2.0, 2.0}};
        }
        case LawKind::ReducedChinchilla:
            return {{1e-2, 0.01, 0.0}, {1e12, 2.0, 10.0}};
        case LawKind::Interaction:
            return {{1e-2, 1e-2, 1e-2, 0.0, 0.01, 0.01, 0.01, 0.01},
                    {1e10, 1e10, 1e10, 10.0, 2.0, 2.0, 2.0, 2.0}};
    }
    throw UnsupportedVariantError("unknown law kind");
}

LawParams LawParams::make(LawKind kind, Vector values, double min_loss) {
    Bounds b = default_bounds(kind, min_loss);
    LawParams p{kind, std::move(values), std::move(b.lower), std::move(b.upper), {}};
    p.validate();
    return p;
}

double LawParams::at(std::string_view name) const {
    const auto& names = parameter_names(kind);
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return values[i];
    throw std::out_of_range("no parameter named " + std::string(name));
}

bool LawParams::within_bounds() const {
    if (values.size() != lower.size() || values.size() != upper.size()) return false;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!(values[i] >= lower[i] && values[i] <= upper[i])) return false;
    return true;
}

void LawParams::validate() const {
    check_shape(*this);
    if (!within_bounds()) throw DomainError("parameters outside bounds for law " + std::string(law_name(kind)));
}

EffectiveSizes effective_sizes(const LawParams& params, double n, double d, double unique_tokens,
                               double unique_param_budget) {
    if (params.kind != LawKind::RepeatedData) throw UnsupportedVariantError("effective_sizes needs RepeatedData");
    check_shape(params);
    check_point(n, d);
    if (!(unique_tokens > 0.0) || !(unique_param_budget > 0.0))
        throw DomainError("unique budgets must be positive");
    return {saturate(d, unique_tokens, params[5]).value, saturate(n, unique_param_budget, params[6]).value};
}

double evaluate(const LawParams& p, double n, double d) {
    check_shape(p);
    check_point(n, d);
    const auto& v = p.values;
    switch (p.kind) {
        case LawKind::Chinchilla:
            return v[0] * safe_pow(n, -v[3]) + v[1] * safe_pow(d, -v[4]) + v[2];
        case LawKind::RepeatedData: {
            const double un = p.repetition.unique_params.value_or(n);
            const double de = saturate(d, p.repetition.unique_tokens, v[5]).value;
            const double ne = saturate(n, un, v[6]).value;
            return v[0] * safe_pow(ne, -v[3]) + v[1] * safe_pow(de, -v[4]) + v[2];
        }
        case LawKind::KaplanAdditive:
            return safe_pow(v[0] / n, v[2]) + safe_pow(v[1] / d, v[3]);
        case LawKind::DroppoElibol: {
            const double s = safe_pow(v[0], 1.0 / v[5]) + safe_pow(v[1] / n, v[3]) + safe_pow(v[2] / d, v[4]);
            return safe_pow(s, v[5]);
        }
        case LawKind::ReducedChinchilla:
            return v[0] * safe_pow(n, -v[1]) + v[2];
        case LawKind::Interaction:
            return v[0] * safe_pow(n, -v[4]) + v[1] * safe_pow(d, -v[5]) +
                   v[2] * safe_pow(n, -v[6]) * safe_pow(d, -v[7]) + v[3];
    }
    throw UnsupportedVariantError("unknown law kind");
}

Vector jacobian_row(const LawParams& p, double n, double d) {
    check_shape(p);
    check_point(n, d);
    const auto& v = p.values;
    const double ln = std::log(n);
    const double ld = std::log(d);
    // g holds dLhat/dtheta; negated on return.
    Vector g(v.size());
    switch (p.kind) {
        case LawKind::Chinchilla: {
            const double tn = safe_pow(n, -v[3]);
            const double td = safe_pow(d, -v[4]);
            g = {tn, td, 1.0, -v[0] * tn * ln, -v[1] * td * ld};
            break;
        }
        case LawKind::RepeatedData: {
            const double un = p.repetition.unique_params.value_or(n);
            const Saturation sd = saturate(d, p.repetition.unique_tokens, v[5]);
            const Saturation sn = saturate(n, un, v[6]);
            const double tn = safe_pow(sn.value, -v[3]);
            const double td = safe_pow(sd.value, -v[4]);
            g = {tn,
                 td,
                 1.0,
                 -v[0] * tn * std::log(sn.value),
                 -v[1] * td * std::log(sd.value),
                 -v[4] * v[1] * td / sd.value * sd.d_rstar,
                 -v[3] * v[0] * tn / sn.value * sn.d_rstar};
            break;
        }
        case LawKind::KaplanAdditive: {
            const double tn = safe_pow(v[0] / n, v[2]);
            const double td = safe_pow(v[1] / d, v[3]);
            g = {v[2] * tn / v[0], v[3] * td / v[1], tn * (std::log(v[0]) - ln), td * (std::log(v[1]) - ld)};
            break;
        }
        case LawKind::DroppoElibol: {
            const double a = v[5];
            const double li = safe_pow(v[0], 1.0 / a);
            const double tn = safe_pow(v[1] / n, v[3]);
            const double td = safe_pow(v[2] / d, v[4]);
            const double s = li + tn + td;
            const double sa = safe_pow(s, a);
            const double sam1 = sa / s;
            g = {sam1 * li / v[0],
                 a * sam1 * v[3] * tn / v[1],
                 a * sam1 * v[4] * td / v[2],
                 a * sam1 * tn * (std::log(v[1]) - ln),
                 a * sam1 * td * (std::log(v[2]) - ld),
                 sa * std::log(s) - sam1 * li * std::log(v[0]) / a};
            break;
        }
        case LawKind::ReducedChinchilla: {
            const double tn = safe_pow(n, -v[1]);
            g = {tn, -v[0] * tn * ln, 1.0};
            break;
        }
        case LawKind::Interaction: {
            const double tn = safe_pow(n, -v[4]);
            const double td = safe_pow(d, -v[5]);
            const double tf = safe_pow(n, -v[6]) * safe_pow(d, -v[7]);
            g = {tn, td, tf, 1.0, -v[0] * tn * ln, -v[1] * td * ld, -v[2] * tf * ln, -v[2] * tf * ld};
            break;
        }
    }
    for (double& x : g) x = -x;
    return g;
}

LawParams reduce_on_ray(const LawParams& c, double k) {
    if (c.kind != LawKind::Chinchilla) throw UnsupportedVariantError("reduce_on_ray needs Chinchilla parameters");
    check_shape(c);
    if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("ray ratio must be positive");
    const double psi = c[0] + c[1] * safe_pow(k, -c[3]);
    Bounds b = default_bounds(LawKind::ReducedChinchilla);
    return LawParams{LawKind::ReducedChinchilla, {psi, c[3], c[2]}, std::move(b.lower), std::move(b.upper), {}};
}

ExponentGap exponent_gap(const LawParams& p) {
    check_shape(p);
    const auto& v = p.values;
    switch (p.kind) {
        case LawKind::Chinchilla:
        case LawKind::RepeatedData:
            return {v[3] - v[4], std::abs(v[3] - v[4])};
        case LawKind::KaplanAdditive:
            return {v[2] - v[3], std::abs(v[3] - v[2])};
        case LawKind::DroppoElibol: {
            const double g = v[3] / v[5] - v[4] / v[5];
            return {g, std::abs(g)};
        }
        case LawKind::Interaction: {
            const double gs = v[6] + v[7];
            const std::array<double, 3> gaps{v[4] - v[5], v[4] - gs, gs - v[5]};
            double best = gaps[0];
            for (double g : gaps)
                if (std::abs(g) < std::abs(best)) best = g;
            return {best, std::abs(best)};
        }
        case LawKind::ReducedChinchilla:
            break;
    }
    throw UnsupportedVariantError("exponent gap undefined for the reduced model");
}

std::vector<std::size_t> scale_pair_indices(LawKind kind) {
    switch (kind) {
        case LawKind::Chinchilla:
        case LawKind::RepeatedData:
        case LawKind::KaplanAdditive:
            return {0, 1};
        case LawKind::DroppoElibol:
            return {1, 2};
        case LawKind::Interaction:
            return {0, 1, 2};
        case LawKind::ReducedChinchilla:
            break;
    }
    throw UnsupportedVariantError("reduced model has no collinear scale pair");
}

KaplanCompositional to_compositional(const LawParams& k) {
    if (k.kind != LawKind::KaplanAdditive) throw UnsupportedVariantError("to_compositional needs Kaplan parameters");
    check_shape(k);
    return {k[0], k[1], k[2], k[3]};
}

double evaluate_compositional(const KaplanCompositional& k, double n, double d) {
    check_point(n, d);
    return safe_pow(safe_pow(k.n_c / n, k.alpha_n / k.alpha_d) + k.d_c / d, k.alpha_d);
}

}  // namespace tppfit
