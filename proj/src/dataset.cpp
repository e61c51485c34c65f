#include "tppfit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tppfit/errors.hpp"

namespace tppfit {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double to_unit_open(std::uint64_t bits) {
    // (0, 1): never exactly zero so the log below is finite
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

void check_grid(const std::vector<double>& v, const char* what) {
    if (v.empty()) throw InvalidGridError(std::string(what) + " must be nonempty");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0) || !std::isfinite(v[i])) throw InvalidGridError(std::string(what) + " must be positive");
        if (i > 0 && !(v[i] > v[i - 1])) throw InvalidGridError(std::string(what) + " must be strictly increasing");
    }
}

std::vector<double> unique_sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double x : v)
        if (out.empty() || std::abs(x - out.back()) > 1e-9 * std::abs(out.back())) out.push_back(x);
    return out;
}

}  // namespace

std::string_view split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::HoldoutCollinear: return "holdout_co";
        case Split::HoldoutNonCollinear: return "holdout_nc";
    }
    return "train";
}

std::optional<Split> parse_split(std::string_view s) {
    if (s == "train") return Split::Train;
    if (s == "holdout_co") return Split::HoldoutCollinear;
    if (s == "holdout_nc") return Split::HoldoutNonCollinear;
    return std::nullopt;
}

ExperimentDataset::ExperimentDataset(std::vector<Observation> observations) : obs_(std::move(observations)) {
    for (const auto& o : obs_) {
        if (!(o.n > 0.0) || !(o.d > 0.0) || !(o.loss > 0.0) || !std::isfinite(o.n) || !std::isfinite(o.d) ||
            !std::isfinite(o.loss))
            throw DomainError("observation fields n, d, loss must be finite and positive");
        if (o.ray) {
            if (!(*o.ray > 0.0)) throw DomainError("ray tag must be positive");
            if (std::abs(o.d / o.n - *o.ray) / *o.ray >= 1e-9) throw DomainError("ray tag disagrees with d/n");
        }
    }
}

std::vector<double> ExperimentDataset::distinct_sizes() const {
    std::vector<double> v;
    v.reserve(obs_.size());
    for (const auto& o : obs_) v.push_back(o.n);
    return unique_sorted(std::move(v));
}

std::vector<double> ExperimentDataset::distinct_ratios() const {
    std::vector<double> v;
    for (const auto& o : obs_)
        if (o.ray) v.push_back(*o.ray);
    return unique_sorted(std::move(v));
}

bool ExperimentDataset::is_collinear() const {
    bool any = false;
    for (const auto& o : obs_) {
        if (o.split != Split::Train) continue;
        if (!o.ray) return false;
        any = true;
    }
    return any;
}

ExperimentDataset ExperimentDataset::with_split(Split s) const {
    std::vector<Observation> out;
    for (const auto& o : obs_)
        if (o.split == s) out.push_back(o);
    return ExperimentDataset(std::move(out));
}

std::size_t ExperimentDataset::count(Split s) const {
    return static_cast<std::size_t>(std::count_if(obs_.begin(), obs_.end(), [s](const auto& o) { return o.split == s; }));
}

double ExperimentDataset::min_loss() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& o : obs_) m = std::min(m, o.loss);
    return m;
}

ExperimentDataset ExperimentDataset::replicated(std::size_t copies) const {
    std::vector<Observation> out;
    out.reserve(obs_.size() * copies);
    for (std::size_t c = 0; c < copies; ++c) out.insert(out.end(), obs_.begin(), obs_.end());
    return ExperimentDataset(std::move(out));
}

ExperimentDataset ExperimentDataset::concatenated(const ExperimentDataset& other) const {
    std::vector<Observation> out = obs_;
    out.insert(out.end(), other.obs_.begin(), other.obs_.end());
    return ExperimentDataset(std::move(out));
}

double counter_normal(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
    const std::uint64_t key = splitmix64(splitmix64(splitmix64(seed) ^ i) ^ (j * 0xd1b54a32d192ed03ULL));
    const double u1 = to_unit_open(splitmix64(key));
    const double u2 = to_unit_open(splitmix64(key ^ 0x8cb92ba72f3d8dd7ULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

ExperimentDataset generate_collinear(const LawParams& truth, const std::vector<double>& sizes,
                                     const std::vector<double>& ratios, const NoiseModel& noise) {
    check_grid(sizes, "sizes");
    check_grid(ratios, "ratios");
    if (!(noise.sigma >= 0.0)) throw DomainError("noise sigma must be nonnegative");
    std::vector<Observation> out;
    out.reserve(sizes.size() * ratios.size());
    for (std::size_t l = 0; l < ratios.size(); ++l)
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            const double n = sizes[i];
            const double d = ratios[l] * n;
            double loss = evaluate(truth, n, d);
            if (noise.sigma > 0.0) loss += noise.sigma * counter_normal(noise.seed, i, l);
            out.push_back({n, d, loss, Split::Train, ratios[l]});
        }
    return ExperimentDataset(std::move(out));
}

ExperimentDataset generate_grid(const LawParams& truth, const std::vector<double>& sizes,
                                const std::vector<double>& token_counts, const NoiseModel& noise) {
    check_grid(sizes, "sizes");
    check_grid(token_counts, "token counts");
    if (!(noise.sigma >= 0.0)) throw DomainError("noise sigma must be nonnegative");
    std::vector<Observation> out;
    out.reserve(sizes.size() * token_counts.size());
    for (std::size_t i = 0; i < sizes.size(); ++i)
        for (std::size_t j = 0; j < token_counts.size(); ++j) {
            const double n = sizes[i];
            const double d = token_counts[j];
            double loss = evaluate(truth, n, d);
            if (noise.sigma > 0.0) loss += noise.sigma * counter_normal(noise.seed, i, j);
            out.push_back({n, d, loss, Split::Train, std::nullopt});
        }
    return ExperimentDataset(std::move(out));
}

ExperimentDataset mark_holdout(const ExperimentDataset& ds, double ratio_cut, double token_cut) {
    if (!(ratio_cut > 0.0) || !(token_cut > 0.0)) throw DomainError("holdout cuts must be positive");
    std::vector<Observation> out = ds.observations();
    bool any_train = false;
    for (auto& o : out) {
        if (o.ratio() >= ratio_cut)
            o.split = Split::HoldoutCollinear;
        else if (o.d >= token_cut)
            o.split = Split::HoldoutNonCollinear;
        else {
            o.split = Split::Train;
            any_train = true;
        }
    }
    if (!any_train) throw EmptyTrainError("holdout cuts leave no training observations");
    return ExperimentDataset(std::move(out));
}

std::vector<double> log_space(double lo, double hi, std::size_t count) {
    if (count == 0) return {};
    if (count == 1) return {lo};
    std::vector<double> v(count);
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t i = 0; i < count; ++i)
        v[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    v.front() = lo;
    v.back() = hi;
    return v;
}

}  // namespace tppfit
