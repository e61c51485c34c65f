#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "tppfit/laws.hpp"

namespace tppfit {

enum class Split { Train, HoldoutCollinear, HoldoutNonCollinear };

std::string_view split_name(Split s);  // train / holdout_co / holdout_nc
std::optional<Split> parse_split(std::string_view s);

struct Observation {
    double n = 0.0;
    double d = 0.0;
    double loss = 0.0;
    Split split = Split::Train;
    std::optional<double> ray;

    double ratio() const { return ray.value_or(d / n); }
    bool operator==(const Observation&) const = default;
};

class ExperimentDataset {
public:
    ExperimentDataset() = default;
    explicit ExperimentDataset(std::vector<Observation> observations);

    const std::vector<Observation>& observations() const noexcept { return obs_; }
    std::size_t size() const noexcept { return obs_.size(); }
    bool empty() const noexcept { return obs_.empty(); }
    const Observation& operator[](std::size_t i) const { return obs_[i]; }

    std::vector<double> distinct_sizes() const;   // strictly increasing
    std::vector<double> distinct_ratios() const;  // tagged rays only, strictly increasing
    bool is_collinear() const;                    // every train point on a tagged ray

    ExperimentDataset with_split(Split s) const;
    ExperimentDataset train() const { return with_split(Split::Train); }
    std::size_t count(Split s) const;
    double min_loss() const;

    ExperimentDataset replicated(std::size_t copies) const;
    ExperimentDataset concatenated(const ExperimentDataset& other) const;

    bool operator==(const ExperimentDataset&) const = default;

private:
    std::vector<Observation> obs_;
};

struct NoiseModel {
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

// Standard normal keyed by (seed, i, j); independent of grid extent.
double counter_normal(std::uint64_t seed, std::uint64_t i, std::uint64_t j);

ExperimentDataset generate_collinear(const LawParams& truth, const std::vector<double>& sizes,
                                     const std::vector<double>& ratios, const NoiseModel& noise);

ExperimentDataset generate_grid(const LawParams& truth, const std::vector<double>& sizes,
                                const std::vector<double>& token_counts, const NoiseModel& noise);

// Rays at or above ratio_cut become collinear holdout; otherwise tokens at or above
// token_cut become non-collinear holdout. The collinear tag wins when both apply.
ExperimentDataset mark_holdout(const ExperimentDataset& ds, double ratio_cut, double token_cut);

// log-spaced points from lo to hi inclusive
std::vector<double> log_space(double lo, double hi, std::size_t count);

}  // namespace tppfit
