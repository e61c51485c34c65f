#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "tppfit/dataset.hpp"
#include "tppfit/laws.hpp"
#include "tppfit/linalg.hpp"

namespace tppfit {

enum class SeedProtocol { Stride1, Stride137, Affine };

std::string_view seed_protocol_name(SeedProtocol p);
std::optional<SeedProtocol> parse_seed_protocol(std::string_view s);

// Stride1: i; Stride137: 137 i; Affine: 42 + 100003 i.
std::uint64_t protocol_seed(SeedProtocol p, std::uint64_t index);

struct LossSpec {
    enum class Kind { SquaredError, Huber };
    Kind kind = Kind::SquaredError;
    double delta = 0.5;

    static LossSpec squared() { return {}; }
    static LossSpec huber(double delta) { return {Kind::Huber, delta}; }
    bool operator==(const LossSpec&) const = default;
};

LossSpec default_loss(LawKind kind);  // Huber(0.5) for RepeatedData, squared otherwise
double loss_objective(const Vector& residuals, const LossSpec& loss);

// Serial is the reference path; Parallel spreads restarts over OpenMP threads.
enum class Execution { Serial, Parallel };

struct FitConfig {
    int restarts = 100;
    SeedProtocol seed_protocol = SeedProtocol::Stride1;
    std::uint64_t seed_index = 0;
    std::optional<LossSpec> loss;  // law default when empty
    int max_iterations = 500;
    double gradient_tolerance = 1e-8;
    double step_tolerance = 1e-10;
    int polish_iterations = 50;
    double polish_scale = 0.01;
    Execution execution = Execution::Parallel;
    RepetitionContext repetition;
    std::optional<Bounds> bounds;  // default box when empty

    void validate() const;
};

struct FitResult {
    LawParams params;
    double objective = 0.0;
    Vector residuals;
    Matrix jacobian;  // native parameter coordinates
    std::size_t restart_index = 0;
    bool converged = false;
    int iterations = 0;
    LossSpec loss;
    std::uint64_t seed = 0;  // optimizer seed from the protocol

    bool operator==(const FitResult&) const = default;
};

// Solves (J^T J + mu I) dx = -J^T r. With mu = 0 this is the plain normal-equation step.
// Rank deficiency escalates mu geometrically; SingularSystemError at the ceiling.
Vector gauss_newton_step(const Matrix& jacobian, const Vector& residuals, double mu = 0.0);

FitResult fit(const ExperimentDataset& ds, LawKind kind, const FitConfig& config);

// (psi, alpha, E) fit on a single-ray training set with at least two sizes.
FitResult profile_reduced_fit(const ExperimentDataset& ds, const FitConfig& config);

// Residuals, Jacobian and objective of the train split at fixed parameters.
FitResult result_at(const ExperimentDataset& ds, const LawParams& params, const LossSpec& loss);

}  // namespace tppfit
