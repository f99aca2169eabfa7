#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "annmix/data.hpp"
#include "annmix/model.hpp"
#include "annmix/prior.hpp"

namespace annmix {

struct TrainConfig {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-7;
    std::size_t batch_size = 128;
    int max_epochs = 25;
    double early_stop_tolerance = 0.01;
    std::uint64_t seed = 0;
    double covariance_floor = kDefaultCovarianceFloor;

    bool operator==(const TrainConfig&) const = default;
};

struct OptimizerState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::uint64_t step = 0;

    static OptimizerState zeros(std::size_t size);
};

// Adam with bias correction; increments state.step.
void adam_step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
               const TrainConfig& config);

// Moment-matched covariance of the current effects plus floor * I:
// intercepts centred at 0 (full matrix), slopes centred at theta (diagonal).
InterceptCovariance estimate_intercept_covariance(std::span<const double> effects, std::size_t dim, double floor);
std::vector<double> estimate_slope_variances(std::span<const double> slopes, std::span<const double> theta,
                                             double floor);
CovarianceState update_covariance(const FittedModel& model, double floor);

// Early-stopping rule: |current - previous| < tolerance.
bool should_stop(double previous_loss, double current_loss, double tolerance);

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
    double covariance_trace = 0.0;
    std::optional<double> nu0;
};

struct FitResult {
    FittedModel model;
    std::vector<EpochLog> log;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shuffled mini-batch Adam on theta, effects and nu0, with one covariance
// update after each epoch's gradient passes. Deterministic in config.seed.
FitResult fit(const ModelSpec& spec, const Dataset& train, const TrainConfig& config);

// One JSON object per line: {"epoch", "mean_loss", "covariance_trace", "nu0"}.
std::string training_log_jsonl(std::span<const EpochLog> log);

}  // namespace annmix
