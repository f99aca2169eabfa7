#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "annmix/data.hpp"
#include "annmix/model.hpp"

namespace annmix {

// Generative setup mirroring the model: a random rectifier head, annotator
// effects drawn from N(0, sigma) (and heads from N(theta, slope_sd^2 I) for
// slopes), standard-normal item features, uniform tags, and annotator panels
// drawn without replacement.
struct SimulationSpec {
    ResponseScale scale = ResponseScale::categorical(3);
    EffectsMode effects = EffectsMode::Intercepts;
    std::size_t num_items = 200;
    std::size_t feature_dim = 16;
    std::size_t hidden_dim = 16;
    std::size_t num_annotators = 30;
    std::size_t annotations_per_item = 10;
    // Spread of the true head's output (1: unit-variance outputs, matching
    // the default intercept sd); zero_head forces h = 0 everywhere.
    double head_scale = 1.0;
    bool zero_head = false;
    // R x R; empty means intercept_sd^2 * I.
    std::vector<std::vector<double>> intercept_covariance;
    double intercept_sd = 1.0;
    double slope_sd = 0.0;
    double nu0 = 1.5;
    std::size_t num_predicates = 20;
    std::size_t num_structures = 10;
    std::uint64_t seed = 0;
};

SimulationSpec simulation_spec_from_json(std::string_view text);
std::string simulation_spec_to_json(const SimulationSpec& spec);

struct GroundTruth {
    SimulationSpec spec;
    FittedModel model;               // the generating parameters
    Eigen::MatrixXd intercept_sigma; // R x R (PSD, may be singular)
    std::vector<double> slope_variances;
};

struct Simulation {
    Dataset dataset;  // labels already clamped into (eps, 1 - eps) for continuous scales
    GroundTruth truth;
};

// Item i draws from its own stream, Rng(derive_seed(derive_seed(seed, 3), i)).
Simulation simulate(const SimulationSpec& spec);

std::string ground_truth_to_json(const GroundTruth& truth);

// Generating parameters as a model whose covariance is sigma_true + floor I.
FittedModel model_from_truth(const GroundTruth& truth, double floor = kDefaultCovarianceFloor);

using ScalarFunction = std::function<double(std::span<const double>)>;

// Central differences per coordinate.
std::vector<double> finite_difference_grad(const ScalarFunction& loss, std::span<const double> params,
                                           double step = 1e-5);

// log Gamma by upward recurrence to x >= 20 and the Stirling series.
double brute_force_log_gamma(double x);
// -log(exp(l_y) / sum_c exp(l_c)) with no max-shift.
double brute_force_categorical_nll(std::span<const double> logits, int label);
double brute_force_beta_nll(double alpha, double beta, double y);

// NLL of one record recomputed from the raw parameter vector with plain
// loops (no shared code with the likelihood path).
double brute_force_nll(const FittedModel& model, const Dataset& data, const Record& record);

struct RecoveryReport {
    std::optional<double> rho_spearman;
    std::optional<double> sigma_relative_error;  // nullopt without intercepts
    std::optional<double> theta_prediction_corr;
};

// Compares fitted effects, covariance and prior-mean predictions with the
// truth. Categorical intercepts are compared after removing each
// annotator's mean (softmax is blind to it), and covariances after the same
// projection.
RecoveryReport recovery_report(const FittedModel& fitted, const GroundTruth& truth, std::size_t grid_items = 200,
                               std::uint64_t seed = 7);

}  // namespace annmix
