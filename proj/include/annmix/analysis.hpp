#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "annmix/model.hpp"

namespace annmix {

// How an annotator responds when the shared head's output is zero.
// Categorical: softmax(rho). Continuous: (rho1, logistic(rho2)).
struct BiasProfile {
    std::string annotator;
    std::vector<double> class_bias;
    double precision_offset = 0.0;
    double shift = 0.0;
    double shift_transformed = 0.5;

    // Whether alpha < 1 and beta < 1 for head output h under base
    // log-precision nu0.
    bool is_sparse_at(double h, double nu0) const;
};

// One profile per annotator. With `slope_extension`, a slopes model's
// profile also includes the difference between the annotator head and the
// shared head at z = 0.
std::vector<BiasProfile> bias_profiles(const FittedModel& model, bool slope_extension = false);

// Averages each annotator's effects over the given fold models (those that
// contain the annotator) before profiling.
std::vector<BiasProfile> bias_profiles(std::span<const FittedModel> models, bool slope_extension = false);

// Linear-interpolation quantile (Hyndman-Fan type 7).
double quantile(std::span<const double> values, double q);

struct BiasDispersion {
    std::vector<std::pair<double, double>> iqr;                // per class: (q25, q75)
    std::vector<std::vector<std::optional<double>>> correlation;  // K x K Spearman; nullopt if undefined
};

// Categorical profiles only; needs at least 4.
BiasDispersion bias_dispersion(std::span<const BiasProfile> profiles);

// rho1 below which alpha < 1 and beta < 1: log(1 / max(mu, 1 - mu)) - nu0
// with mu = logistic(h + rho2).
double sparsity_threshold(double h, double rho2, double nu0);

struct BoundaryPoint {
    double rho2 = 0.0;
    double shift_transformed = 0.0;
    double rho1_threshold = 0.0;
};

inline constexpr int kBoundaryGridPoints = 201;
inline constexpr double kBoundaryGridLimit = 5.0;

// Threshold curve over rho2 in [-5, 5] (201 points).
std::vector<BoundaryPoint> sparsity_boundary(double h, double nu0);
std::vector<BoundaryPoint> sparsity_boundary(double h, const FittedModel& model);

struct CorrelationResult {
    std::optional<double> r;
    std::optional<double> p;
    std::size_t permutations = 0;
};

inline constexpr std::size_t kDefaultPermutations = 10000;

// Spearman correlation between rho1 and logistic(rho2) across continuous
// profiles, with a two-sided permutation p-value (1 + #extreme) / (1 + n).
CorrelationResult precision_bias_correlation(std::span<const BiasProfile> profiles,
                                             std::size_t permutations = kDefaultPermutations,
                                             std::uint64_t seed = 0);

// CSV renderings. Categorical profiles: annotator,class_0..class_{K-1}.
// Continuous profiles: annotator,precision_offset,shift,shift_transformed.
// Boundary: h,rho2,shift_transformed,rho1_threshold.
std::string profiles_to_csv(std::span<const BiasProfile> profiles, bool categorical);
std::string boundary_to_csv(std::span<const std::pair<double, std::vector<BoundaryPoint>>> curves);

}  // namespace annmix
