#pragma once

#include <span>
#include <vector>

namespace annmix {

inline constexpr double kProbabilityFloor = 1e-12;
// rho1 + nu0 is clamped to [-kLogPrecisionClamp, kLogPrecisionClamp] before
// exponentiation, in predictions and gradients alike.
inline constexpr double kLogPrecisionClamp = 10.0;

double logistic(double x);

// softmax(h + rho), max-subtracted.
std::vector<double> categorical_predict(std::span<const double> h, std::span<const double> rho);

struct BetaLink {
    double nu0 = 0.0;  // base log-precision
};

struct BetaParams {
    double mu = 0.5;
    double nu = 1.0;
    double alpha = 0.5;
    double beta = 0.5;
};

// mu = logistic(h + rho[1]); nu = exp(clamp(rho[0] + nu0)); alpha = mu nu;
// beta = (1 - mu) nu. rho is (log-precision offset, mean shift).
BetaParams beta_params(double h, std::span<const double> rho, BetaLink link);

double categorical_nll(std::span<const double> probs, int label);

double log_beta_function(double a, double b);
// Throws std::domain_error unless 0 < y < 1.
double beta_nll(const BetaParams& p, double y);

}  // namespace annmix
