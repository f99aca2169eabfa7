#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace annmix {

inline constexpr double kDefaultCovarianceFloor = 1e-4;

// Full covariance of the annotator intercepts, N(0, sigma), held with its
// lower Cholesky factor.
class InterceptCovariance {
public:
    InterceptCovariance() = default;

    static InterceptCovariance identity(std::size_t dim);
    // Throws std::domain_error if sigma is not symmetric positive definite.
    static InterceptCovariance from_matrix(const Eigen::MatrixXd& sigma);

    std::size_t dim() const { return static_cast<std::size_t>(sigma_.rows()); }
    const Eigen::MatrixXd& sigma() const { return sigma_; }
    const Eigen::MatrixXd& cholesky() const { return lower_; }
    double trace() const { return sigma_.trace(); }

    double log_density(std::span<const double> rho) const;
    // out = sigma^{-1} rho
    void precision_times(std::span<const double> rho, std::span<double> out) const;

private:
    Eigen::MatrixXd sigma_;
    Eigen::MatrixXd lower_;
    double log_det_ = 0.0;
};

// Intercept covariance plus the diagonal slope variances (empty unless the
// model has random slopes).
struct CovarianceState {
    InterceptCovariance intercept;
    std::vector<double> slope_variances;
    double floor = kDefaultCovarianceFloor;

    double trace() const;
};

double prior_logdensity_intercepts(std::span<const double> rho, const InterceptCovariance& cov);

// Diagonal Gaussian centred at theta.
double prior_logdensity_slopes(std::span<const double> phi, std::span<const double> theta,
                               std::span<const double> variances);

}  // namespace annmix
