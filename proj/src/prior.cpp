#include "annmix/prior.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace annmix {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

InterceptCovariance InterceptCovariance::identity(std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    return from_matrix(Eigen::MatrixXd::Identity(n, n));
}

InterceptCovariance InterceptCovariance::from_matrix(const Eigen::MatrixXd& sigma) {
    if (sigma.rows() != sigma.cols()) throw std::domain_error("covariance must be square");
    if (!sigma.isApprox(sigma.transpose(), 1e-12)) throw std::domain_error("covariance must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw std::domain_error("covariance is not positive definite");
    InterceptCovariance c;
    c.sigma_ = sigma;
    c.lower_ = llt.matrixL();
    c.log_det_ = 0.0;
    for (Eigen::Index i = 0; i < c.lower_.rows(); ++i) {
        if (!(c.lower_(i, i) > 0.0)) throw std::domain_error("covariance is not positive definite");
        c.log_det_ += 2.0 * std::log(c.lower_(i, i));
    }
    return c;
}

double InterceptCovariance::log_density(std::span<const double> rho) const {
    if (rho.size() != dim()) throw std::invalid_argument("intercept dimension mismatch");
    Eigen::Map<const Eigen::VectorXd> r(rho.data(), static_cast<Eigen::Index>(rho.size()));
    const Eigen::VectorXd w = lower_.triangularView<Eigen::Lower>().solve(r);
    return -0.5 * w.squaredNorm() - 0.5 * log_det_ - 0.5 * static_cast<double>(dim()) * kLog2Pi;
}

void InterceptCovariance::precision_times(std::span<const double> rho, std::span<double> out) const {
    Eigen::Map<const Eigen::VectorXd> r(rho.data(), static_cast<Eigen::Index>(rho.size()));
    Eigen::Map<Eigen::VectorXd> o(out.data(), static_cast<Eigen::Index>(out.size()));
    Eigen::VectorXd w = lower_.triangularView<Eigen::Lower>().solve(r);
    o = lower_.transpose().triangularView<Eigen::Upper>().solve(w);
}

double CovarianceState::trace() const {
    double t = intercept.dim() > 0 ? intercept.trace() : 0.0;
    for (double v : slope_variances) t += v;
    return t;
}

double prior_logdensity_intercepts(std::span<const double> rho, const InterceptCovariance& cov) {
    return cov.log_density(rho);
}

double prior_logdensity_slopes(std::span<const double> phi, std::span<const double> theta,
                               std::span<const double> variances) {
    if (phi.size() != theta.size() || phi.size() != variances.size())
        throw std::invalid_argument("slope prior dimension mismatch: " + std::to_string(phi.size()) + " / " +
                                    std::to_string(theta.size()) + " / " + std::to_string(variances.size()));
    double quad = 0.0;
    double logdet = 0.0;
    for (std::size_t j = 0; j < phi.size(); ++j) {
        const double d = phi[j] - theta[j];
        quad += d * d / variances[j];
        logdet += std::log(variances[j]);
    }
    return -0.5 * quad - 0.5 * logdet - 0.5 * static_cast<double>(phi.size()) * kLog2Pi;
}

}  // namespace annmix
