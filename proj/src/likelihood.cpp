#include "annmix/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace annmix {

namespace {

// Degenerate shape parameters yield NaN/inf instead of exceptions, so that
// callers (including OpenMP regions) see a non-finite loss.
using QuietPolicy = boost::math::policies::policy<boost::math::policies::domain_error<boost::math::policies::ignore_error>,
                                                  boost::math::policies::pole_error<boost::math::policies::ignore_error>,
                                                  boost::math::policies::overflow_error<boost::math::policies::ignore_error>,
                                                  boost::math::policies::evaluation_error<boost::math::policies::ignore_error>>;

}  // namespace

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::vector<double> categorical_predict(std::span<const double> h, std::span<const double> rho) {
    if (h.size() != rho.size()) throw std::invalid_argument("potential and intercept sizes differ");
    std::vector<double> p(h.size());
    double max = -INFINITY;
    for (std::size_t i = 0; i < h.size(); ++i) {
        p[i] = h[i] + rho[i];
        max = std::max(max, p[i]);
    }
    double sum = 0.0;
    for (double& v : p) {
        v = std::exp(v - max);
        sum += v;
    }
    for (double& v : p) v /= sum;
    return p;
}

BetaParams beta_params(double h, std::span<const double> rho, BetaLink link) {
    if (rho.size() != 2) throw std::invalid_argument("continuous intercept must have 2 components");
    BetaParams p;
    p.mu = logistic(h + rho[1]);
    p.nu = std::exp(std::clamp(rho[0] + link.nu0, -kLogPrecisionClamp, kLogPrecisionClamp));
    p.alpha = p.mu * p.nu;
    p.beta = (1.0 - p.mu) * p.nu;
    return p;
}

double categorical_nll(std::span<const double> probs, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
        throw std::out_of_range("class index out of range");
    return -std::log(std::max(probs[static_cast<std::size_t>(label)], kProbabilityFloor));
}

double log_beta_function(double a, double b) {
    return boost::math::lgamma(a, QuietPolicy{}) + boost::math::lgamma(b, QuietPolicy{}) -
           boost::math::lgamma(a + b, QuietPolicy{});
}

double beta_nll(const BetaParams& p, double y) {
    if (!(y > 0.0 && y < 1.0)) throw std::domain_error("Beta likelihood needs 0 < y < 1");
    return -((p.alpha - 1.0) * std::log(y) + (p.beta - 1.0) * std::log1p(-y) - log_beta_function(p.alpha, p.beta));
}

}  // namespace annmix
