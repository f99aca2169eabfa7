#include "annmix/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "annmix/metrics.hpp"
#include "annmix/rng.hpp"

namespace annmix {

bool BiasProfile::is_sparse_at(double h, double nu0) const {
    return precision_offset < sparsity_threshold(h, shift, nu0);
}

namespace {

BiasProfile make_profile(const std::string& id, std::span<const double> rho, bool categorical) {
    BiasProfile p;
    p.annotator = id;
    if (categorical) {
        const std::vector<double> zeros(rho.size(), 0.0);
        p.class_bias = categorical_predict(zeros, rho);
    } else {
        p.precision_offset = rho[0];
        p.shift = rho[1];
        p.shift_transformed = logistic(rho[1]);
    }
    return p;
}

// Intercept of annotator a, optionally plus h_phi(0) - h_theta(0).
std::vector<double> effective_intercept(const FittedModel& model, std::size_t a, bool slope_extension) {
    const auto rho = model.intercept(a);
    std::vector<double> out(rho.begin(), rho.end());
    if (slope_extension && model.spec().has_slopes()) {
        const std::vector<double> zero(model.spec().input_dim, 0.0);
        const auto annot = head_forward(model.slope_head(a), zero);
        const auto proto = head_forward(model.theta(), zero);
        if (model.spec().scale.is_categorical())
            for (std::size_t c = 0; c < out.size(); ++c) out[c] += annot[c] - proto[c];
        else
            out[1] += annot[0] - proto[0];
    }
    return out;
}

}  // namespace

std::vector<BiasProfile> bias_profiles(const FittedModel& model, bool slope_extension) {
    return bias_profiles(std::span<const FittedModel>(&model, 1), slope_extension);
}

std::vector<BiasProfile> bias_profiles(std::span<const FittedModel> models, bool slope_extension) {
    if (models.empty()) throw std::invalid_argument("no models to profile");
    const auto& spec = models.front().spec();
    if (!spec.has_intercepts()) throw std::invalid_argument("the fixed model has no annotator effects to profile");
    const bool categorical = spec.scale.is_categorical();

    std::vector<std::string> order;
    std::map<std::string, std::pair<std::vector<double>, int>> sums;
    for (const auto& m : models) {
        if (!(m.spec() == spec)) throw std::invalid_argument("fold models have different specs");
        for (std::size_t a = 0; a < m.annotators().size(); ++a) {
            const auto& id = m.annotators()[a];
            const auto rho = effective_intercept(m, a, slope_extension);
            auto [it, inserted] = sums.try_emplace(id, std::vector<double>(rho.size(), 0.0), 0);
            if (inserted) order.push_back(id);
            for (std::size_t r = 0; r < rho.size(); ++r) it->second.first[r] += rho[r];
            ++it->second.second;
        }
    }
    std::vector<BiasProfile> out;
    out.reserve(order.size());
    for (const auto& id : order) {
        auto [sum, count] = sums.at(id);
        for (double& v : sum) v /= count;
        out.push_back(make_profile(id, sum, categorical));
    }
    return out;
}

double quantile(std::span<const double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

BiasDispersion bias_dispersion(std::span<const BiasProfile> profiles) {
    if (profiles.size() < 4) throw std::invalid_argument("bias dispersion needs at least 4 profiles");
    const std::size_t k = profiles.front().class_bias.size();
    if (k == 0) throw std::invalid_argument("bias dispersion needs categorical profiles");
    std::vector<std::vector<double>> columns(k, std::vector<double>(profiles.size()));
    for (std::size_t a = 0; a < profiles.size(); ++a) {
        if (profiles[a].class_bias.size() != k) throw std::invalid_argument("profiles have different class counts");
        for (std::size_t c = 0; c < k; ++c) columns[c][a] = profiles[a].class_bias[c];
    }
    BiasDispersion d;
    for (const auto& col : columns) d.iqr.emplace_back(quantile(col, 0.25), quantile(col, 0.75));
    d.correlation.assign(k, std::vector<std::optional<double>>(k));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) d.correlation[i][j] = spearman(columns[i], columns[j]);
    return d;
}

double sparsity_threshold(double h, double rho2, double nu0) {
    const double mu = logistic(h + rho2);
    return -std::log(std::max(mu, 1.0 - mu)) - nu0;
}

std::vector<BoundaryPoint> sparsity_boundary(double h, double nu0) {
    std::vector<BoundaryPoint> out;
    out.reserve(kBoundaryGridPoints);
    for (int i = 0; i < kBoundaryGridPoints; ++i) {
        const double rho2 = -kBoundaryGridLimit + 2.0 * kBoundaryGridLimit * i / (kBoundaryGridPoints - 1);
        out.push_back({rho2, logistic(rho2), sparsity_threshold(h, rho2, nu0)});
    }
    return out;
}

std::vector<BoundaryPoint> sparsity_boundary(double h, const FittedModel& model) {
    if (model.spec().scale.is_categorical()) throw std::invalid_argument("sparsity boundary needs a continuous model");
    return sparsity_boundary(h, model.nu0());
}

CorrelationResult precision_bias_correlation(std::span<const BiasProfile> profiles, std::size_t permutations,
                                             std::uint64_t seed) {
    if (profiles.size() < 4) throw std::invalid_argument("precision-bias correlation needs at least 4 profiles");
    std::vector<double> precision, bias;
    for (const auto& p : profiles) {
        precision.push_back(p.precision_offset);
        bias.push_back(p.shift_transformed);
    }
    CorrelationResult result;
    result.r = spearman(precision, bias);
    result.permutations = permutations;
    if (!result.r || permutations == 0) return result;

    const auto rx = average_ranks(precision);
    auto ry = average_ranks(bias);
    Rng rng(seed);
    std::size_t extreme = 0;
    for (std::size_t i = 0; i < permutations; ++i) {
        rng.shuffle(std::span(ry));
        const auto r = pearson(rx, ry);
        if (r && std::abs(*r) >= std::abs(*result.r) - 1e-12) ++extreme;
    }
    result.p = (1.0 + static_cast<double>(extreme)) / (1.0 + static_cast<double>(permutations));
    return result;
}

std::string profiles_to_csv(std::span<const BiasProfile> profiles, bool categorical) {
    std::ostringstream out;
    out.precision(17);
    if (categorical) {
        const std::size_t k = profiles.empty() ? 0 : profiles.front().class_bias.size();
        out << "annotator";
        for (std::size_t c = 0; c < k; ++c) out << ",class_" << c;
        out << '\n';
        for (const auto& p : profiles) {
            out << p.annotator;
            for (double v : p.class_bias) out << ',' << v;
            out << '\n';
        }
    } else {
        out << "annotator,precision_offset,shift,shift_transformed\n";
        for (const auto& p : profiles)
            out << p.annotator << ',' << p.precision_offset << ',' << p.shift << ',' << p.shift_transformed << '\n';
    }
    return out.str();
}

std::string boundary_to_csv(std::span<const std::pair<double, std::vector<BoundaryPoint>>> curves) {
    std::ostringstream out;
    out.precision(17);
    out << "h,rho2,shift_transformed,rho1_threshold\n";
    for (const auto& [h, points] : curves)
        for (const auto& p : points) out << h << ',' << p.rho2 << ',' << p.shift_transformed << ',' << p.rho1_threshold << '\n';
    return out.str();
}

}  // namespace annmix
