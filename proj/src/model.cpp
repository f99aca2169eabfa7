#include "annmix/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "annmix/io.hpp"

namespace annmix {

using nlohmann::ordered_json;

std::string to_string(EffectsMode mode) {
    switch (mode) {
        case EffectsMode::Fixed: return "fixed";
        case EffectsMode::Intercepts: return "intercepts";
        case EffectsMode::Slopes: return "slopes";
    }
    return "?";
}

EffectsMode parse_effects(std::string_view name) {
    if (name == "fixed") return EffectsMode::Fixed;
    if (name == "intercepts") return EffectsMode::Intercepts;
    if (name == "slopes") return EffectsMode::Slopes;
    throw InputError("unknown effects mode '" + std::string(name) + "'");
}

ParamLayout::ParamLayout(const ModelSpec& spec, std::size_t num_annotators)
    : head(spec.head_shape()),
      annotators(spec.has_intercepts() ? num_annotators : 0),
      intercept_dim(spec.has_intercepts() ? static_cast<std::size_t>(spec.scale.intercept_dim()) : 0),
      has_nu0(!spec.scale.is_categorical()),
      has_slopes(spec.has_slopes()) {}

FittedModel::FittedModel(ModelSpec spec, std::vector<std::string> annotators, std::vector<double> params,
                         CovarianceState covariance)
    : spec_(spec),
      layout_(spec, annotators.size()),
      annotators_(spec.has_intercepts() ? std::move(annotators) : std::vector<std::string>{}),
      params_(std::move(params)),
      covariance_(std::move(covariance)) {
    if (params_.size() != layout_.size())
        throw std::invalid_argument("parameter vector has " + std::to_string(params_.size()) +
                                    " entries, layout needs " + std::to_string(layout_.size()));
    for (std::size_t a = 0; a < annotators_.size(); ++a)
        if (!annotator_index_.emplace(annotators_[a], a).second)
            throw std::invalid_argument("duplicate annotator '" + annotators_[a] + "'");
    if (spec_.has_intercepts() && covariance_.intercept.dim() != layout_.intercept_dim)
        throw std::invalid_argument("intercept covariance dimension mismatch");
    if (spec_.has_slopes() && covariance_.slope_variances.size() != layout_.head.size())
        throw std::invalid_argument("slope variance dimension mismatch");
}

FittedModel FittedModel::initial(const ModelSpec& spec, std::vector<std::string> annotators, Rng& rng,
                                 double covariance_floor) {
    const ParamLayout layout(spec, annotators.size());
    std::vector<double> params(layout.size(), 0.0);
    const HeadParams theta = HeadParams::fan_in_uniform(layout.head, rng);
    std::copy(theta.values.begin(), theta.values.end(), params.begin());
    if (layout.has_slopes)
        for (std::size_t a = 0; a < layout.annotators; ++a)
            std::copy(theta.values.begin(), theta.values.end(),
                      params.begin() + static_cast<std::ptrdiff_t>(layout.slope_offset(a)));
    CovarianceState cov;
    cov.floor = covariance_floor;
    if (spec.has_intercepts()) cov.intercept = InterceptCovariance::identity(layout.intercept_dim);
    if (spec.has_slopes()) cov.slope_variances.assign(layout.head.size(), 1.0);
    return FittedModel(spec, std::move(annotators), std::move(params), std::move(cov));
}

std::optional<std::size_t> FittedModel::find_annotator(std::string_view id) const {
    auto it = annotator_index_.find(std::string(id));
    if (it == annotator_index_.end()) return std::nullopt;
    return it->second;
}

HeadView FittedModel::theta() const {
    return HeadView(layout_.head, std::span<const double>(params_).subspan(0, layout_.head.size()));
}

HeadView FittedModel::slope_head(std::size_t annotator) const {
    return HeadView(layout_.head,
                    std::span<const double>(params_).subspan(layout_.slope_offset(annotator), layout_.head.size()));
}

std::span<const double> FittedModel::intercept(std::size_t annotator) const {
    return std::span<const double>(params_).subspan(layout_.intercept_offset(annotator), layout_.intercept_dim);
}

namespace {

Prediction predict_with(const FittedModel& model, const HeadView& head, std::span<const double> rho,
                        std::span<const double> z) {
    const auto h = head_forward(head, z);
    if (model.spec().scale.is_categorical()) return categorical_predict(h, rho);
    return beta_params(h[0], rho, model.link());
}

}  // namespace

Prediction predict_indexed(const FittedModel& model, std::span<const double> z, std::optional<std::size_t> annotator) {
    const auto& spec = model.spec();
    const std::vector<double> zeros(static_cast<std::size_t>(spec.scale.intercept_dim()), 0.0);
    if (!spec.has_intercepts() || !annotator) return predict_with(model, model.theta(), zeros, z);
    const auto rho = model.intercept(*annotator);
    if (spec.has_slopes()) return predict_with(model, model.slope_head(*annotator), rho, z);
    return predict_with(model, model.theta(), rho, z);
}

Prediction predict(const FittedModel& model, std::span<const double> z, std::optional<std::string_view> annotator) {
    std::optional<std::size_t> index;
    if (annotator) index = model.find_annotator(*annotator);
    return predict_indexed(model, z, index);
}

MarginalPrediction predict_marginalized(const FittedModel& model, std::span<const double> z, int num_samples,
                                        std::uint64_t seed) {
    const auto& spec = model.spec();
    if (!spec.has_intercepts()) throw std::invalid_argument("marginalization needs a random-effects model");
    if (num_samples < 1) throw std::invalid_argument("num_samples must be at least 1");

    Rng rng(seed);
    const auto& cov = model.covariance();
    const std::size_t r_dim = model.layout().intercept_dim;
    const HeadShape shape = model.layout().head;
    const auto theta = model.theta().values();

    std::vector<double> rho(r_dim), eps(r_dim);
    std::vector<double> phi(theta.begin(), theta.end());
    std::vector<double> probs_sum(static_cast<std::size_t>(spec.scale.output_dim()), 0.0);
    double mean_sum = 0.0;
    const auto& lower = cov.intercept.cholesky();

    for (int s = 0; s < num_samples; ++s) {
        for (auto& e : eps) e = rng.normal();
        for (std::size_t i = 0; i < r_dim; ++i) {
            double v = 0.0;
            for (std::size_t j = 0; j <= i; ++j)
                v += lower(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * eps[j];
            rho[i] = v;
        }
        if (spec.has_slopes())
            for (std::size_t j = 0; j < phi.size(); ++j)
                phi[j] = theta[j] + std::sqrt(cov.slope_variances[j]) * rng.normal();
        const HeadView head = spec.has_slopes() ? HeadView(shape, phi) : model.theta();
        const Prediction p = predict_with(model, head, rho, z);
        if (spec.scale.is_categorical()) {
            const auto& probs = std::get<std::vector<double>>(p);
            for (std::size_t c = 0; c < probs.size(); ++c) probs_sum[c] += probs[c];
        } else {
            mean_sum += std::get<BetaParams>(p).mu;
        }
    }
    if (spec.scale.is_categorical()) {
        for (auto& v : probs_sum) v /= num_samples;
        return probs_sum;
    }
    return mean_sum / num_samples;
}

namespace {

double argmax_lowest(const std::vector<double>& probs) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.size(); ++c)
        if (probs[c] > probs[best]) best = c;
    return static_cast<double>(best);
}

}  // namespace

double point_prediction(const Prediction& prediction) {
    if (const auto* probs = std::get_if<std::vector<double>>(&prediction)) return argmax_lowest(*probs);
    return std::get<BetaParams>(prediction).mu;
}

double point_prediction(const MarginalPrediction& prediction) {
    if (const auto* probs = std::get_if<std::vector<double>>(&prediction)) return argmax_lowest(*probs);
    return std::get<double>(prediction);
}

std::string model_to_json(const FittedModel& model) {
    const auto& spec = model.spec();
    const auto& layout = model.layout();
    const auto params = model.params();
    ordered_json j;
    j["format"] = "annmix-model";
    j["layout_version"] = kLayoutVersion;
    ordered_json s;
    s["effects"] = to_string(spec.effects);
    s["scale"] = to_string(spec.scale.kind);
    s["num_classes"] = spec.scale.num_classes;
    s["boundary_epsilon"] = spec.scale.boundary_epsilon;
    s["input_dim"] = spec.input_dim;
    s["hidden_dim"] = spec.hidden_dim;
    j["spec"] = s;
    auto theta = model.theta().values();
    j["theta"] = std::vector<double>(theta.begin(), theta.end());
    j["nu0"] = layout.has_nu0 ? ordered_json(model.nu0()) : ordered_json(nullptr);
    j["annotators"] = std::vector<std::string>(model.annotators().begin(), model.annotators().end());

    ordered_json intercepts = ordered_json::object();
    ordered_json slopes = ordered_json::object();
    for (std::size_t a = 0; a < layout.annotators; ++a) {
        const auto& id = model.annotators()[a];
        auto rho = model.intercept(a);
        intercepts[id] = std::vector<double>(rho.begin(), rho.end());
        if (layout.has_slopes) {
            auto phi = params.subspan(layout.slope_offset(a), layout.head.size());
            slopes[id] = std::vector<double>(phi.begin(), phi.end());
        }
    }
    j["intercepts"] = std::move(intercepts);
    j["slopes"] = std::move(slopes);

    ordered_json cov;
    cov["floor"] = model.covariance().floor;
    const auto& sigma = model.covariance().intercept.sigma();
    ordered_json rows = ordered_json::array();
    for (Eigen::Index r = 0; r < sigma.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(sigma.cols()));
        for (Eigen::Index c = 0; c < sigma.cols(); ++c) row[static_cast<std::size_t>(c)] = sigma(r, c);
        rows.push_back(row);
    }
    cov["intercept"] = std::move(rows);
    cov["slope_variances"] = model.covariance().slope_variances;
    j["covariance"] = std::move(cov);
    return j.dump(1) + "\n";
}

FittedModel model_from_json(std::string_view text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        throw InputError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format") != "annmix-model") throw InputError("not an annmix model file");
        if (j.at("layout_version") != kLayoutVersion)
            throw InputError("unsupported parameter layout '" + j.at("layout_version").get<std::string>() + "'");
        const auto& s = j.at("spec");
        ModelSpec spec;
        spec.effects = parse_effects(s.at("effects").get<std::string>());
        const auto scale = s.at("scale").get<std::string>();
        if (scale == "categorical")
            spec.scale = ResponseScale::categorical(s.at("num_classes").get<int>());
        else if (scale == "continuous")
            spec.scale = ResponseScale::continuous(s.at("boundary_epsilon").get<double>());
        else
            throw InputError("unknown scale '" + scale + "'");
        spec.input_dim = s.at("input_dim").get<std::size_t>();
        spec.hidden_dim = s.at("hidden_dim").get<std::size_t>();

        auto annotators = j.at("annotators").get<std::vector<std::string>>();
        const ParamLayout layout(spec, annotators.size());
        std::vector<double> params(layout.size(), 0.0);
        auto theta = j.at("theta").get<std::vector<double>>();
        if (theta.size() != layout.head.size()) throw InputError("theta has the wrong size");
        std::copy(theta.begin(), theta.end(), params.begin());
        if (layout.has_nu0) params[layout.nu0_offset()] = j.at("nu0").get<double>();
        for (std::size_t a = 0; a < layout.annotators; ++a) {
            auto rho = j.at("intercepts").at(annotators[a]).get<std::vector<double>>();
            if (rho.size() != layout.intercept_dim) throw InputError("intercept has the wrong size");
            std::copy(rho.begin(), rho.end(), params.begin() + static_cast<std::ptrdiff_t>(layout.intercept_offset(a)));
            if (layout.has_slopes) {
                auto phi = j.at("slopes").at(annotators[a]).get<std::vector<double>>();
                if (phi.size() != layout.head.size()) throw InputError("slope head has the wrong size");
                std::copy(phi.begin(), phi.end(), params.begin() + static_cast<std::ptrdiff_t>(layout.slope_offset(a)));
            }
        }
        CovarianceState cov;
        cov.floor = j.at("covariance").at("floor").get<double>();
        const auto rows = j.at("covariance").at("intercept").get<std::vector<std::vector<double>>>();
        if (!rows.empty()) {
            const auto n = static_cast<Eigen::Index>(rows.size());
            Eigen::MatrixXd sigma(n, n);
            for (Eigen::Index r = 0; r < n; ++r) {
                if (rows[static_cast<std::size_t>(r)].size() != rows.size())
                    throw InputError("intercept covariance is not square");
                for (Eigen::Index c = 0; c < n; ++c) sigma(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            }
            cov.intercept = InterceptCovariance::from_matrix(sigma);
        }
        cov.slope_variances = j.at("covariance").at("slope_variances").get<std::vector<double>>();
        return FittedModel(spec, std::move(annotators), std::move(params), std::move(cov));
    } catch (const ordered_json::exception& e) {
        throw InputError(std::string("malformed model file: ") + e.what());
    } catch (const std::domain_error& e) {
        throw InputError(std::string("malformed model file: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("malformed model file: ") + e.what());
    }
}

}  // namespace annmix
