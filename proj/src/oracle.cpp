#include "annmix/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "annmix/io.hpp"
#include "annmix/metrics.hpp"
#include "annmix/rng.hpp"

namespace annmix {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ResponseScale scale_from(const std::string& kind, int classes, double eps) {
    if (kind == "categorical") return ResponseScale::categorical(classes);
    if (kind == "continuous") return ResponseScale::continuous(eps);
    throw InputError("unknown scale '" + kind + "'");
}

void validate(const SimulationSpec& s) {
    if (s.scale.is_categorical() && s.scale.num_classes < 2) throw InputError("simulation needs at least 2 classes");
    if (s.num_items == 0 || s.feature_dim == 0 || s.hidden_dim == 0 || s.num_annotators == 0)
        throw InputError("simulation sizes must be positive");
    if (s.annotations_per_item == 0 || s.annotations_per_item > s.num_annotators)
        throw InputError("annotations_per_item must be in [1, num_annotators]");
    if (s.num_predicates == 0 || s.num_structures == 0) throw InputError("tag vocabularies must be non-empty");
    if (s.intercept_sd < 0 || s.slope_sd < 0 || s.head_scale < 0) throw InputError("spreads must be non-negative");
    const auto r = static_cast<std::size_t>(s.scale.intercept_dim());
    if (!s.intercept_covariance.empty()) {
        if (s.intercept_covariance.size() != r) throw InputError("intercept_covariance has the wrong size");
        for (const auto& row : s.intercept_covariance)
            if (row.size() != r) throw InputError("intercept_covariance has the wrong size");
    }
}

Eigen::MatrixXd true_sigma(const SimulationSpec& s) {
    const auto r = static_cast<Eigen::Index>(s.scale.intercept_dim());
    if (s.effects == EffectsMode::Fixed) return Eigen::MatrixXd::Zero(r, r);
    if (s.intercept_covariance.empty()) return Eigen::MatrixXd::Identity(r, r) * (s.intercept_sd * s.intercept_sd);
    Eigen::MatrixXd m(r, r);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < r; ++j) m(i, j) = s.intercept_covariance[i][j];
    if (!m.isApprox(m.transpose())) throw InputError("intercept_covariance must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.eigenvalues().minCoeff() < -1e-12) throw InputError("intercept_covariance must be positive semidefinite");
    return m;
}

// Square root usable for singular sigma.
Eigen::MatrixXd psd_root(const Eigen::MatrixXd& sigma) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal();
}

std::string padded(const char* prefix, std::size_t i, int width) {
    std::string n = std::to_string(i);
    if (static_cast<int>(n.size()) < width) n.insert(0, static_cast<std::size_t>(width) - n.size(), '0');
    return prefix + n;
}

std::vector<double> truth_head(const SimulationSpec& s, const HeadShape& shape, Rng& rng) {
    std::vector<double> v(shape.size(), 0.0);
    const double w1_sd = 1.0 / std::sqrt(static_cast<double>(shape.input));
    for (std::size_t i = shape.w1_offset(); i < shape.b1_offset(); ++i) v[i] = w1_sd * rng.normal();
    if (s.zero_head) return v;
    const double w2_sd = s.head_scale * std::sqrt(2.0 / static_cast<double>(shape.hidden));
    for (std::size_t i = shape.w2_offset(); i < shape.b2_offset(); ++i) v[i] = w2_sd * rng.normal();
    return v;
}

}  // namespace

SimulationSpec simulation_spec_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("simulation spec: ") + e.what());
    }
    if (!j.is_object()) throw InputError("simulation spec must be a JSON object");
    SimulationSpec s;
    std::string kind = "categorical";
    int classes = 3;
    double eps = 0.005;
    try {
        for (auto& [key, value] : j.items()) {
            if (key == "scale") kind = value.get<std::string>();
            else if (key == "classes") classes = value.get<int>();
            else if (key == "epsilon") eps = value.get<double>();
            else if (key == "effects") s.effects = parse_effects(value.get<std::string>());
            else if (key == "num_items") s.num_items = value.get<std::size_t>();
            else if (key == "feature_dim") s.feature_dim = value.get<std::size_t>();
            else if (key == "hidden_dim") s.hidden_dim = value.get<std::size_t>();
            else if (key == "num_annotators") s.num_annotators = value.get<std::size_t>();
            else if (key == "annotations_per_item") s.annotations_per_item = value.get<std::size_t>();
            else if (key == "head_scale") s.head_scale = value.get<double>();
            else if (key == "zero_head") s.zero_head = value.get<bool>();
            else if (key == "intercept_covariance") s.intercept_covariance = value.get<std::vector<std::vector<double>>>();
            else if (key == "intercept_sd") s.intercept_sd = value.get<double>();
            else if (key == "slope_sd") s.slope_sd = value.get<double>();
            else if (key == "nu0") s.nu0 = value.get<double>();
            else if (key == "num_predicates") s.num_predicates = value.get<std::size_t>();
            else if (key == "num_structures") s.num_structures = value.get<std::size_t>();
            else if (key == "seed") s.seed = value.get<std::uint64_t>();
            else throw InputError("simulation spec: unknown key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("simulation spec: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("simulation spec: ") + e.what());
    }
    s.scale = scale_from(kind, classes, eps);
    validate(s);
    return s;
}

std::string simulation_spec_to_json(const SimulationSpec& s) {
    ordered_json j;
    j["scale"] = to_string(s.scale.kind);
    if (s.scale.is_categorical()) j["classes"] = s.scale.num_classes;
    else j["epsilon"] = s.scale.boundary_epsilon;
    j["effects"] = to_string(s.effects);
    j["num_items"] = s.num_items;
    j["feature_dim"] = s.feature_dim;
    j["hidden_dim"] = s.hidden_dim;
    j["num_annotators"] = s.num_annotators;
    j["annotations_per_item"] = s.annotations_per_item;
    j["head_scale"] = s.head_scale;
    j["zero_head"] = s.zero_head;
    if (!s.intercept_covariance.empty()) j["intercept_covariance"] = s.intercept_covariance;
    j["intercept_sd"] = s.intercept_sd;
    j["slope_sd"] = s.slope_sd;
    j["nu0"] = s.nu0;
    j["num_predicates"] = s.num_predicates;
    j["num_structures"] = s.num_structures;
    j["seed"] = s.seed;
    return j.dump(2) + "\n";
}

Simulation simulate(const SimulationSpec& s) {
    validate(s);
    const ModelSpec mspec{s.effects, s.scale, s.feature_dim, s.hidden_dim};
    const HeadShape shape = mspec.head_shape();
    const auto R = static_cast<std::size_t>(s.scale.intercept_dim());
    const std::size_t A = s.num_annotators;

    Rng head_rng(derive_seed(s.seed, 1));
    const std::vector<double> theta = truth_head(s, shape, head_rng);

    const Eigen::MatrixXd sigma = true_sigma(s);
    const Eigen::MatrixXd root = psd_root(sigma);
    std::vector<std::string> ids(A);
    std::vector<std::vector<double>> rho(A, std::vector<double>(R, 0.0));
    std::vector<std::vector<double>> phi(A);
    Rng effects_rng(derive_seed(s.seed, 2));
    for (std::size_t a = 0; a < A; ++a) {
        ids[a] = padded("a", a, 3);
        if (!mspec.has_intercepts()) continue;
        Eigen::VectorXd eps(static_cast<Eigen::Index>(R));
        for (auto& e : eps) e = effects_rng.normal();
        const Eigen::VectorXd r = root * eps;
        for (std::size_t c = 0; c < R; ++c) rho[a][c] = r(static_cast<Eigen::Index>(c));
        if (mspec.has_slopes()) {
            phi[a] = theta;
            for (double& w : phi[a]) w += s.slope_sd * effects_rng.normal();
        }
    }

    std::vector<Item> items(s.num_items);
    std::vector<AnnotationRecord> records;
    records.reserve(s.num_items * s.annotations_per_item);
    const std::uint64_t item_root = derive_seed(s.seed, 3);
    std::vector<std::size_t> pool(A);
    std::vector<double> pre(shape.hidden), out(shape.output);
    for (std::size_t i = 0; i < s.num_items; ++i) {
        Rng rng(derive_seed(item_root, i));
        Item& item = items[i];
        item.id = padded("i", i, 5);
        item.features.resize(s.feature_dim);
        for (double& x : item.features) x = rng.normal();
        item.predicate = padded("p", rng.below(s.num_predicates), 2);
        item.structure = padded("s", rng.below(s.num_structures), 2);

        // partial Fisher-Yates: the first m entries are the panel
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t j = 0; j < s.annotations_per_item; ++j)
            std::swap(pool[j], pool[j + rng.below(A - j)]);

        for (std::size_t j = 0; j < s.annotations_per_item; ++j) {
            const std::size_t a = pool[j];
            const std::vector<double>& head = mspec.has_slopes() ? phi[a] : theta;
            HeadView(shape, head).forward(item.features, pre, out);
            double label;
            if (s.scale.is_categorical()) {
                const auto probs = categorical_predict(out, rho[a]);
                label = static_cast<double>(rng.categorical(probs));
            } else {
                const BetaParams p = beta_params(out[0], rho[a], BetaLink{s.nu0});
                label = clamp_label(rng.beta(p.alpha, p.beta), s.scale.boundary_epsilon);
            }
            records.push_back({item.id, ids[a], label});
        }
    }
    Dataset dataset = Dataset::build(s.scale, std::move(items), records);

    // Truth annotators follow the dataset's order so the truth model lines
    // up with it; annotators that never appear go last.
    std::vector<std::size_t> order;
    std::vector<bool> seen(A, false);
    for (const auto& id : dataset.annotators()) {
        const auto a = static_cast<std::size_t>(std::stoul(id.substr(1)));
        order.push_back(a);
        seen[a] = true;
    }
    for (std::size_t a = 0; a < A; ++a)
        if (!seen[a]) order.push_back(a);

    const ParamLayout layout(mspec, A);
    std::vector<double> params(layout.size(), 0.0);
    std::copy(theta.begin(), theta.end(), params.begin());
    if (layout.has_nu0) params[layout.nu0_offset()] = s.nu0;
    std::vector<std::string> truth_ids;
    for (std::size_t pos = 0; pos < A; ++pos) {
        const std::size_t a = order[pos];
        truth_ids.push_back(ids[a]);
        if (mspec.has_intercepts())
            std::copy(rho[a].begin(), rho[a].end(), params.begin() + static_cast<std::ptrdiff_t>(layout.intercept_offset(pos)));
        if (mspec.has_slopes())
            std::copy(phi[a].begin(), phi[a].end(), params.begin() + static_cast<std::ptrdiff_t>(layout.slope_offset(pos)));
    }

    GroundTruth truth;
    truth.spec = s;
    truth.intercept_sigma = sigma;
    if (mspec.has_slopes()) truth.slope_variances.assign(shape.size(), s.slope_sd * s.slope_sd);

    CovarianceState cov;
    cov.floor = kDefaultCovarianceFloor;
    cov.intercept = InterceptCovariance::from_matrix(
        sigma + kDefaultCovarianceFloor * Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols()));
    if (mspec.has_slopes())
        for (double v : truth.slope_variances) cov.slope_variances.push_back(v + kDefaultCovarianceFloor);
    truth.model = FittedModel(mspec, std::move(truth_ids), std::move(params), std::move(cov));
    return {std::move(dataset), std::move(truth)};
}

std::string ground_truth_to_json(const GroundTruth& truth) {
    ordered_json j;
    j["format"] = "annmix-ground-truth";
    j["simulation"] = ordered_json::parse(simulation_spec_to_json(truth.spec));
    std::vector<std::vector<double>> sigma(static_cast<std::size_t>(truth.intercept_sigma.rows()));
    for (Eigen::Index i = 0; i < truth.intercept_sigma.rows(); ++i)
        for (Eigen::Index k = 0; k < truth.intercept_sigma.cols(); ++k) sigma[i].push_back(truth.intercept_sigma(i, k));
    j["intercept_sigma"] = sigma;
    j["slope_variances"] = truth.slope_variances;
    j["model"] = ordered_json::parse(model_to_json(truth.model));
    return j.dump(1) + "\n";
}

FittedModel model_from_truth(const GroundTruth& truth, double floor) {
    FittedModel m = truth.model;
    CovarianceState cov;
    cov.floor = floor;
    const auto& sigma = truth.intercept_sigma;
    cov.intercept =
        InterceptCovariance::from_matrix(sigma + floor * Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols()));
    for (double v : truth.slope_variances) cov.slope_variances.push_back(v + floor);
    m.set_covariance(std::move(cov));
    return m;
}

std::vector<double> finite_difference_grad(const ScalarFunction& loss, std::span<const double> params, double step) {
    std::vector<double> x(params.begin(), params.end());
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + step;
        const double up = loss(x);
        x[i] = saved - step;
        const double down = loss(x);
        x[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw std::domain_error("non-finite loss at coordinate " + std::to_string(i));
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

double brute_force_log_gamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("log gamma needs a positive argument");
    double shift = 0.0;
    while (x < 20.0) {
        shift += std::log(x);
        x += 1.0;
    }
    const double x2 = x * x;
    const double series = 1.0 / (12.0 * x) - 1.0 / (360.0 * x * x2) + 1.0 / (1260.0 * x * x2 * x2) -
                          1.0 / (1680.0 * x * x2 * x2 * x2);
    return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + series - shift;
}

double brute_force_categorical_nll(std::span<const double> logits, int label) {
    double total = 0.0;
    for (double l : logits) total += std::exp(l);
    return -std::log(std::exp(logits[static_cast<std::size_t>(label)]) / total);
}

double brute_force_beta_nll(double alpha, double beta, double y) {
    const double log_b = brute_force_log_gamma(alpha) + brute_force_log_gamma(beta) - brute_force_log_gamma(alpha + beta);
    return -((alpha - 1.0) * std::log(y) + (beta - 1.0) * std::log(1.0 - y) - log_b);
}

double brute_force_nll(const FittedModel& model, const Dataset& data, const Record& record) {
    const auto& spec = model.spec();
    const auto& layout = model.layout();
    const HeadShape shape = spec.head_shape();
    const auto params = model.params();
    const auto& z = data.items()[record.item].features;
    if (z.size() != shape.input) throw std::invalid_argument("feature dimension mismatch");

    std::optional<std::size_t> a;
    if (spec.has_intercepts()) a = model.find_annotator(data.annotators()[record.annotator]);
    const std::size_t head_at = (a && spec.has_slopes()) ? layout.slope_offset(*a) : 0;

    std::vector<double> hidden(shape.hidden);
    for (std::size_t j = 0; j < shape.hidden; ++j) {
        double s = params[head_at + shape.b1_offset() + j];
        for (std::size_t i = 0; i < shape.input; ++i) s += params[head_at + j * shape.input + i] * z[i];
        hidden[j] = s > 0.0 ? s : 0.0;
    }
    std::vector<double> h(shape.output);
    for (std::size_t o = 0; o < shape.output; ++o) {
        double s = params[head_at + shape.b2_offset() + o];
        for (std::size_t j = 0; j < shape.hidden; ++j) s += params[head_at + shape.w2_offset() + o * shape.hidden + j] * hidden[j];
        h[o] = s;
    }
    const std::size_t R = static_cast<std::size_t>(spec.scale.intercept_dim());
    std::vector<double> rho(R, 0.0);
    if (a)
        for (std::size_t c = 0; c < R; ++c) rho[c] = params[layout.intercept_offset(*a) + c];

    if (spec.scale.is_categorical()) {
        for (std::size_t c = 0; c < R; ++c) h[c] += rho[c];
        return brute_force_categorical_nll(h, record.class_index());
    }
    const double mu = 1.0 / (1.0 + std::exp(-(h[0] + rho[1])));
    const double log_nu = std::clamp(rho[0] + model.nu0(), -kLogPrecisionClamp, kLogPrecisionClamp);
    const double nu = std::exp(log_nu);
    return brute_force_beta_nll(mu * nu, (1.0 - mu) * nu, record.label);
}

namespace {

// Removes the direction softmax cannot see (categorical only).
Eigen::MatrixXd centering(std::size_t r, bool categorical) {
    const auto n = static_cast<Eigen::Index>(r);
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(n, n);
    if (categorical) c.array() -= 1.0 / static_cast<double>(r);
    return c;
}

}  // namespace

RecoveryReport recovery_report(const FittedModel& fitted, const GroundTruth& truth, std::size_t grid_items,
                               std::uint64_t seed) {
    const FittedModel& tm = truth.model;
    if (fitted.spec().scale != tm.spec().scale) throw std::invalid_argument("fitted and true scales differ");
    if (fitted.spec().input_dim != tm.spec().input_dim) throw std::invalid_argument("fitted and true inputs differ");
    const bool categorical = tm.spec().scale.is_categorical();
    RecoveryReport report;

    if (fitted.spec().has_intercepts() && tm.spec().has_intercepts()) {
        if (fitted.annotators().size() != tm.annotators().size())
            throw std::invalid_argument("fitted and true annotator sets differ");
        const auto R = static_cast<std::size_t>(tm.spec().scale.intercept_dim());
        std::vector<double> est, ref;
        for (std::size_t a = 0; a < fitted.annotators().size(); ++a) {
            const auto t = tm.find_annotator(fitted.annotators()[a]);
            if (!t) throw std::invalid_argument("annotator '" + fitted.annotators()[a] + "' is not in the truth");
            const auto re = fitted.intercept(a);
            const auto rt = tm.intercept(*t);
            double me = 0.0, mt = 0.0;
            if (categorical) {
                me = std::accumulate(re.begin(), re.end(), 0.0) / static_cast<double>(R);
                mt = std::accumulate(rt.begin(), rt.end(), 0.0) / static_cast<double>(R);
            }
            for (std::size_t c = 0; c < R; ++c) {
                est.push_back(re[c] - me);
                ref.push_back(rt[c] - mt);
            }
        }
        report.rho_spearman = spearman(est, ref);

        const Eigen::MatrixXd c = centering(R, categorical);
        const Eigen::MatrixXd s_est = c * fitted.covariance().intercept.sigma() * c;
        const Eigen::MatrixXd s_true = c * truth.intercept_sigma * c;
        const double denom = s_true.norm();
        report.sigma_relative_error = denom > 0.0 ? (s_est - s_true).norm() / denom : (s_est - s_true).norm();
    }

    Rng rng(seed);
    std::vector<double> est, ref;
    std::vector<double> z(tm.spec().input_dim);
    for (std::size_t i = 0; i < grid_items; ++i) {
        for (double& x : z) x = rng.normal();
        const Prediction pe = predict_indexed(fitted, z, std::nullopt);
        const Prediction pt = predict_indexed(tm, z, std::nullopt);
        if (categorical) {
            const auto& ve = std::get<std::vector<double>>(pe);
            const auto& vt = std::get<std::vector<double>>(pt);
            est.insert(est.end(), ve.begin(), ve.end());
            ref.insert(ref.end(), vt.begin(), vt.end());
        } else {
            est.push_back(std::get<BetaParams>(pe).mu);
            ref.push_back(std::get<BetaParams>(pt).mu);
        }
    }
    report.theta_prediction_corr = pearson(est, ref);
    return report;
}

}  // namespace annmix
