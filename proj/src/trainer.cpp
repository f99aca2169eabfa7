#include "annmix/trainer.hpp"

#include <cmath>
#include <numeric>

#include <json.hpp>

#include "annmix/objective.hpp"
#include "annmix/rng.hpp"

namespace annmix {

OptimizerState OptimizerState::zeros(std::size_t size) {
    return {std::vector<double>(size, 0.0), std::vector<double>(size, 0.0), 0};
}

void adam_step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
               const TrainConfig& config) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
        params.size() != state.second_moment.size())
        throw std::invalid_argument("Adam: parameter, gradient and state sizes differ");
    ++state.step;
    const double b1 = config.beta1;
    const double b2 = config.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    double* m = state.first_moment.data();
    double* v = state.second_moment.data();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(params.size()); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double g = grads[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
    }
}

InterceptCovariance estimate_intercept_covariance(std::span<const double> effects, std::size_t dim, double floor) {
    const auto n = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(n, n);
    const std::size_t count = dim == 0 ? 0 : effects.size() / dim;
    for (std::size_t a = 0; a < count; ++a) {
        Eigen::Map<const Eigen::VectorXd> rho(effects.data() + a * dim, n);
        sigma.noalias() += rho * rho.transpose();
    }
    if (count > 0) sigma /= static_cast<double>(count);
    sigma += floor * Eigen::MatrixXd::Identity(n, n);
    sigma = 0.5 * (sigma + sigma.transpose());
    return InterceptCovariance::from_matrix(sigma);
}

std::vector<double> estimate_slope_variances(std::span<const double> slopes, std::span<const double> theta,
                                             double floor) {
    const std::size_t p = theta.size();
    const std::size_t count = p == 0 ? 0 : slopes.size() / p;
    std::vector<double> var(p, 0.0);
    for (std::size_t a = 0; a < count; ++a)
        for (std::size_t j = 0; j < p; ++j) {
            const double d = slopes[a * p + j] - theta[j];
            var[j] += d * d;
        }
    for (double& v : var) v = (count > 0 ? v / static_cast<double>(count) : 0.0) + floor;
    return var;
}

CovarianceState update_covariance(const FittedModel& model, double floor) {
    CovarianceState cov;
    cov.floor = floor;
    const auto& layout = model.layout();
    const auto params = model.params();
    if (model.spec().has_intercepts())
        cov.intercept = estimate_intercept_covariance(
            params.subspan(layout.intercepts_offset(), layout.annotators * layout.intercept_dim),
            layout.intercept_dim, floor);
    if (model.spec().has_slopes())
        cov.slope_variances = estimate_slope_variances(
            params.subspan(layout.slopes_offset(), layout.annotators * layout.head.size()), model.theta().values(),
            floor);
    return cov;
}

bool should_stop(double previous_loss, double current_loss, double tolerance) {
    return std::abs(current_loss - previous_loss) < tolerance;
}

FitResult fit(const ModelSpec& spec, const Dataset& train, const TrainConfig& config) {
    if (train.records().empty()) throw TrainingError("cannot fit on an empty dataset");
    if (!(train.scale() == spec.scale)) throw TrainingError("dataset scale does not match the model spec");
    if (train.feature_dim() != spec.input_dim)
        throw TrainingError("features have dimension " + std::to_string(train.feature_dim()) + ", model expects " +
                            std::to_string(spec.input_dim));
    if (config.batch_size == 0) throw TrainingError("batch size must be positive");

    Rng init_rng(config.seed);
    std::vector<std::string> annotators(train.annotators().begin(), train.annotators().end());
    FitResult result{FittedModel::initial(spec, std::move(annotators), init_rng, config.covariance_floor), {}};
    FittedModel& model = result.model;

    const std::size_t n = train.records().size();
    auto state = OptimizerState::zeros(model.params().size());
    std::vector<std::size_t> order(n);
    std::optional<double> previous;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(std::span(order));

        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
            const std::size_t end = std::min(n, begin + config.batch_size);
            std::span<const std::size_t> batch(order.data() + begin, end - begin);
            const BatchObjective obj = objective_and_gradient(model, train, batch, n);
            if (!std::isfinite(obj.loss))
                throw TrainingError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(batches + 1) + " (" + to_string(spec.effects) + " model)");
            adam_step(model.mutable_params(), obj.gradient, state, config);
            loss_sum += obj.loss;
            ++batches;
        }
        const double mean_loss = loss_sum / static_cast<double>(batches);
        if (spec.has_intercepts()) model.set_covariance(update_covariance(model, config.covariance_floor));

        EpochLog entry;
        entry.epoch = epoch;
        entry.mean_loss = mean_loss;
        entry.covariance_trace = model.covariance().trace();
        if (model.layout().has_nu0) entry.nu0 = model.nu0();
        result.log.push_back(entry);

        if (previous && should_stop(*previous, mean_loss, config.early_stop_tolerance)) break;
        previous = mean_loss;
    }
    return result;
}

std::string training_log_jsonl(std::span<const EpochLog> log) {
    std::string out;
    for (const auto& e : log) {
        nlohmann::ordered_json j;
        j["epoch"] = e.epoch;
        j["mean_loss"] = e.mean_loss;
        j["covariance_trace"] = e.covariance_trace;
        j["nu0"] = e.nu0 ? nlohmann::ordered_json(*e.nu0) : nlohmann::ordered_json(nullptr);
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace annmix
