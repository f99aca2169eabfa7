#include "annmix/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/digamma.hpp>

namespace annmix {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Non-throwing digamma: degenerate shapes surface as a non-finite loss.
using QuietPolicy = boost::math::policies::policy<boost::math::policies::domain_error<boost::math::policies::ignore_error>,
                                                  boost::math::policies::pole_error<boost::math::policies::ignore_error>,
                                                  boost::math::policies::overflow_error<boost::math::policies::ignore_error>,
                                                  boost::math::policies::evaluation_error<boost::math::policies::ignore_error>>;

double digamma(double x) { return boost::math::digamma(x, QuietPolicy{}); }

void check_alignment(const FittedModel& model, const Dataset& data, std::span<const std::size_t> batch) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    if (data.feature_dim() != model.spec().input_dim)
        throw std::invalid_argument("dataset features do not match the head input dimension");
    if (model.spec().has_intercepts()) {
        if (data.annotators().size() != model.annotators().size())
            throw std::invalid_argument("dataset and model annotator tables differ");
        for (std::size_t a = 0; a < data.annotators().size(); ++a)
            if (data.annotators()[a] != model.annotators()[a])
                throw std::invalid_argument("dataset and model annotator tables differ");
    }
}

// Where one record's gradient goes.
struct GradientSink {
    std::span<double> head;
    std::span<double> rho;   // empty without intercepts
    double* nu0 = nullptr;   // null for categorical
};

// NLL of one record and `weight` times its gradient, accumulated into sink.
double record_nll(const FittedModel& model, const HeadView& head, std::span<const double> rho,
                  std::span<const double> z, const Record& rec, double weight, const GradientSink& sink,
                  std::span<double> pre, std::span<double> out, std::span<double> grad_out) {
    head.forward(z, pre, out);
    if (model.spec().scale.is_categorical()) {
        const auto probs = categorical_predict(out, rho);
        const auto y = static_cast<std::size_t>(rec.class_index());
        const double nll = categorical_nll(probs, rec.class_index());
        const bool floored = probs[y] <= kProbabilityFloor;
        for (std::size_t c = 0; c < probs.size(); ++c)
            grad_out[c] = floored ? 0.0 : weight * (probs[c] - (c == y ? 1.0 : 0.0));
        head.backward(z, pre, grad_out, sink.head);
        for (std::size_t c = 0; c < sink.rho.size(); ++c) sink.rho[c] += grad_out[c];
        return nll;
    }

    const double log_precision = rho[0] + model.nu0();
    const BetaParams p = beta_params(out[0], rho, model.link());
    const double y = rec.label;
    const double nll = beta_nll(p, y);
    const double psi_nu = digamma(p.nu);
    const double d_alpha = -std::log(y) + digamma(p.alpha) - psi_nu;
    const double d_beta = -std::log1p(-y) + digamma(p.beta) - psi_nu;
    const double d_mu = p.nu * (d_alpha - d_beta);
    const double d_nu = p.mu * d_alpha + (1.0 - p.mu) * d_beta;
    const double d_shift = d_mu * p.mu * (1.0 - p.mu);
    const double d_logprec = std::abs(log_precision) < kLogPrecisionClamp ? d_nu * p.nu : 0.0;

    grad_out[0] = weight * d_shift;
    head.backward(z, pre, grad_out, sink.head);
    if (!sink.rho.empty()) {
        sink.rho[0] += weight * d_logprec;
        sink.rho[1] += weight * d_shift;
    }
    *sink.nu0 += weight * d_logprec;
    return nll;
}

struct RecordContext {
    HeadView head;
    std::span<const double> rho;
};

RecordContext context_for(const FittedModel& model, const Record& rec, std::span<const double> zeros) {
    const auto& spec = model.spec();
    if (!spec.has_intercepts()) return {model.theta(), zeros};
    if (spec.has_slopes()) return {model.slope_head(rec.annotator), model.intercept(rec.annotator)};
    return {model.theta(), model.intercept(rec.annotator)};
}

// -(1/N) sum_a log prior(effects_a), plus its gradient into `grad`.
double prior_term_serial(const FittedModel& model, std::span<double> grad, double scale) {
    const auto& spec = model.spec();
    if (!spec.has_intercepts()) return 0.0;
    const auto& layout = model.layout();
    const auto& cov = model.covariance();
    double neg_log = 0.0;
    std::vector<double> tmp(layout.intercept_dim);
    for (std::size_t a = 0; a < layout.annotators; ++a) {
        const auto rho = model.intercept(a);
        neg_log -= prior_logdensity_intercepts(rho, cov.intercept);
        cov.intercept.precision_times(rho, tmp);
        for (std::size_t r = 0; r < tmp.size(); ++r) grad[layout.intercept_offset(a) + r] += scale * tmp[r];
    }
    if (spec.has_slopes()) {
        const auto theta = model.theta().values();
        const auto& var = cov.slope_variances;
        const auto params = model.params();
        for (std::size_t a = 0; a < layout.annotators; ++a) {
            const auto phi = params.subspan(layout.slope_offset(a), layout.head.size());
            neg_log -= prior_logdensity_slopes(phi, theta, var);
            for (std::size_t j = 0; j < phi.size(); ++j) {
                const double g = scale * (phi[j] - theta[j]) / var[j];
                grad[layout.slope_offset(a) + j] += g;
                grad[layout.theta_offset() + j] -= g;
            }
        }
    }
    return scale * neg_log;
}

double prior_term_parallel(const FittedModel& model, std::span<double> grad, double scale) {
    const auto& spec = model.spec();
    if (!spec.has_intercepts()) return 0.0;
    const auto& layout = model.layout();
    const auto& cov = model.covariance();
    const auto n_annot = static_cast<std::ptrdiff_t>(layout.annotators);
    std::vector<double> per_annotator(layout.annotators, 0.0);

#pragma omp parallel
    {
        std::vector<double> tmp(layout.intercept_dim);
#pragma omp for schedule(static)
        for (std::ptrdiff_t ai = 0; ai < n_annot; ++ai) {
            const auto a = static_cast<std::size_t>(ai);
            const auto rho = model.intercept(a);
            per_annotator[a] = -prior_logdensity_intercepts(rho, cov.intercept);
            cov.intercept.precision_times(rho, tmp);
            for (std::size_t r = 0; r < tmp.size(); ++r) grad[layout.intercept_offset(a) + r] += scale * tmp[r];
        }
    }

    if (spec.has_slopes()) {
        const auto theta = model.theta().values();
        const auto& var = cov.slope_variances;
        const auto params = model.params();
        const std::size_t p = layout.head.size();
        double log_det = 0.0;
        for (double v : var) log_det += std::log(v);
        const double constant = 0.5 * log_det + 0.5 * static_cast<double>(p) * kLog2Pi;

#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ai = 0; ai < n_annot; ++ai) {
            const auto a = static_cast<std::size_t>(ai);
            const double* phi = params.data() + layout.slope_offset(a);
            double quad = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                const double d = phi[j] - theta[j];
                quad += d * d / var[j];
                grad[layout.slope_offset(a) + j] += scale * d / var[j];
            }
            per_annotator[a] += 0.5 * quad + constant;
        }

#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ji = 0; ji < static_cast<std::ptrdiff_t>(p); ++ji) {
            const auto j = static_cast<std::size_t>(ji);
            double g = 0.0;
            for (std::size_t a = 0; a < layout.annotators; ++a)
                g += params[layout.slope_offset(a) + j] - theta[j];
            grad[layout.theta_offset() + j] -= scale * g / var[j];
        }
    }

    double neg_log = 0.0;
    for (double v : per_annotator) neg_log += v;
    return scale * neg_log;
}

}  // namespace

double map_loss(const FittedModel& model, const Dataset& data, std::span<const std::size_t> batch,
                std::size_t dataset_size) {
    check_alignment(model, data, batch);
    double nll = 0.0;
    for (std::size_t idx : batch) {
        const Record& rec = data.records()[idx];
        const auto z = data.items()[rec.item].features;
        std::optional<std::size_t> annotator;
        if (model.spec().has_intercepts()) annotator = rec.annotator;
        const Prediction p = predict_indexed(model, z, annotator);
        if (model.spec().scale.is_categorical())
            nll += categorical_nll(std::get<std::vector<double>>(p), rec.class_index());
        else
            nll += beta_nll(std::get<BetaParams>(p), rec.label);
    }
    double loss = nll / static_cast<double>(batch.size());
    const auto& spec = model.spec();
    if (spec.has_intercepts()) {
        double neg_log = 0.0;
        for (std::size_t a = 0; a < model.annotators().size(); ++a) {
            neg_log -= prior_logdensity_intercepts(model.intercept(a), model.covariance().intercept);
            if (spec.has_slopes())
                neg_log -= prior_logdensity_slopes(model.slope_head(a).values(), model.theta().values(),
                                                   model.covariance().slope_variances);
        }
        loss += neg_log / static_cast<double>(dataset_size);
    }
    return loss;
}

BatchObjective objective_and_gradient_reference(const FittedModel& model, const Dataset& data,
                                                std::span<const std::size_t> batch, std::size_t dataset_size) {
    check_alignment(model, data, batch);
    const auto& layout = model.layout();
    const auto shape = layout.head;
    BatchObjective result;
    result.gradient.assign(layout.size(), 0.0);
    std::span<double> grad(result.gradient);
    const double weight = 1.0 / static_cast<double>(batch.size());
    const std::vector<double> zeros(static_cast<std::size_t>(model.spec().scale.intercept_dim()), 0.0);
    std::vector<double> pre(shape.hidden), out(shape.output), grad_out(shape.output);

    double nll = 0.0;
    for (std::size_t idx : batch) {
        const Record& rec = data.records()[idx];
        const auto ctx = context_for(model, rec, zeros);
        GradientSink sink;
        sink.head = model.spec().has_slopes() ? grad.subspan(layout.slope_offset(rec.annotator), shape.size())
                                              : grad.subspan(0, shape.size());
        if (model.spec().has_intercepts())
            sink.rho = grad.subspan(layout.intercept_offset(rec.annotator), layout.intercept_dim);
        if (layout.has_nu0) sink.nu0 = &grad[layout.nu0_offset()];
        nll += record_nll(model, ctx.head, ctx.rho, data.items()[rec.item].features, rec, weight, sink, pre, out,
                          grad_out);
    }
    result.loss = nll * weight + prior_term_serial(model, grad, 1.0 / static_cast<double>(dataset_size));
    return result;
}

BatchObjective objective_and_gradient(const FittedModel& model, const Dataset& data,
                                      std::span<const std::size_t> batch, std::size_t dataset_size) {
    check_alignment(model, data, batch);
    const auto& layout = model.layout();
    const auto shape = layout.head;
    const bool slopes = model.spec().has_slopes();
    const std::size_t r_dim = layout.intercept_dim;
    const double weight = 1.0 / static_cast<double>(batch.size());
    const std::vector<double> zeros(static_cast<std::size_t>(model.spec().scale.intercept_dim()), 0.0);

    if (slopes) {
        // Each annotator owns its head and intercept slices, so its records
        // (in batch order) can write straight into the dense gradient.
        std::vector<std::size_t> owners;
        std::vector<std::vector<std::size_t>> groups;
        {
            std::vector<std::ptrdiff_t> slot(layout.annotators, -1);
            for (std::size_t b = 0; b < batch.size(); ++b) {
                const std::size_t a = data.records()[batch[b]].annotator;
                if (slot[a] < 0) {
                    slot[a] = static_cast<std::ptrdiff_t>(owners.size());
                    owners.push_back(a);
                    groups.emplace_back();
                }
                groups[static_cast<std::size_t>(slot[a])].push_back(batch[b]);
            }
        }
        BatchObjective result;
        result.gradient.assign(layout.size(), 0.0);
        std::span<double> grad(result.gradient);
        std::vector<double> group_nll(owners.size(), 0.0), group_nu0(owners.size(), 0.0);
#pragma omp parallel
        {
            std::vector<double> pre(shape.hidden), out(shape.output), grad_out(shape.output);
#pragma omp for schedule(dynamic, 1)
            for (std::ptrdiff_t gi = 0; gi < static_cast<std::ptrdiff_t>(owners.size()); ++gi) {
                const auto g = static_cast<std::size_t>(gi);
                const std::size_t a = owners[g];
                GradientSink sink;
                sink.head = grad.subspan(layout.slope_offset(a), shape.size());
                sink.rho = grad.subspan(layout.intercept_offset(a), r_dim);
                sink.nu0 = &group_nu0[g];
                for (std::size_t idx : groups[g]) {
                    const Record& rec = data.records()[idx];
                    const auto ctx = context_for(model, rec, zeros);
                    group_nll[g] += record_nll(model, ctx.head, ctx.rho, data.items()[rec.item].features, rec, weight,
                                               sink, pre, out, grad_out);
                }
            }
        }
        double nll = 0.0;
        for (std::size_t g = 0; g < owners.size(); ++g) {
            nll += group_nll[g];
            if (layout.has_nu0) grad[layout.nu0_offset()] += group_nu0[g];
        }
        result.loss = nll * weight + prior_term_parallel(model, grad, 1.0 / static_cast<double>(dataset_size));
        return result;
    }

    struct Chunk {
        double nll = 0.0;
        double nu0 = 0.0;
        std::span<double> theta;              // shared head gradient, a slice of the workspace
        std::vector<std::size_t> annotators;  // slots
        std::vector<double> rho;              // slots x R
    };
    const std::size_t n_chunks = (batch.size() + kGradientChunk - 1) / kGradientChunk;
    std::vector<Chunk> chunks(n_chunks);
    // Reused across calls from the same thread; fresh allocations of this
    // size cost more in page faults than the reduction itself.
    thread_local std::vector<double> workspace;
    workspace.assign(n_chunks * shape.size(), 0.0);
    for (std::size_t c = 0; c < n_chunks; ++c)
        chunks[c].theta = std::span<double>(workspace).subspan(c * shape.size(), shape.size());

#pragma omp parallel
    {
        std::vector<double> pre(shape.hidden), out(shape.output), grad_out(shape.output);
#pragma omp for schedule(dynamic, 1)
        for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(n_chunks); ++ci) {
            Chunk& chunk = chunks[static_cast<std::size_t>(ci)];
            const std::size_t begin = static_cast<std::size_t>(ci) * kGradientChunk;
            const std::size_t end = std::min(batch.size(), begin + kGradientChunk);
            for (std::size_t b = begin; b < end; ++b) {
                const Record& rec = data.records()[batch[b]];
                std::size_t slot = 0;
                if (r_dim > 0) {
                    auto it = std::find(chunk.annotators.begin(), chunk.annotators.end(), rec.annotator);
                    slot = static_cast<std::size_t>(it - chunk.annotators.begin());
                    if (it == chunk.annotators.end()) {
                        chunk.annotators.push_back(rec.annotator);
                        chunk.rho.resize(chunk.annotators.size() * r_dim, 0.0);
                    }
                }
                GradientSink sink;
                sink.head = chunk.theta;
                if (r_dim > 0) sink.rho = std::span<double>(chunk.rho).subspan(slot * r_dim, r_dim);
                sink.nu0 = &chunk.nu0;
                const auto ctx = context_for(model, rec, zeros);
                chunk.nll += record_nll(model, ctx.head, ctx.rho, data.items()[rec.item].features, rec, weight, sink,
                                        pre, out, grad_out);
            }
        }
    }

    BatchObjective result;
    result.gradient.assign(layout.size(), 0.0);
    std::span<double> grad(result.gradient);
    double nll = 0.0;
    for (const Chunk& chunk : chunks) {
        nll += chunk.nll;
        if (layout.has_nu0) grad[layout.nu0_offset()] += chunk.nu0;
        for (std::size_t j = 0; j < chunk.theta.size(); ++j) grad[j] += chunk.theta[j];
        for (std::size_t s = 0; s < chunk.annotators.size(); ++s) {
            const std::size_t a = chunk.annotators[s];
            for (std::size_t r = 0; r < r_dim; ++r) grad[layout.intercept_offset(a) + r] += chunk.rho[s * r_dim + r];
        }
    }
    result.loss = nll * weight + prior_term_parallel(model, grad, 1.0 / static_cast<double>(dataset_size));
    return result;
}

}  // namespace annmix
