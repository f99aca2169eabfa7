#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include <omp.h>

#include "annmix/objective.hpp"
#include "annmix/oracle.hpp"
#include "annmix/trainer.hpp"
#include "helpers.hpp"

using namespace annmix;
using doctest::Approx;

namespace {

FittedModel with_params(const FittedModel& m, std::span<const double> params) {
    return FittedModel(m.spec(), {m.annotators().begin(), m.annotators().end()}, {params.begin(), params.end()},
                       m.covariance());
}

// Small simulated dataset plus a model with randomised parameters and a
// random covariance, aligned with the dataset's annotators.
struct Instance {
    Dataset data;
    FittedModel model;
};

Instance random_instance(EffectsMode mode, ResponseScale scale, std::uint64_t seed, std::size_t items = 12,
                         std::size_t annotators = 3) {
    SimulationSpec s;
    s.scale = scale;
    s.effects = EffectsMode::Intercepts;
    s.num_items = items;
    s.feature_dim = 8;
    s.hidden_dim = 4;
    s.num_annotators = annotators;
    s.annotations_per_item = std::min<std::size_t>(2, annotators);
    s.seed = seed;
    Simulation sim = simulate(s);

    const ModelSpec spec{mode, scale, 8, 4};
    Rng rng(derive_seed(seed, 99));
    FittedModel m = FittedModel::initial(spec, {sim.dataset.annotators().begin(), sim.dataset.annotators().end()}, rng);
    for (double& v : m.mutable_params()) v += 0.4 * rng.normal();
    if (spec.has_intercepts()) {
        const int r = scale.intercept_dim();
        Eigen::MatrixXd a(r, r);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) a(i, j) = 0.5 * rng.normal();
        CovarianceState cov;
        cov.intercept = InterceptCovariance::from_matrix(a * a.transpose() + 0.3 * Eigen::MatrixXd::Identity(r, r));
        if (spec.has_slopes())
            for (std::size_t j = 0; j < m.layout().head.size(); ++j) cov.slope_variances.push_back(0.2 + rng.uniform());
        m.set_covariance(cov);
    }
    return {std::move(sim.dataset), std::move(m)};
}

double rel_error(std::span<const double> a, std::span<const double> b) {
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        norm += b[i] * b[i];
    }
    return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-12);
}

std::vector<std::size_t> all_records(const Dataset& d) {
    std::vector<std::size_t> v(d.records().size());
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

}  // namespace

TEST_CASE("analytic gradients match finite differences") {
    int configs = 0;
    for (auto mode : {EffectsMode::Fixed, EffectsMode::Intercepts, EffectsMode::Slopes})
        for (auto scale : {ResponseScale::categorical(3), ResponseScale::continuous()})
            for (std::uint64_t seed = 0; seed < 2; ++seed) {
                CAPTURE(to_string(mode));
                CAPTURE(to_string(scale.kind));
                CAPTURE(seed);
                const Instance inst = random_instance(mode, scale, 1000 + seed);
                auto batch = all_records(inst.data);
                batch.resize(batch.size() / 2);
                const std::size_t n = inst.data.records().size();
                const auto loss = [&](std::span<const double> p) {
                    return map_loss(with_params(inst.model, p), inst.data, batch, n);
                };
                const auto fd = finite_difference_grad(loss, inst.model.params());
                const auto analytic = objective_and_gradient(inst.model, inst.data, batch, n);
                const auto reference = objective_and_gradient_reference(inst.model, inst.data, batch, n);
                CHECK(rel_error(analytic.gradient, fd) < 1e-4);
                CHECK(rel_error(reference.gradient, fd) < 1e-4);
                CHECK(analytic.loss == Approx(loss(inst.model.params())).epsilon(1e-12));
                CHECK(reference.loss == Approx(analytic.loss).epsilon(1e-12));
                ++configs;
            }
    CHECK(configs == 12);
}

TEST_CASE("kernel results do not depend on the thread count") {
    const int saved = omp_get_max_threads();
    for (auto mode : {EffectsMode::Fixed, EffectsMode::Intercepts, EffectsMode::Slopes}) {
        const Instance inst = random_instance(mode, ResponseScale::categorical(3), 7, 80, 6);
        const auto batch = all_records(inst.data);
        const std::size_t n = batch.size();
        omp_set_num_threads(1);
        const auto one = objective_and_gradient(inst.model, inst.data, batch, n);
        omp_set_num_threads(4);
        const auto four = objective_and_gradient(inst.model, inst.data, batch, n);
        CHECK(one.loss == four.loss);
        CHECK(one.gradient == four.gradient);
        const auto serial = objective_and_gradient_reference(inst.model, inst.data, batch, n);
        CHECK(rel_error(one.gradient, serial.gradient) < 1e-12);
    }
    omp_set_num_threads(saved);
}

TEST_CASE("map loss closed forms") {
    SUBCASE("uniform fixed model over four records costs log K") {
        Instance inst = random_instance(EffectsMode::Fixed, ResponseScale::categorical(3), 3);
        std::vector<double> zeros(inst.model.params().size(), 0.0);
        const FittedModel flat = with_params(inst.model, zeros);
        const std::vector<std::size_t> batch{0, 1, 2, 3};
        CHECK(map_loss(flat, inst.data, batch, 24) == Approx(std::log(3.0)).epsilon(1e-15));
    }
    SUBCASE("intercepts at zero with identity covariance add the normalisation constant") {
        Instance inst = random_instance(EffectsMode::Intercepts, ResponseScale::categorical(3), 4);
        auto params = std::vector<double>(inst.model.params().begin(), inst.model.params().end());
        const auto& lay = inst.model.layout();
        std::fill(params.begin() + static_cast<std::ptrdiff_t>(lay.intercepts_offset()), params.end(), 0.0);
        FittedModel m = with_params(inst.model, params);
        m.set_covariance({InterceptCovariance::identity(3), {}, 1e-4});
        const FittedModel fixed({EffectsMode::Fixed, m.spec().scale, 8, 4}, {},
                                {params.begin(), params.begin() + static_cast<std::ptrdiff_t>(lay.intercepts_offset())},
                                {});
        const auto batch = all_records(inst.data);
        const std::size_t n = batch.size();
        const double a = static_cast<double>(m.annotators().size());
        const double constant = a * 1.5 * std::log(2 * std::numbers::pi) / static_cast<double>(n);
        CHECK(map_loss(m, inst.data, batch, n) == Approx(map_loss(fixed, inst.data, batch, n) + constant).epsilon(1e-14));
    }
}

TEST_CASE("absent annotators receive only their prior gradient") {
    const Instance inst = random_instance(EffectsMode::Intercepts, ResponseScale::categorical(3), 5, 20, 4);
    const auto& recs = inst.data.records();
    std::vector<std::size_t> batch;
    for (std::size_t r = 0; r < recs.size(); ++r)
        if (recs[r].annotator != 2) batch.push_back(r);
    const std::size_t n = recs.size();
    const auto g = objective_and_gradient(inst.model, inst.data, batch, n);
    std::vector<double> prec(3);
    inst.model.covariance().intercept.precision_times(inst.model.intercept(2), prec);
    for (std::size_t c = 0; c < 3; ++c)
        CHECK(g.gradient[inst.model.layout().intercept_offset(2) + c] == Approx(prec[c] / n).epsilon(1e-13));
}

TEST_CASE("likelihood gradients are linear in record multiplicity") {
    // mean-form batches: g(B) = (1/|B|) sum_i l_i + p, with p the shared prior part
    for (auto mode : {EffectsMode::Intercepts, EffectsMode::Slopes}) {
        const Instance inst = random_instance(mode, ResponseScale::continuous(), 6);
        const std::size_t n = inst.data.records().size();
        const std::vector<std::size_t> three{3}, five{5}, doubled{3, 3}, mixed{3, 3, 5};
        const auto g3 = objective_and_gradient(inst.model, inst.data, three, n);
        const auto g5 = objective_and_gradient(inst.model, inst.data, five, n);
        const auto g33 = objective_and_gradient(inst.model, inst.data, doubled, n);
        const auto g335 = objective_and_gradient(inst.model, inst.data, mixed, n);
        for (std::size_t i = 0; i < g3.gradient.size(); ++i) {
            CHECK(g33.gradient[i] == Approx(g3.gradient[i]).epsilon(1e-12).scale(1e-12));
            CHECK(g335.gradient[i] ==
                  Approx((2.0 * g3.gradient[i] + g5.gradient[i]) / 3.0).epsilon(1e-10).scale(1e-12));
        }
    }
}

TEST_CASE("gradient vanishes at the optimum of the intercept-only subproblem") {
    // one annotator, theta frozen: Newton on rho with the analytic gradient
    SimulationSpec s;
    s.num_items = 40;
    s.feature_dim = 8;
    s.hidden_dim = 4;
    s.num_annotators = 1;
    s.annotations_per_item = 1;
    s.seed = 12;
    const Simulation sim = simulate(s);
    Rng rng(1);
    FittedModel m = FittedModel::initial({EffectsMode::Intercepts, s.scale, 8, 4}, {sim.dataset.annotators()[0]}, rng);
    const auto batch = all_records(sim.dataset);
    const std::size_t n = batch.size();
    const std::size_t off = m.layout().intercept_offset(0);
    auto rho_grad = [&](const FittedModel& model) {
        const auto g = objective_and_gradient(model, sim.dataset, batch, n);
        return Eigen::Vector3d(g.gradient[off], g.gradient[off + 1], g.gradient[off + 2]);
    };
    for (int it = 0; it < 30; ++it) {
        const Eigen::Vector3d g = rho_grad(m);
        Eigen::Matrix3d h;
        for (int c = 0; c < 3; ++c) {
            FittedModel up = m, down = m;
            up.mutable_params()[off + c] += 1e-5;
            down.mutable_params()[off + c] -= 1e-5;
            h.col(c) = (rho_grad(up) - rho_grad(down)) / 2e-5;
        }
        const Eigen::Vector3d step = h.ldlt().solve(g);
        for (int c = 0; c < 3; ++c) m.mutable_params()[off + c] -= step(c);
        if (step.norm() < 1e-14) break;
    }
    CHECK(rho_grad(m).norm() < 1e-8);
}

TEST_CASE("Adam steps") {
    TrainConfig cfg;
    SUBCASE("first step moves by about lr against the gradient") {
        std::vector<double> p{1.0};
        const std::vector<double> g{0.5};
        auto st = OptimizerState::zeros(1);
        adam_step(p, g, st, cfg);
        CHECK(st.step == 1);
        CHECK(p[0] == Approx(1.0 - 0.01 * 0.5 / (0.5 + 1e-7)).epsilon(1e-12));
    }
    SUBCASE("zero gradient leaves parameters alone") {
        std::vector<double> p{0.3, -2.0};
        const std::vector<double> g{0.0, 0.0};
        auto st = OptimizerState::zeros(2);
        adam_step(p, g, st, cfg);
        CHECK(p == std::vector<double>{0.3, -2.0});
    }
    SUBCASE("negated gradients negate the first update") {
        std::vector<double> a(4, 0.0), b(4, 0.0);
        const std::vector<double> g{0.1, -3.0, 2e-4, 7.0};
        const std::vector<double> ng{-0.1, 3.0, -2e-4, -7.0};
        auto sa = OptimizerState::zeros(4), sb = OptimizerState::zeros(4);
        adam_step(a, g, sa, cfg);
        adam_step(b, ng, sb, cfg);
        for (int i = 0; i < 4; ++i) CHECK(a[i] == -b[i]);
    }
    SUBCASE("shape mismatch") {
        std::vector<double> p{1.0, 2.0};
        const std::vector<double> g{0.5};
        auto st = OptimizerState::zeros(2);
        CHECK_THROWS(adam_step(p, g, st, cfg));
    }
}

TEST_CASE("covariance updates") {
    const double floor = 1e-4;
    SUBCASE("zero effects give floor times identity") {
        const std::vector<double> zeros(12, 0.0);
        const auto c = estimate_intercept_covariance(zeros, 3, floor);
        CHECK(c.sigma().isApprox(floor * Eigen::MatrixXd::Identity(3, 3)));
    }
    SUBCASE("plus and minus one") {
        const std::vector<double> e{1.0, -1.0};
        CHECK(estimate_intercept_covariance(e, 1, floor).sigma()(0, 0) == Approx(1.0 + floor).epsilon(1e-15));
    }
    SUBCASE("scaling effects by c scales the estimate by c squared") {
        Rng rng(4);
        const auto e = testing::random_vector(rng, 20);
        auto e3 = e;
        for (double& v : e3) v *= 3.0;
        const Eigen::MatrixXd s1 = estimate_intercept_covariance(e, 2, floor).sigma() - floor * Eigen::MatrixXd::Identity(2, 2);
        const Eigen::MatrixXd s3 = estimate_intercept_covariance(e3, 2, floor).sigma() - floor * Eigen::MatrixXd::Identity(2, 2);
        CHECK((s3 - 9.0 * s1).norm() < 1e-12);

        const auto theta = testing::random_vector(rng, 4);
        std::vector<double> slopes;
        for (int a = 0; a < 3; ++a)
            for (double t : theta) slopes.push_back(t + rng.normal());
        const auto v1 = estimate_slope_variances(slopes, theta, floor);
        auto scaled = slopes;
        for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = theta[i % 4] + 3.0 * (slopes[i] - theta[i % 4]);
        const auto v3 = estimate_slope_variances(scaled, theta, floor);
        for (std::size_t j = 0; j < 4; ++j) CHECK(v3[j] - floor == Approx(9.0 * (v1[j] - floor)).epsilon(1e-12));
    }
    SUBCASE("always positive definite, even for degenerate effects") {
        Rng rng(8);
        for (int t = 0; t < 300; ++t) {
            const std::size_t dim = 1 + rng.below(4);
            const std::size_t n = 1 + rng.below(5);
            std::vector<double> e(n * dim);
            const int kind = static_cast<int>(rng.below(3));
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t c = 0; c < dim; ++c)
                    e[a * dim + c] = kind == 0 ? 0.0 : kind == 1 ? 5.0 * rng.normal() : 1e6 * (c == 0 ? rng.normal() : 0.0);
            const auto cov = estimate_intercept_covariance(e, dim, floor);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov.sigma());
            CHECK(eig.eigenvalues().minCoeff() >= floor * (1 - 1e-9));
        }
    }
}

TEST_CASE("early stopping rule and defaults") {
    CHECK(should_stop(1.00, 0.995, 0.01));
    CHECK_FALSE(should_stop(1.00, 0.90, 0.01));
    CHECK(should_stop(0.90, 0.905, 0.01));

    const TrainConfig c;
    CHECK(c.learning_rate == 0.01);
    CHECK(c.beta1 == 0.9);
    CHECK(c.beta2 == 0.999);
    CHECK(c.adam_epsilon == 1e-7);
    CHECK(c.batch_size == 128);
    CHECK(c.max_epochs == 25);
    CHECK(c.early_stop_tolerance == 0.01);
    CHECK(c.covariance_floor == 1e-4);
}

namespace {

Simulation descent_data(ResponseScale scale, std::uint64_t seed) {
    SimulationSpec s;
    s.scale = scale;
    s.num_items = 120;
    s.feature_dim = 8;
    s.hidden_dim = 8;
    s.num_annotators = 12;
    s.annotations_per_item = 4;
    s.seed = seed;
    return simulate(s);
}

}  // namespace

TEST_CASE("training loss descends for every family") {
    for (auto scale : {ResponseScale::categorical(3), ResponseScale::continuous()})
        for (auto mode : {EffectsMode::Fixed, EffectsMode::Intercepts, EffectsMode::Slopes})
            for (std::uint64_t seed = 0; seed < 3; ++seed) {
                const Simulation sim = descent_data(scale, 50 + seed);
                TrainConfig cfg;
                cfg.seed = seed;
                cfg.max_epochs = 5;
                cfg.early_stop_tolerance = 0.0;
                const FitResult r = fit({mode, scale, 8, 8}, sim.dataset, cfg);
                REQUIRE(r.log.size() == 5);
                CAPTURE(to_string(mode));
                CAPTURE(to_string(scale.kind));
                CHECK(r.log[4].mean_loss < r.log[0].mean_loss);
            }
}

TEST_CASE("fit is deterministic and honours the stopping rule") {
    const Simulation sim = descent_data(ResponseScale::continuous(), 9);
    TrainConfig cfg;
    cfg.max_epochs = 4;
    cfg.seed = 17;
    const ModelSpec spec{EffectsMode::Slopes, sim.dataset.scale(), 8, 8};
    const FitResult a = fit(spec, sim.dataset, cfg);
    const FitResult b = fit(spec, sim.dataset, cfg);
    CHECK(model_to_json(a.model) == model_to_json(b.model));
    CHECK(training_log_jsonl(a.log) == training_log_jsonl(b.log));

    cfg.early_stop_tolerance = 1e9;
    CHECK(fit(spec, sim.dataset, cfg).log.size() == 2);
    cfg.early_stop_tolerance = 0.0;
    cfg.max_epochs = 3;
    const FitResult full = fit(spec, sim.dataset, cfg);
    CHECK(full.log.size() == 3);
    for (const auto& e : full.log) {
        CHECK(e.nu0.has_value());
        CHECK(e.covariance_trace > 0.0);
    }
    CHECK(full.model.covariance().slope_variances.size() == full.model.layout().head.size());

    cfg.seed = 18;
    CHECK(model_to_json(fit(spec, sim.dataset, cfg).model) != model_to_json(full.model));
}

TEST_CASE("one Adam step lowers the loss on a separable toy set") {
    std::vector<Item> items;
    std::vector<AnnotationRecord> recs;
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        const double side = i % 2 == 0 ? 1.0 : -1.0;
        items.push_back({"t" + std::to_string(i), {side * (1.0 + rng.uniform()), rng.normal()}, {}, {}, {}, {}});
        recs.push_back({items.back().id, "a", side > 0 ? 1.0 : 0.0});
    }
    const Dataset d = Dataset::build(ResponseScale::categorical(2), items, recs);
    Rng init(4);
    FittedModel m = FittedModel::initial({EffectsMode::Fixed, d.scale(), 2, 4}, {"a"}, init);
    const auto batch = all_records(d);
    const double before = map_loss(m, d, batch, 20);
    const auto g = objective_and_gradient(m, d, batch, 20);
    auto st = OptimizerState::zeros(m.params().size());
    adam_step(m.mutable_params(), g.gradient, st, TrainConfig{});
    CHECK(map_loss(m, d, batch, 20) < before);
}

TEST_CASE("training errors") {
    const Simulation sim = descent_data(ResponseScale::categorical(3), 1);
    TrainConfig cfg;
    CHECK_THROWS_AS(fit({EffectsMode::Fixed, sim.dataset.scale(), 9, 8}, sim.dataset, cfg), TrainingError);
    CHECK_THROWS_AS(fit({EffectsMode::Fixed, ResponseScale::categorical(4), 8, 8}, sim.dataset, cfg), TrainingError);

    // a saturated mean drives one Beta shape parameter to zero
    std::vector<Item> items{{"x", {1e300, 1e300}, {}, {}, {}, {}}, {"y", {-1e300, -1e300}, {}, {}, {}, {}}};
    const std::vector<AnnotationRecord> recs{{"x", "a", 0.5}, {"y", "b", 0.5}};
    const Dataset huge = Dataset::build(ResponseScale::continuous(), items, recs);
    CHECK_THROWS_WITH_AS(fit({EffectsMode::Intercepts, huge.scale(), 2, 4}, huge, cfg), doctest::Contains("non-finite"),
                         TrainingError);
}

TEST_CASE("sparse annotators are shrunk at least as much as dense ones") {
    // Background annotators with random intercepts set the population
    // covariance; "sparse" (5 labels) and "dense" (500 labels) share the
    // same large true intercept.
    int satisfied = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(derive_seed(777, seed));
        const std::vector<double> shared_rho{2.0, -1.0, -1.0};
        std::vector<Item> items;
        for (int i = 0; i < 300; ++i)
            items.push_back({"q" + std::to_string(i), testing::random_vector(rng, 4), {}, {}, {}, {}});
        std::vector<AnnotationRecord> recs;
        auto draw = [&](const std::string& who, std::span<const double> rho, int count) {
            for (int t = 0; t < count; ++t) {
                const std::size_t i = rng.below(items.size());
                const std::vector<double> h{0.5 * items[i].features[0], 0.5 * items[i].features[1], 0.0};
                const auto p = categorical_predict(h, rho);
                recs.push_back({items[i].id, who, static_cast<double>(rng.categorical(p))});
            }
        };
        for (int a = 0; a < 15; ++a) {
            const auto rho = testing::random_vector(rng, 3, 0.7);
            draw("bg" + std::to_string(a), rho, 60);
        }
        draw("sparse", shared_rho, 5);
        draw("dense", shared_rho, 500);
        const Dataset d = Dataset::build(ResponseScale::categorical(3), items, recs);
        TrainConfig cfg;
        cfg.seed = seed;
        const FitResult r = fit({EffectsMode::Intercepts, d.scale(), 4, 8}, d, cfg);
        auto centred_norm = [&](const std::string& who) {
            const auto rho = r.model.intercept(*r.model.find_annotator(who));
            const double mean = (rho[0] + rho[1] + rho[2]) / 3.0;
            double s = 0.0;
            for (double v : rho) s += (v - mean) * (v - mean);
            return std::sqrt(s);
        };
        if (centred_norm("sparse") <= centred_norm("dense")) ++satisfied;
    }
    CHECK(satisfied >= 3);
}
