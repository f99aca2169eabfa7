#include <doctest.h>

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <json.hpp>

#include "annmix/io.hpp"
#include "annmix/oracle.hpp"
#include "annmix/trainer.hpp"

using namespace annmix;
using doctest::Approx;

namespace {

SimulationSpec base_spec(std::uint64_t seed) {
    SimulationSpec s;
    s.num_items = 300;
    s.feature_dim = 8;
    s.hidden_dim = 8;
    s.num_annotators = 20;
    s.annotations_per_item = 6;
    s.seed = seed;
    return s;
}

}  // namespace

TEST_CASE("simulation is reproducible and well formed") {
    for (auto scale : {ResponseScale::categorical(4), ResponseScale::continuous()})
        for (auto mode : {EffectsMode::Intercepts, EffectsMode::Slopes}) {
            auto s = base_spec(3);
            s.scale = scale;
            s.effects = mode;
            s.slope_sd = mode == EffectsMode::Slopes ? 0.3 : 0.0;
            const Simulation a = simulate(s), b = simulate(s);
            CHECK(dataset_to_jsonl(a.dataset) == dataset_to_jsonl(b.dataset));
            CHECK(ground_truth_to_json(a.truth) == ground_truth_to_json(b.truth));
            CHECK(a.dataset.items().size() == 300);
            CHECK(a.dataset.records().size() == 300 * 6);
            CHECK(a.dataset.feature_dim() == 8);
            // first-appearance order of the truth model matches the dataset
            for (std::size_t i = 0; i < a.dataset.annotators().size(); ++i)
                CHECK(a.truth.model.annotators()[i] == a.dataset.annotators()[i]);
            for (const auto& r : a.dataset.records()) {
                if (scale.is_categorical()) {
                    CHECK((r.label >= 0 && r.label < 4 && r.label == std::floor(r.label)));
                } else {
                    CHECK((r.label > 0.0 && r.label < 1.0));
                }
            }
            s.seed = 4;
            CHECK(dataset_to_jsonl(simulate(s).dataset) != dataset_to_jsonl(a.dataset));
        }
}

TEST_CASE("without annotator effects every annotator labels alike") {
    auto s = base_spec(11);
    s.intercept_sd = 0.0;
    s.num_items = 600;
    const Simulation sim = simulate(s);
    const std::size_t a = sim.dataset.annotators().size(), k = 3;
    std::vector<std::vector<double>> table(a, std::vector<double>(k, 0.0));
    for (const auto& r : sim.dataset.records()) table[r.annotator][r.class_index()] += 1.0;
    std::vector<double> row(a, 0.0), col(k, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < a; ++i)
        for (std::size_t c = 0; c < k; ++c) {
            row[i] += table[i][c];
            col[c] += table[i][c];
            total += table[i][c];
        }
    double chi2 = 0.0;
    for (std::size_t i = 0; i < a; ++i)
        for (std::size_t c = 0; c < k; ++c) {
            const double e = row[i] * col[c] / total;
            chi2 += (table[i][c] - e) * (table[i][c] - e) / e;
        }
    const boost::math::chi_squared dist(static_cast<double>((a - 1) * (k - 1)));
    CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.01);
    CHECK_FALSE(recovery_report(sim.truth.model, sim.truth).rho_spearman.has_value());
}

TEST_CASE("a zero head and no effects give uniform labels") {
    auto s = base_spec(12);
    s.zero_head = true;
    s.intercept_sd = 0.0;
    s.scale = ResponseScale::categorical(4);
    s.num_items = 2500;
    s.annotations_per_item = 4;
    const Simulation sim = simulate(s);
    std::vector<double> counts(4, 0.0);
    for (const auto& r : sim.dataset.records()) counts[r.class_index()] += 1.0;
    const double n = static_cast<double>(sim.dataset.records().size());
    const double se = std::sqrt(0.25 * 0.75 / n);
    for (double c : counts) CHECK(std::abs(c / n - 0.25) < 3 * se);
}

TEST_CASE("simulated labels follow the truth model's predictive distribution") {
    // mean surprisal of the drawn labels against the mean entropy of the
    // distributions they were drawn from
    auto s = base_spec(13);
    s.num_items = 2000;
    s.annotations_per_item = 5;
    const Simulation sim = simulate(s);
    const auto& d = sim.dataset;
    double sum = 0.0, sum2 = 0.0;
    for (const auto& r : d.records()) {
        const auto probs = std::get<std::vector<double>>(
            predict(sim.truth.model, d.items()[r.item].features, d.annotators()[r.annotator]));
        double entropy = 0.0;
        for (double p : probs) entropy -= p > 0 ? p * std::log(p) : 0.0;
        const double diff = -std::log(probs[r.class_index()]) - entropy;
        sum += diff;
        sum2 += diff * diff;
    }
    const double n = static_cast<double>(d.records().size());
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(n == 10000);
    CHECK(std::abs(mean) < 3 * se);
}

TEST_CASE("recovery of the generating model scores perfectly") {
    for (auto scale : {ResponseScale::categorical(3), ResponseScale::continuous()}) {
        auto s = base_spec(14);
        s.scale = scale;
        const Simulation sim = simulate(s);
        const auto rep = recovery_report(model_from_truth(sim.truth), sim.truth);
        CHECK(*rep.rho_spearman == Approx(1.0));
        CHECK(*rep.theta_prediction_corr == Approx(1.0));
        CHECK(*rep.sigma_relative_error < 1e-3);
    }
    auto s = base_spec(15);
    const Simulation sim = simulate(s);
    Rng rng(0);
    const FittedModel fixed =
        FittedModel::initial({EffectsMode::Fixed, s.scale, 8, 8}, {sim.dataset.annotators().begin(), sim.dataset.annotators().end()}, rng);
    const auto rep = recovery_report(fixed, sim.truth);
    CHECK_FALSE(rep.rho_spearman.has_value());
    CHECK_FALSE(rep.sigma_relative_error.has_value());
    CHECK(rep.theta_prediction_corr.has_value());
    const FittedModel stranger = FittedModel::initial({EffectsMode::Intercepts, s.scale, 8, 8}, {"nobody"}, rng);
    CHECK_THROWS(recovery_report(stranger, sim.truth));
}

TEST_CASE("finite differences") {
    const ScalarFunction quad = [](std::span<const double> x) {
        return 3.0 * x[0] * x[0] + x[0] * x[1] - 2.0 * x[1] + 7.0;
    };
    const std::vector<double> at{1.5, -2.0};
    const auto g = finite_difference_grad(quad, at);
    CHECK(g[0] == Approx(6.0 * 1.5 - 2.0).epsilon(1e-9));
    CHECK(g[1] == Approx(1.5 - 2.0).epsilon(1e-9));
    const auto zero = finite_difference_grad([](std::span<const double>) { return 4.0; }, at);
    CHECK(zero == std::vector<double>{0.0, 0.0});
    CHECK_THROWS_AS(finite_difference_grad([](std::span<const double>) { return NAN; }, at), std::domain_error);
}

TEST_CASE("brute-force special functions") {
    for (double x : {0.05, 0.3, 1.0, 1.5, 2.0, 4.7, 19.9, 20.0, 55.5, 300.0})
        CHECK(brute_force_log_gamma(x) == Approx(boost::math::lgamma(x)).epsilon(1e-12).scale(1e-12));
    const std::vector<double> logits{0.3, -1.2, 2.0};
    const double norm = std::exp(0.3) + std::exp(-1.2) + std::exp(2.0);
    CHECK(brute_force_categorical_nll(logits, 2) == Approx(-std::log(std::exp(2.0) / norm)));
    CHECK(brute_force_beta_nll(2.0, 2.0, 0.5) == Approx(-std::log(1.5)));
}

TEST_CASE("brute-force record likelihood agrees with the model") {
    for (auto scale : {ResponseScale::categorical(3), ResponseScale::continuous()})
        for (auto mode : {EffectsMode::Fixed, EffectsMode::Intercepts, EffectsMode::Slopes}) {
            auto s = base_spec(21);
            s.scale = scale;
            s.effects = mode == EffectsMode::Fixed ? EffectsMode::Intercepts : mode;
            s.slope_sd = 0.4;
            s.num_items = 30;
            const Simulation sim = simulate(s);
            Rng rng(5);
            FittedModel m = FittedModel::initial(
                {mode, scale, 8, 8}, {sim.dataset.annotators().begin(), sim.dataset.annotators().end()}, rng);
            for (double& v : m.mutable_params()) v += 0.5 * rng.normal();
            for (std::size_t r = 0; r < sim.dataset.records().size(); r += 7) {
                const Record& rec = sim.dataset.records()[r];
                const auto pred = predict_indexed(m, sim.dataset.items()[rec.item].features,
                                                  mode == EffectsMode::Fixed ? std::nullopt
                                                                             : std::optional<std::size_t>(rec.annotator));
                const double nll = scale.is_categorical()
                                       ? categorical_nll(std::get<std::vector<double>>(pred), rec.class_index())
                                       : beta_nll(std::get<BetaParams>(pred), rec.label);
                CHECK(brute_force_nll(m, sim.dataset, rec) == Approx(nll).epsilon(1e-10));
            }
        }
}

TEST_CASE("simulation and ground-truth JSON") {
    auto s = base_spec(2);
    s.scale = ResponseScale::continuous();
    s.intercept_covariance = {{1.0, 0.3}, {0.3, 0.5}};
    const SimulationSpec back = simulation_spec_from_json(simulation_spec_to_json(s));
    CHECK(simulation_spec_to_json(back) == simulation_spec_to_json(s));
    CHECK(back.intercept_covariance == s.intercept_covariance);
    CHECK_THROWS_AS(simulation_spec_from_json(R"({"num_itemz": 3})"), InputError);
    CHECK_THROWS(simulation_spec_from_json(R"({"intercept_covariance": [[1, 0], [0, 1], [0, 0]]})"));

    const Simulation sim = simulate(s);
    const auto j = nlohmann::json::parse(ground_truth_to_json(sim.truth));
    CHECK(j["format"] == "annmix-ground-truth");
    CHECK(j.contains("model"));
    const std::string model_text = j["model"].is_string() ? j["model"].get<std::string>() : j["model"].dump();
    const FittedModel m = model_from_json(model_text);
    CHECK(std::vector<double>(m.params().begin(), m.params().end()) ==
          std::vector<double>(sim.truth.model.params().begin(), sim.truth.model.params().end()));
}
