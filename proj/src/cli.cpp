#include "annmix/cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "annmix/analysis.hpp"
#include "annmix/data.hpp"
#include "annmix/evaluation.hpp"
#include "annmix/io.hpp"
#include "annmix/model.hpp"
#include "annmix/oracle.hpp"
#include "annmix/partition.hpp"
#include "annmix/table.hpp"
#include "annmix/trainer.hpp"

namespace annmix {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// Raw flag values; unset means "take the config file value, else the default".
struct Flags {
    std::optional<std::string> config, data, scale, effects, scheme, out, spec, predictions, boundary_h;
    std::optional<int> classes, folds, epochs, mc_samples, jobs, bonferroni_family;
    std::optional<std::size_t> batch_size, dim, hidden, permutations;
    std::optional<double> epsilon, lr, early_stop_tol;
    std::optional<std::uint64_t> seed, featurize_seed;
    std::vector<std::string> models;
    bool marginalize = false;
    bool slope_extension = false;
};

const std::vector<std::string> kConfigKeys = {
    "data", "scale", "classes", "epsilon", "effects", "scheme", "folds", "seed", "epochs", "lr", "batch-size",
    "early-stop-tol", "marginalize", "mc-samples", "jobs", "out", "dim", "hidden", "featurize-seed",
    "bonferroni-family", "spec", "predictions", "model", "slope-extension", "permutations", "boundary-h"};

class Resolver {
public:
    explicit Resolver(const std::optional<std::string>& path) {
        if (!path) return;
        try {
            config_ = json::parse(read_file(*path));
        } catch (const json::exception& e) {
            throw InputError("config '" + *path + "': " + e.what());
        }
        if (!config_.is_object()) throw InputError("config '" + *path + "' must be a JSON object");
        for (auto& [key, value] : config_.items())
            if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end())
                throw InputError("config '" + *path + "': unknown key '" + key + "'");
        path_ = *path;
    }

    template <typename T>
    T get(const std::optional<T>& flag, const std::string& key, T fallback) {
        T value = fallback;
        if (flag) {
            value = *flag;
        } else if (config_.contains(key)) {
            try {
                value = config_.at(key).get<T>();
            } catch (const json::exception& e) {
                throw InputError("config '" + path_ + "': key '" + key + "': " + e.what());
            }
        }
        set(key, value);
        return value;
    }

    bool get_flag(bool flag, const std::string& key) {
        bool value = flag;
        if (!flag && config_.contains(key)) {
            try {
                value = config_.at(key).get<bool>();
            } catch (const json::exception& e) {
                throw InputError("config '" + path_ + "': key '" + key + "': " + e.what());
            }
        }
        set(key, value);
        return value;
    }

    std::vector<std::string> get_list(const std::vector<std::string>& flag, const std::string& key) {
        std::vector<std::string> value = flag;
        if (flag.empty() && config_.contains(key)) {
            const auto& v = config_.at(key);
            value = v.is_array() ? v.get<std::vector<std::string>>() : std::vector<std::string>{v.get<std::string>()};
        }
        set(key, value);
        return value;
    }

    template <typename T>
    void set(const std::string& key, const T& value) {
        resolved_[key] = value;
    }

    const ordered_json& resolved() const { return resolved_; }

private:
    json config_ = json::object();
    std::string path_;
    ordered_json resolved_ = ordered_json::object();
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ','))
        if (!cur.empty()) out.push_back(cur);
    if (out.empty()) throw InputError("empty list '" + s + "'");
    return out;
}

ResponseScale parse_scale(const std::string& kind, int classes, double eps) {
    if (kind == "categorical") {
        if (classes < 2) throw InputError("--classes must be at least 2");
        return ResponseScale::categorical(classes);
    }
    if (kind == "continuous") {
        if (!(eps > 0.0 && eps < 0.5)) throw InputError("--epsilon must be in (0, 0.5)");
        return ResponseScale::continuous(eps);
    }
    throw InputError("unknown scale '" + kind + "' (expected categorical or continuous)");
}

// All artifacts are computed first, then written one by one through atomic
// renames with the manifest last.
class Outputs {
public:
    void add(const std::string& rel, std::string contents) { files_[rel] = std::move(contents); }

    void commit(const fs::path& root, const std::string& command, const ordered_json& config,
                const ordered_json& seeds, const ordered_json& inputs) const {
        ordered_json manifest;
        manifest["tool"] = "annmix";
        manifest["command"] = command;
        manifest["config"] = config;
        manifest["seeds"] = seeds;
        manifest["inputs"] = inputs;
        ordered_json artifacts = ordered_json::object();
        for (const auto& [rel, contents] : files_) artifacts[rel] = hex64(fnv1a64(contents));
        manifest["artifacts"] = artifacts;
        for (const auto& [rel, contents] : files_) {
            const fs::path p = root / rel;
            fs::create_directories(p.parent_path());
            write_file_atomic(p, contents);
        }
        fs::create_directories(root);
        write_file_atomic(root / "manifest.json", manifest.dump(2) + "\n");
    }

    const std::map<std::string, std::string>& files() const { return files_; }

private:
    std::map<std::string, std::string> files_;
};

ordered_json input_entry(const std::string& path) {
    ordered_json j;
    j["path"] = path;
    j["fnv1a64"] = hex64(fnv1a64(read_file(path)));
    return j;
}

template <typename Fn>
auto with_context(const std::string& what, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw InputError(what + ": " + e.what());
    }
}

constexpr std::size_t kDefaultHashDim = 768;

struct DataSettings {
    std::string path;
    ResponseScale scale;
    std::size_t dim = 0;
    std::uint64_t featurize_seed = 0;
};

DataSettings resolve_data(Resolver& r, const Flags& f) {
    DataSettings d;
    d.path = r.get(f.data, "data", std::string());
    if (d.path.empty()) throw InputError("--data is required");
    const auto kind = r.get(f.scale, "scale", std::string("categorical"));
    const int classes = r.get(f.classes, "classes", 3);
    const double eps = r.get(f.epsilon, "epsilon", 0.005);
    d.scale = parse_scale(kind, classes, eps);
    d.dim = r.get(f.dim, "dim", std::size_t{0});
    d.featurize_seed = r.get(f.featurize_seed, "featurize-seed", std::uint64_t{0});
    return d;
}

Dataset load(const DataSettings& d) {
    return with_context("dataset '" + d.path + "'", [&] {
        LoadOptions opts{d.scale, d.dim, kDefaultHashDim, d.featurize_seed};
        Dataset ds = load_dataset(d.path, opts);
        if (ds.records().empty()) throw InputError("no annotation records");
        if (!d.scale.is_categorical()) ds = scale_labels(ds, d.scale.boundary_epsilon);
        return ds;
    });
}

TrainConfig resolve_train(Resolver& r, const Flags& f) {
    TrainConfig c;
    c.learning_rate = r.get(f.lr, "lr", c.learning_rate);
    c.batch_size = r.get(f.batch_size, "batch-size", c.batch_size);
    c.max_epochs = r.get(f.epochs, "epochs", c.max_epochs);
    c.early_stop_tolerance = r.get(f.early_stop_tol, "early-stop-tol", c.early_stop_tolerance);
    c.seed = r.get(f.seed, "seed", c.seed);
    if (!(c.learning_rate > 0.0)) throw InputError("--lr must be positive");
    if (c.batch_size == 0) throw InputError("--batch-size must be positive");
    if (c.max_epochs < 1) throw InputError("--epochs must be at least 1");
    if (c.early_stop_tolerance < 0.0) throw InputError("--early-stop-tol must be non-negative");
    return c;
}

ordered_json train_config_json(const TrainConfig& c) {
    ordered_json j;
    j["learning_rate"] = c.learning_rate;
    j["beta1"] = c.beta1;
    j["beta2"] = c.beta2;
    j["adam_epsilon"] = c.adam_epsilon;
    j["batch_size"] = c.batch_size;
    j["max_epochs"] = c.max_epochs;
    j["early_stop_tolerance"] = c.early_stop_tolerance;
    j["seed"] = c.seed;
    j["covariance_floor"] = c.covariance_floor;
    return j;
}

void add_data_options(CLI::App* cmd, Flags& f) {
    cmd->add_option("--data", f.data, "dataset (line-delimited JSON)");
    cmd->add_option("--scale", f.scale, "categorical or continuous");
    cmd->add_option("--classes", f.classes, "number of classes K");
    cmd->add_option("--epsilon", f.epsilon, "boundary clamp for continuous labels");
    cmd->add_option("--dim", f.dim, "feature dimension (0: the file's own, or 768 when every item is hashed)");
    cmd->add_option("--featurize-seed", f.featurize_seed, "seed of the hashed featurizer");
}

void add_train_options(CLI::App* cmd, Flags& f) {
    cmd->add_option("--effects", f.effects, "fixed, intercepts or slopes (cv: comma-separated list)");
    cmd->add_option("--hidden", f.hidden, "hidden units of the head");
    cmd->add_option("--seed", f.seed, "training and partition seed");
    cmd->add_option("--epochs", f.epochs, "maximum epochs");
    cmd->add_option("--lr", f.lr, "Adam learning rate");
    cmd->add_option("--batch-size", f.batch_size, "mini-batch size");
    cmd->add_option("--early-stop-tol", f.early_stop_tol, "early-stopping tolerance on the mean epoch loss");
}

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON config; flags win over its values");
    cmd->add_option("--out", f.out, "output directory");
}

int cmd_simulate(Flags& f, std::ostream& out) {
    Resolver r(f.config);
    const auto spec_path = r.get(f.spec, "spec", std::string());
    if (spec_path.empty()) throw InputError("--spec is required");
    const auto out_dir = r.get(f.out, "out", std::string("out"));
    SimulationSpec spec = with_context("simulation spec '" + spec_path + "'",
                                       [&] { return simulation_spec_from_json(read_file(spec_path)); });
    if (f.seed) spec.seed = *f.seed;
    r.set("seed", spec.seed);
    const Simulation sim = simulate(spec);

    Outputs o;
    o.add("data/dataset.jsonl", dataset_to_jsonl(sim.dataset));
    o.add("data/truth.json", ground_truth_to_json(sim.truth));
    o.add("data/simulation.json", simulation_spec_to_json(spec));
    ordered_json seeds;
    seeds["simulation"] = spec.seed;
    ordered_json inputs;
    inputs["spec"] = input_entry(spec_path);
    o.commit(out_dir, "simulate", r.resolved(), seeds, inputs);
    out << "simulated " << sim.dataset.items().size() << " items, " << sim.dataset.records().size()
        << " records, " << sim.dataset.annotators().size() << " annotators -> " << out_dir << "\n";
    return 0;
}

int cmd_fit(Flags& f, std::ostream& out) {
    Resolver r(f.config);
    const DataSettings d = resolve_data(r, f);
    const auto effects = parse_effects(r.get(f.effects, "effects", std::string("intercepts")));
    const auto hidden = r.get(f.hidden, "hidden", std::size_t{128});
    const TrainConfig config = resolve_train(r, f);
    const auto out_dir = r.get(f.out, "out", std::string("out"));
    r.set("train_config", train_config_json(config));

    const Dataset ds = load(d);
    const ModelSpec spec{effects, d.scale, ds.feature_dim(), hidden};
    const FitResult result = with_context("fit", [&] { return fit(spec, ds, config); });

    Outputs o;
    const std::string name = to_string(effects);
    o.add("models/" + name + ".json", model_to_json(result.model));
    o.add("logs/" + name + "_train.jsonl", training_log_jsonl(result.log));
    ordered_json seeds;
    seeds["train"] = config.seed;
    seeds["featurize"] = d.featurize_seed;
    ordered_json inputs;
    inputs["data"] = input_entry(d.path);
    o.commit(out_dir, "fit", r.resolved(), seeds, inputs);
    out << "fit " << name << ": " << result.log.size() << " epochs, final mean loss "
        << (result.log.empty() ? 0.0 : result.log.back().mean_loss) << " -> " << out_dir << "\n";
    return 0;
}

int cmd_cv(Flags& f, std::ostream& out) {
    Resolver r(f.config);
    const DataSettings d = resolve_data(r, f);
    std::vector<EffectsMode> effects;
    for (const auto& e : split_list(r.get(f.effects, "effects", std::string("fixed,intercepts"))))
        effects.push_back(parse_effects(e));
    std::vector<PartitionScheme> schemes;
    for (const auto& s : split_list(r.get(f.scheme, "scheme", std::string("random"))))
        schemes.push_back(parse_scheme(s));
    const auto hidden = r.get(f.hidden, "hidden", std::size_t{128});
    const int k = r.get(f.folds, "folds", kDefaultFolds);
    const TrainConfig config = resolve_train(r, f);
    EvalOptions eval;
    eval.marginalize = r.get_flag(f.marginalize, "marginalize");
    eval.mc_samples = r.get(f.mc_samples, "mc-samples", 100);
    eval.jobs = r.get(f.jobs, "jobs", 1);
    const int family_flag = r.get(f.bonferroni_family, "bonferroni-family", 0);
    const auto out_dir = r.get(f.out, "out", std::string("out"));
    r.set("train_config", train_config_json(config));
    if (k < 2) throw InputError("--folds must be at least 2");
    if (eval.mc_samples < 1) throw InputError("--mc-samples must be positive");
    if (eval.jobs < 1) throw InputError("--jobs must be positive");
    if (family_flag < 0) throw InputError("--bonferroni-family must be non-negative");

    const Dataset ds = load(d);
    Outputs o;
    std::vector<CVReport> reports;
    std::vector<SignificanceResult> significance;
    for (auto scheme : schemes) {
        const std::size_t first = reports.size();
        const FoldAssignment folds = with_context("partition " + to_string(scheme),
                                                  [&] { return partition(ds, scheme, k, config.seed); });
        o.add("reports/partition_" + to_string(scheme) + ".json", fold_assignment_to_json(folds));
        for (auto e : effects) {
            const ModelSpec spec{e, d.scale, ds.feature_dim(), hidden};
            CVResult res = with_context("cv " + to_string(e) + "/" + to_string(scheme), [&] {
                return cross_validate(spec, ds, scheme, config, k, config.seed, eval);
            });
            for (std::size_t fold = 0; fold < res.models.size(); ++fold)
                o.add("models/" + to_string(e) + "_" + to_string(scheme) + "_fold" + std::to_string(fold) + ".json",
                      model_to_json(res.models[fold]));
            reports.push_back(std::move(res.report));
        }
        const std::optional<int> family = family_flag > 0 ? std::optional<int>(family_flag) : std::nullopt;
        const auto sig = compare_reports(std::span(reports).subspan(first), family);
        significance.insert(significance.end(), sig.begin(), sig.end());
    }

    for (const auto& rep : reports)
        o.add("reports/cv_" + rep.model + "_" + to_string(rep.scheme) + ".json", cv_report_to_json(rep));
    o.add("reports/folds.csv", cv_reports_to_csv(reports));
    ordered_json sig = ordered_json::array();
    for (const auto& s : significance) {
        ordered_json j;
        j["model_a"] = s.model_a;
        j["model_b"] = s.model_b;
        j["scheme"] = to_string(s.scheme);
        j["statistic"] = s.statistic;
        j["p_raw"] = s.p_raw;
        j["p_bonferroni"] = s.p_bonferroni;
        sig.push_back(std::move(j));
    }
    o.add("reports/significance.json", sig.dump(2) + "\n");
    const ResultsTable table = emit_results_table(reports);
    const std::string text = results_table_text(table);
    o.add("reports/results_table.csv", results_table_csv(table));
    o.add("reports/results_table.txt", text);

    ordered_json seeds;
    seeds["train"] = config.seed;
    seeds["partition"] = config.seed;
    seeds["featurize"] = d.featurize_seed;
    ordered_json inputs;
    inputs["data"] = input_entry(d.path);
    o.commit(out_dir, "cv", r.resolved(), seeds, inputs);
    out << text;
    return 0;
}

int cmd_analyze(Flags& f, std::ostream& out) {
    Resolver r(f.config);
    const auto paths = r.get_list(f.models, "model");
    if (paths.empty()) throw InputError("--model is required");
    const bool slope_extension = r.get_flag(f.slope_extension, "slope-extension");
    const auto permutations = r.get(f.permutations, "permutations", kDefaultPermutations);
    const auto seed = r.get(f.seed, "seed", std::uint64_t{0});
    const auto h_list = r.get(f.boundary_h, "boundary-h", std::string("-2,0,2"));
    const auto out_dir = r.get(f.out, "out", std::string("out"));

    std::vector<FittedModel> models;
    ordered_json inputs = ordered_json::array();
    for (const auto& p : paths) {
        models.push_back(with_context("model '" + p + "'", [&] { return model_from_json(read_file(p)); }));
        inputs.push_back(input_entry(p));
    }
    const auto profiles = with_context("bias profiles", [&] { return bias_profiles(models, slope_extension); });
    const bool categorical = models.front().spec().scale.is_categorical();

    Outputs o;
    o.add("analysis/bias_profiles.csv", profiles_to_csv(profiles, categorical));
    if (categorical) {
        const BiasDispersion disp = bias_dispersion(profiles);
        ordered_json j;
        j["iqr"] = ordered_json::array();
        for (auto [lo, hi] : disp.iqr) j["iqr"].push_back({{"q25", lo}, {"q75", hi}, {"width", hi - lo}});
        j["spearman"] = ordered_json::array();
        for (const auto& row : disp.correlation) {
            ordered_json jr = ordered_json::array();
            for (const auto& v : row) jr.push_back(v ? ordered_json(*v) : ordered_json(nullptr));
            j["spearman"].push_back(std::move(jr));
        }
        o.add("analysis/bias_dispersion.json", j.dump(2) + "\n");
    } else {
        const CorrelationResult c = precision_bias_correlation(profiles, permutations, seed);
        ordered_json j;
        j["spearman"] = c.r ? ordered_json(*c.r) : ordered_json(nullptr);
        j["p_value"] = c.p ? ordered_json(*c.p) : ordered_json(nullptr);
        j["permutations"] = c.permutations;
        o.add("analysis/precision_bias.json", j.dump(2) + "\n");
        double nu0 = 0.0;
        for (const auto& m : models) nu0 += m.nu0();
        nu0 /= static_cast<double>(models.size());
        std::vector<std::pair<double, std::vector<BoundaryPoint>>> curves;
        for (const auto& h : split_list(h_list)) {
            double v;
            try {
                v = std::stod(h);
            } catch (const std::exception&) {
                throw InputError("--boundary-h: not a number '" + h + "'");
            }
            curves.emplace_back(v, sparsity_boundary(v, nu0));
        }
        o.add("analysis/sparsity_boundary.csv", boundary_to_csv(curves));
    }
    ordered_json seeds;
    seeds["permutation"] = seed;
    ordered_json in;
    in["models"] = inputs;
    o.commit(out_dir, "analyze", r.resolved(), seeds, in);
    out << "analyzed " << profiles.size() << " annotators over " << models.size() << " model(s) -> " << out_dir
        << "\n";
    return 0;
}

int cmd_score(Flags& f, std::ostream& out) {
    Resolver r(f.config);
    const DataSettings d = resolve_data(r, f);
    const auto pred_path = r.get(f.predictions, "predictions", std::string());
    if (pred_path.empty()) throw InputError("--predictions is required");
    const auto out_dir = r.get(f.out, "out", std::string("out"));
    const Dataset ds = load(d);

    std::vector<std::optional<double>> preds(ds.records().size());
    {
        std::istringstream in(read_file(pred_path));
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const std::string where = pred_path + ":" + std::to_string(line_no);
            std::size_t idx;
            double value;
            try {
                const json j = json::parse(line);
                idx = j.at("record").get<std::size_t>();
                value = j.at("prediction").get<double>();
            } catch (const json::exception& e) {
                throw InputError(where + ": malformed line: " + e.what());
            }
            if (idx >= preds.size()) throw InputError(where + ": record index out of range");
            if (preds[idx]) throw InputError(where + ": duplicate prediction for record " + std::to_string(idx));
            preds[idx] = value;
        }
    }
    std::vector<double> values;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (!preds[i]) throw InputError(pred_path + ": no prediction for record " + std::to_string(i));
        values.push_back(*preds[i]);
    }
    const FoldScore s = score_fold(ds, values, 0);
    ordered_json j;
    j["records"] = s.heldout_records;
    j["metric"] = d.scale.is_categorical() ? "accuracy" : "spearman";
    j["raw_score"] = s.raw_score ? ordered_json(*s.raw_score) : ordered_json(nullptr);
    j["base_score"] = s.base_score;
    j["best_score"] = s.best_score;
    j["rescaled_score"] = s.rescaled_score;
    Outputs o;
    o.add("reports/score.json", j.dump(2) + "\n");
    ordered_json inputs;
    inputs["data"] = input_entry(d.path);
    inputs["predictions"] = input_entry(pred_path);
    o.commit(out_dir, "score", r.resolved(), ordered_json::object(), inputs);
    out << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"annmix: annotator mixed-effects models for inference judgments"};
    app.name("annmix");
    app.require_subcommand(1);
    Flags f;

    auto* simulate_cmd = app.add_subcommand("simulate", "draw a synthetic dataset and its ground truth");
    simulate_cmd->add_option("--spec", f.spec, "simulation spec (JSON)");
    simulate_cmd->add_option("--seed", f.seed, "overrides the spec's seed");
    add_common(simulate_cmd, f);

    auto* fit_cmd = app.add_subcommand("fit", "fit one model on a dataset");
    add_data_options(fit_cmd, f);
    add_train_options(fit_cmd, f);
    add_common(fit_cmd, f);

    auto* cv_cmd = app.add_subcommand("cv", "cross-validate models under partition schemes");
    add_data_options(cv_cmd, f);
    add_train_options(cv_cmd, f);
    cv_cmd->add_option("--scheme", f.scheme, "random, predicate, structure, annotator (comma-separated)");
    cv_cmd->add_option("--folds", f.folds, "number of folds");
    cv_cmd->add_flag("--marginalize", f.marginalize, "average over prior draws for unseen annotators");
    cv_cmd->add_option("--mc-samples", f.mc_samples, "Monte Carlo draws for --marginalize");
    cv_cmd->add_option("--jobs", f.jobs, "folds trained in parallel");
    cv_cmd->add_option("--bonferroni-family", f.bonferroni_family, "comparisons to correct for (0: tests run)");
    add_common(cv_cmd, f);

    auto* analyze_cmd = app.add_subcommand("analyze", "annotator bias profiles and sparsity boundaries");
    analyze_cmd->add_option("--model", f.models, "model file (repeat to average fold models)");
    analyze_cmd->add_flag("--slope-extension", f.slope_extension, "add the slope heads' offset at z = 0");
    analyze_cmd->add_option("--permutations", f.permutations, "permutations for the correlation p-value");
    analyze_cmd->add_option("--seed", f.seed, "permutation seed");
    analyze_cmd->add_option("--boundary-h", f.boundary_h, "head outputs for boundary curves (comma-separated)");
    add_common(analyze_cmd, f);

    auto* score_cmd = app.add_subcommand("score", "score a predictions file against a dataset");
    add_data_options(score_cmd, f);
    score_cmd->add_option("--predictions", f.predictions, "JSONL of {\"record\", \"prediction\"}");
    add_common(score_cmd, f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*simulate_cmd) return cmd_simulate(f, out);
        if (*fit_cmd) return cmd_fit(f, out);
        if (*cv_cmd) return cmd_cv(f, out);
        if (*analyze_cmd) return cmd_analyze(f, out);
        if (*score_cmd) return cmd_score(f, out);
    } catch (const std::exception& e) {
        err << "annmix: error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace annmix
