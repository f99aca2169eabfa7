#include "annmix/evaluation.hpp"

#include <exception>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "annmix/metrics.hpp"

namespace annmix {

std::vector<double> CVReport::rescaled_scores() const {
    std::vector<double> out;
    for (const auto& f : folds) out.push_back(f.rescaled_score);
    return out;
}

FoldScore score_fold(const Dataset& heldout, std::span<const double> predictions, int fold) {
    const auto records = heldout.records();
    if (predictions.size() != records.size()) throw std::invalid_argument("one prediction per held-out record needed");
    std::vector<double> truth(records.size());
    for (std::size_t r = 0; r < records.size(); ++r) truth[r] = records[r].label;

    const auto per_item = best_fixed_predictions(heldout);
    std::vector<double> best_pred(records.size());
    for (std::size_t r = 0; r < records.size(); ++r) best_pred[r] = per_item[records[r].item];

    FoldScore score;
    score.fold = fold;
    score.heldout_records = records.size();
    const auto& scale = heldout.scale();
    if (scale.is_categorical()) {
        const std::vector<double> base_pred(records.size(), baseline_prediction(heldout));
        score.raw_score = accuracy(predictions, truth);
        score.base_score = accuracy(base_pred, truth);
        score.best_score = accuracy(best_pred, truth);
        score.rescaled_score = rescaled_score(*score.raw_score, score.base_score, score.best_score, scale);
    } else {
        score.raw_score = spearman(predictions, truth);
        score.base_score = 0.0;
        const auto best = spearman(best_pred, truth);
        if (!best) throw std::domain_error("fold " + std::to_string(fold) + ": best-fixed correlation is undefined");
        score.best_score = *best;
        score.rescaled_score = rescaled_score(score.raw_score.value_or(0.0), 0.0, score.best_score, scale);
    }
    return score;
}

namespace {

template <typename Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs > 0 ? jobs : 1)
    for (int i = 0; i < n; ++i) {
        try {
            fn(i);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

CVReport assemble(const std::string& label, const Dataset& dataset, const FoldAssignment& folds,
                  std::vector<FoldScore> scores) {
    CVReport report;
    report.model = label;
    report.scheme = folds.scheme;
    report.scale = dataset.scale();
    report.k = folds.k;
    report.seed = folds.seed;
    report.folds = std::move(scores);
    report.warnings = folds.warnings;
    double sum = 0.0;
    for (const auto& f : report.folds) sum += f.rescaled_score;
    report.mean_rescaled = sum / static_cast<double>(report.folds.size());
    return report;
}

}  // namespace

CVReport cross_validate_with(const std::string& label, const PredictorFactory& factory, const Dataset& dataset,
                             PartitionScheme scheme, int k, std::uint64_t seed, int jobs) {
    const FoldAssignment folds = partition(dataset, scheme, k, seed);
    std::vector<FoldScore> scores(static_cast<std::size_t>(k));
    parallel_for(k, jobs, [&](int f) {
        const auto train_idx = folds.training(f);
        const auto test_idx = folds.heldout(f);
        const Dataset train = dataset.subset(train_idx);
        const Dataset heldout = dataset.subset(test_idx);
        const FoldPredictor predictor = factory(train, f);
        std::vector<double> predictions(heldout.records().size());
        for (std::size_t r = 0; r < predictions.size(); ++r) predictions[r] = predictor(heldout, r);
        scores[static_cast<std::size_t>(f)] = score_fold(heldout, predictions, f);
    });
    return assemble(label, dataset, folds, std::move(scores));
}

CVResult cross_validate(const ModelSpec& spec, const Dataset& dataset, PartitionScheme scheme,
                        const TrainConfig& config, int k, std::uint64_t seed, const EvalOptions& options) {
    const FoldAssignment folds = partition(dataset, scheme, k, seed);
    std::vector<FoldScore> scores(static_cast<std::size_t>(k));
    std::vector<FittedModel> models(static_cast<std::size_t>(k));
    const bool unseen_annotators = scheme == PartitionScheme::ByAnnotator;
    const bool marginalize = options.marginalize && unseen_annotators && spec.has_intercepts();

    parallel_for(k, options.jobs, [&](int f) {
        const Dataset train = dataset.subset(folds.training(f));
        const Dataset heldout = dataset.subset(folds.heldout(f));
        FitResult fitted = fit(spec, train, config);
        const FittedModel& model = fitted.model;
        std::vector<double> predictions(heldout.records().size());
        for (std::size_t r = 0; r < predictions.size(); ++r) {
            const Record& rec = heldout.records()[r];
            const auto z = heldout.items()[rec.item].features;
            if (marginalize) {
                predictions[r] = point_prediction(
                    predict_marginalized(model, z, options.mc_samples, derive_seed(seed, r)));
                continue;
            }
            std::optional<std::size_t> annotator;
            if (!unseen_annotators) annotator = model.find_annotator(heldout.annotators()[rec.annotator]);
            predictions[r] = point_prediction(predict_indexed(model, z, annotator));
        }
        scores[static_cast<std::size_t>(f)] = score_fold(heldout, predictions, f);
        models[static_cast<std::size_t>(f)] = std::move(fitted.model);
    });
    return {assemble(to_string(spec.effects), dataset, folds, std::move(scores)), std::move(models)};
}

std::vector<SignificanceResult> compare_reports(std::span<CVReport> reports, std::optional<int> num_comparisons) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < reports.size(); ++i)
        for (std::size_t j = i + 1; j < reports.size(); ++j)
            if (reports[i].scheme == reports[j].scheme) pairs.emplace_back(i, j);
    const int family = num_comparisons.value_or(static_cast<int>(std::max<std::size_t>(pairs.size(), 1)));
    std::vector<SignificanceResult> out;
    for (auto [i, j] : pairs) {
        const auto a = reports[i].rescaled_scores();
        const auto b = reports[j].rescaled_scores();
        const auto test = ranksum_test(a, b, family);
        SignificanceResult s{reports[i].model, reports[j].model, reports[i].scheme, test.statistic, test.p_raw,
                             test.p_bonferroni};
        reports[i].significance.push_back(s);
        reports[j].significance.push_back(s);
        out.push_back(s);
    }
    return out;
}

std::string cv_report_to_json(const CVReport& report) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["model"] = report.model;
    j["scheme"] = to_string(report.scheme);
    j["scale"] = to_string(report.scale.kind);
    j["metric"] = report.scale.is_categorical() ? "accuracy" : "spearman";
    j["k"] = report.k;
    j["seed"] = report.seed;
    ordered_json folds = ordered_json::array();
    for (const auto& f : report.folds) {
        ordered_json jf;
        jf["fold"] = f.fold;
        jf["heldout_records"] = f.heldout_records;
        jf["raw_score"] = f.raw_score ? ordered_json(*f.raw_score) : ordered_json(nullptr);
        jf["base_score"] = f.base_score;
        jf["best_score"] = f.best_score;
        jf["rescaled_score"] = f.rescaled_score;
        folds.push_back(std::move(jf));
    }
    j["folds"] = std::move(folds);
    j["mean_rescaled"] = report.mean_rescaled;
    ordered_json sig = ordered_json::array();
    for (const auto& s : report.significance) {
        ordered_json js;
        js["model_a"] = s.model_a;
        js["model_b"] = s.model_b;
        js["scheme"] = to_string(s.scheme);
        js["statistic"] = s.statistic;
        js["p_raw"] = s.p_raw;
        js["p_bonferroni"] = s.p_bonferroni;
        sig.push_back(std::move(js));
    }
    j["significance"] = std::move(sig);
    j["warnings"] = report.warnings;
    return j.dump(2) + "\n";
}

std::string cv_reports_to_csv(std::span<const CVReport> reports) {
    std::ostringstream out;
    out.precision(17);
    out << "model,scheme,scale,fold,heldout_records,raw_score,base_score,best_score,rescaled_score\n";
    for (const auto& r : reports)
        for (const auto& f : r.folds) {
            out << r.model << ',' << to_string(r.scheme) << ',' << to_string(r.scale.kind) << ',' << f.fold << ','
                << f.heldout_records << ',';
            if (f.raw_score) out << *f.raw_score;
            out << ',' << f.base_score << ',' << f.best_score << ',' << f.rescaled_score << '\n';
        }
    return out.str();
}

}  // namespace annmix
