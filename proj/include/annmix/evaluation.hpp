#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "annmix/data.hpp"
#include "annmix/model.hpp"
#include "annmix/partition.hpp"
#include "annmix/trainer.hpp"

namespace annmix {

inline constexpr int kDefaultFolds = 5;

struct FoldScore {
    int fold = 0;
    std::size_t heldout_records = 0;
    std::optional<double> raw_score;  // nullopt: undefined correlation
    double base_score = 0.0;
    double best_score = 0.0;
    double rescaled_score = 0.0;
};

struct SignificanceResult {
    std::string model_a;
    std::string model_b;
    PartitionScheme scheme = PartitionScheme::Random;
    double statistic = 0.0;
    double p_raw = 1.0;
    double p_bonferroni = 1.0;
};

struct CVReport {
    std::string model;
    PartitionScheme scheme = PartitionScheme::Random;
    ResponseScale scale;
    int k = kDefaultFolds;
    std::uint64_t seed = 0;
    std::vector<FoldScore> folds;
    double mean_rescaled = 0.0;
    std::vector<SignificanceResult> significance;
    std::vector<std::string> warnings;

    std::vector<double> rescaled_scores() const;
};

// Scores held-out point predictions (argmax class or predicted mean) for one
// fold. Base and best-fixed references come from the held-out annotations:
// the global majority/mean and the per-item majority/mean. A continuous
// base is 0 by convention; an undefined raw correlation scores 0.
FoldScore score_fold(const Dataset& heldout, std::span<const double> predictions, int fold);

// Point prediction for record `record` of the held-out dataset.
using FoldPredictor = std::function<double(const Dataset& heldout, std::size_t record)>;
// Builds a predictor from the training records of one fold. It never sees
// the held-out records.
using PredictorFactory = std::function<FoldPredictor(const Dataset& train, int fold)>;

CVReport cross_validate_with(const std::string& label, const PredictorFactory& factory, const Dataset& dataset,
                             PartitionScheme scheme, int k, std::uint64_t seed, int jobs = 1);

struct EvalOptions {
    // Under the annotator scheme, average over effects drawn from the prior
    // instead of using the prior mean.
    bool marginalize = false;
    int mc_samples = 100;
    int jobs = 1;
};

struct CVResult {
    CVReport report;
    std::vector<FittedModel> models;  // one per fold
};

// Fits on k-1 folds and scores the held-out fold. Known annotators are
// predicted with their effects; under the annotator scheme every held-out
// annotator is unseen and gets the prior mean.
CVResult cross_validate(const ModelSpec& spec, const Dataset& dataset, PartitionScheme scheme,
                        const TrainConfig& config, int k, std::uint64_t seed, const EvalOptions& options = {});

// Pairwise rank-sum tests on per-fold rescaled scores between every two
// reports of the same scheme. Results are appended to both reports. The
// Bonferroni family defaults to the number of tests performed.
std::vector<SignificanceResult> compare_reports(std::span<CVReport> reports,
                                                std::optional<int> num_comparisons = std::nullopt);

std::string cv_report_to_json(const CVReport& report);
// One row per fold per model.
std::string cv_reports_to_csv(std::span<const CVReport> reports);

}  // namespace annmix
