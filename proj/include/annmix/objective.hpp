#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "annmix/data.hpp"
#include "annmix/model.hpp"

namespace annmix {

// Per-batch MAP objective
//
//   loss = (1/B) sum_{i in batch} NLL_i + (1/N) sum_{a} -log prior(effects_a)
//
// with B the batch size and N the number of training records, so that one
// pass over the data counts every annotator's prior once against the full
// likelihood. The prior sum runs over all annotators in the model. The fixed
// model has no prior term.
//
// `data` must be the training dataset the model was built for: its annotator
// indices are the model's annotator indices.
double map_loss(const FittedModel& model, const Dataset& data, std::span<const std::size_t> batch,
                std::size_t dataset_size);

struct BatchObjective {
    double loss = 0.0;
    std::vector<double> gradient;  // laid out like model.params()
};

// OpenMP kernel whose result does not depend on the thread count. Shared-head
// models process records in fixed chunks of kGradientChunk reduced in chunk
// order; slopes models give each annotator's records (in batch order) to one
// thread, which owns that annotator's gradient slices.
inline constexpr std::size_t kGradientChunk = 16;
BatchObjective objective_and_gradient(const FittedModel& model, const Dataset& data,
                                      std::span<const std::size_t> batch, std::size_t dataset_size);

// Serial reference for the kernel above; one record at a time, straight into
// the dense gradient.
BatchObjective objective_and_gradient_reference(const FittedModel& model, const Dataset& data,
                                                std::span<const std::size_t> batch, std::size_t dataset_size);

}  // namespace annmix
