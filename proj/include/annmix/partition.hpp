#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "annmix/data.hpp"
#include "annmix/io.hpp"

namespace annmix {

enum class PartitionScheme { Random, ByPredicate, ByStructure, ByAnnotator };

std::string to_string(PartitionScheme scheme);
PartitionScheme parse_scheme(std::string_view name);

// Grouped k-fold assignment of records.
//
// Random, ByPredicate and ByStructure additionally keep every annotator in
// every fold: annotators with at least k records (and, for the grouped
// schemes, at least k distinct groups) appear in all k folds. Annotators
// with fewer records are spread over distinct folds and reported in
// `warnings`.
struct FoldAssignment {
    PartitionScheme scheme = PartitionScheme::Random;
    int k = 5;
    std::uint64_t seed = 0;
    std::vector<int> fold_of_record;
    std::vector<std::string> warnings;

    std::vector<std::size_t> heldout(int fold) const;
    std::vector<std::size_t> training(int fold) const;
};

class PartitionError : public InputError {
public:
    using InputError::InputError;
};

FoldAssignment partition(const Dataset& dataset, PartitionScheme scheme, int k, std::uint64_t seed);

// {"scheme", "k", "seed", "fold_of_record": {"<record index>": fold, ...}}
std::string fold_assignment_to_json(const FoldAssignment& folds);

}  // namespace annmix
