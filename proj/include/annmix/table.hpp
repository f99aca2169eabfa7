#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "annmix/evaluation.hpp"

namespace annmix {

// Mean rescaled scores: one row per model, an Acc/Corr column pair per
// scheme in the order random, predicate, structure, annotator. Only pairs
// with at least one report appear.
struct ResultsTable {
    struct Column {
        PartitionScheme scheme;
        ResponseScale::Kind kind;
        std::string header() const;  // e.g. "random Acc"
    };
    std::vector<std::string> models;
    std::vector<Column> columns;
    std::vector<std::vector<std::optional<double>>> cells;  // [model][column]
    std::vector<std::vector<bool>> best;                    // ties are all marked
};

// Throws std::invalid_argument when reports disagree on fold count or the
// same (model, scheme, scale) appears twice.
ResultsTable emit_results_table(std::span<const CVReport> reports);

std::string results_table_csv(const ResultsTable& table);
std::string results_table_text(const ResultsTable& table);

}  // namespace annmix
