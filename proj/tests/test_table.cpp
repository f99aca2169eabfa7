#include <doctest.h>

#include "annmix/table.hpp"

using namespace annmix;

namespace {

CVReport report(const std::string& model, PartitionScheme scheme, ResponseScale scale, double mean, int k = 5) {
    CVReport r;
    r.model = model;
    r.scheme = scheme;
    r.scale = scale;
    r.k = k;
    r.folds.resize(static_cast<std::size_t>(k));
    r.mean_rescaled = mean;
    return r;
}

}  // namespace

TEST_CASE("results table marks the best model per column") {
    const auto cat = ResponseScale::categorical(3);
    const auto con = ResponseScale::continuous();
    const std::vector<CVReport> reports{
        report("fixed", PartitionScheme::Random, cat, 1.00),
        report("intercepts", PartitionScheme::Random, cat, 1.15),
        report("fixed", PartitionScheme::ByAnnotator, con, 0.40),
        report("intercepts", PartitionScheme::ByAnnotator, con, 0.40),
        report("intercepts", PartitionScheme::Random, con, 0.90),
    };
    const ResultsTable t = emit_results_table(reports);
    CHECK(t.models == std::vector<std::string>{"fixed", "intercepts"});
    REQUIRE(t.columns.size() == 3);
    CHECK(t.columns[0].header() == "random Acc");
    CHECK(t.columns[1].header() == "random Corr");
    CHECK(t.columns[2].header() == "annotator Corr");
    CHECK_FALSE(t.best[0][0]);
    CHECK(t.best[1][0]);
    CHECK_FALSE(t.cells[0][1].has_value());
    CHECK(t.best[1][1]);
    CHECK(t.best[0][2]);  // ties are all best
    CHECK(t.best[1][2]);

    CHECK(results_table_csv(t) ==
          "model,random Acc,random Acc best,random Corr,random Corr best,annotator Corr,annotator Corr best\n"
          "fixed,1,0,,0,0.40000000000000002,1\n"
          "intercepts,1.1499999999999999,1,0.90000000000000002,1,0.40000000000000002,1\n");
    CHECK(results_table_text(t) ==
          "model       random Acc  random Corr  annotator Corr\n"
          "fixed           1.000             -          0.400*\n"
          "intercepts      1.150*       0.900*          0.400*\n"
          "* best in column\n");
}

TEST_CASE("results table errors") {
    const auto cat = ResponseScale::categorical(3);
    const std::vector<CVReport> uneven{report("fixed", PartitionScheme::Random, cat, 0.5),
                                       report("slopes", PartitionScheme::Random, cat, 0.5, 4)};
    CHECK_THROWS_WITH_AS(emit_results_table(uneven), doctest::Contains("fold counts"), std::invalid_argument);
    const std::vector<CVReport> twice{report("fixed", PartitionScheme::Random, cat, 0.5),
                                      report("fixed", PartitionScheme::Random, cat, 0.6)};
    CHECK_THROWS_WITH_AS(emit_results_table(twice), doctest::Contains("duplicate"), std::invalid_argument);
    CHECK_THROWS(emit_results_table(std::vector<CVReport>{}));
}
