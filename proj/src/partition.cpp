#include "annmix/partition.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "annmix/rng.hpp"

namespace annmix {

std::string to_string(PartitionScheme scheme) {
    switch (scheme) {
        case PartitionScheme::Random: return "random";
        case PartitionScheme::ByPredicate: return "predicate";
        case PartitionScheme::ByStructure: return "structure";
        case PartitionScheme::ByAnnotator: return "annotator";
    }
    return "?";
}

PartitionScheme parse_scheme(std::string_view name) {
    if (name == "random") return PartitionScheme::Random;
    if (name == "predicate") return PartitionScheme::ByPredicate;
    if (name == "structure") return PartitionScheme::ByStructure;
    if (name == "annotator") return PartitionScheme::ByAnnotator;
    throw InputError("unknown partition scheme '" + std::string(name) + "'");
}

std::vector<std::size_t> FoldAssignment::heldout(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < fold_of_record.size(); ++r)
        if (fold_of_record[r] == fold) out.push_back(r);
    return out;
}

std::vector<std::size_t> FoldAssignment::training(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < fold_of_record.size(); ++r)
        if (fold_of_record[r] != fold) out.push_back(r);
    return out;
}

namespace {

void partition_random(const Dataset& d, FoldAssignment& fa, Rng& rng) {
    const auto& annotators = d.annotators();
    std::vector<std::vector<std::size_t>> by_annotator(annotators.size());
    for (std::size_t r = 0; r < d.records().size(); ++r) by_annotator[d.records()[r].annotator].push_back(r);

    std::vector<std::size_t> order(annotators.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));

    // Deal one long round-robin over annotator-contiguous runs: any k
    // consecutive positions cover every fold, and fold sizes differ by <= 1.
    std::size_t position = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(fa.k)));
    for (std::size_t a : order) {
        auto& recs = by_annotator[a];
        rng.shuffle(std::span(recs));
        if (recs.size() < static_cast<std::size_t>(fa.k))
            fa.warnings.push_back("annotator '" + annotators[a] + "' has " + std::to_string(recs.size()) +
                                  " records, fewer than " + std::to_string(fa.k) + " folds");
        for (std::size_t r : recs) {
            fa.fold_of_record[r] = static_cast<int>(position % static_cast<std::size_t>(fa.k));
            ++position;
        }
    }
}

// Longest-processing-time greedy: biggest group to the lightest fold.
std::vector<int> assign_groups(std::span<const std::size_t> sizes, int k, Rng& rng) {
    std::vector<std::size_t> order(sizes.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sizes[a] > sizes[b]; });
    std::vector<std::size_t> load(static_cast<std::size_t>(k), 0);
    std::vector<int> fold(sizes.size(), 0);
    for (std::size_t g : order) {
        const auto lightest = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
        fold[g] = static_cast<int>(lightest);
        load[lightest] += sizes[g];
    }
    return fold;
}

// Moves groups between folds until every annotator reaches its required
// fold coverage, or no single move improves the total deficit.
class CoverageRepair {
public:
    CoverageRepair(std::vector<std::vector<std::size_t>> annotators_of_group, std::vector<std::size_t> group_sizes,
                   std::vector<int> required, std::vector<int>& fold, int k)
        : members_(std::move(annotators_of_group)), sizes_(std::move(group_sizes)),
          required_(std::move(required)), fold_(fold), k_(k) {
        const std::size_t n_annot = required_.size();
        count_.assign(n_annot * static_cast<std::size_t>(k_), 0);
        covered_.assign(n_annot, 0);
        load_.assign(static_cast<std::size_t>(k_), 0);
        groups_in_fold_.assign(static_cast<std::size_t>(k_), 0);
        for (std::size_t g = 0; g < members_.size(); ++g) {
            load_[static_cast<std::size_t>(fold_[g])] += sizes_[g];
            ++groups_in_fold_[static_cast<std::size_t>(fold_[g])];
            for (std::size_t a : members_[g])
                if (count_[idx(a, fold_[g])]++ == 0) ++covered_[a];
        }
    }

    long deficit() const {
        long total = 0;
        for (std::size_t a = 0; a < required_.size(); ++a) total += std::max(0, required_[a] - covered_[a]);
        return total;
    }

    std::vector<std::size_t> deficient() const {
        std::vector<std::size_t> out;
        for (std::size_t a = 0; a < required_.size(); ++a)
            if (covered_[a] < required_[a]) out.push_back(a);
        return out;
    }

    void run(int max_moves) {
        for (int iter = 0; iter < max_moves && deficit() > 0; ++iter) {
            long best_delta = 0;
            std::size_t best_group = 0;
            int best_target = -1;
            std::size_t best_spread = SIZE_MAX;
            for (std::size_t g = 0; g < members_.size(); ++g) {
                const int from = fold_[g];
                if (groups_in_fold_[static_cast<std::size_t>(from)] <= 1) continue;
                for (int to = 0; to < k_; ++to) {
                    if (to == from) continue;
                    const long delta = move_delta(g, from, to);
                    if (delta >= 0) continue;
                    const std::size_t spread = spread_after(g, from, to);
                    if (delta < best_delta || (delta == best_delta && spread < best_spread)) {
                        best_delta = delta;
                        best_group = g;
                        best_target = to;
                        best_spread = spread;
                    }
                }
            }
            if (best_target < 0) return;
            apply(best_group, best_target);
        }
    }

private:
    std::size_t idx(std::size_t a, int f) const { return a * static_cast<std::size_t>(k_) + static_cast<std::size_t>(f); }

    long annot_deficit(std::size_t a, int covered) const { return std::max(0, required_[a] - covered); }

    long move_delta(std::size_t g, int from, int to) const {
        long delta = 0;
        for (std::size_t a : members_[g]) {
            int cov = covered_[a];
            const long before = annot_deficit(a, cov);
            if (count_[idx(a, from)] == 1) --cov;
            if (count_[idx(a, to)] == 0) ++cov;
            delta += annot_deficit(a, cov) - before;
        }
        return delta;
    }

    std::size_t spread_after(std::size_t g, int from, int to) const {
        auto load = load_;
        load[static_cast<std::size_t>(from)] -= sizes_[g];
        load[static_cast<std::size_t>(to)] += sizes_[g];
        auto [lo, hi] = std::minmax_element(load.begin(), load.end());
        return *hi - *lo;
    }

    void apply(std::size_t g, int to) {
        const int from = fold_[g];
        for (std::size_t a : members_[g]) {
            if (--count_[idx(a, from)] == 0) --covered_[a];
            if (count_[idx(a, to)]++ == 0) ++covered_[a];
        }
        load_[static_cast<std::size_t>(from)] -= sizes_[g];
        load_[static_cast<std::size_t>(to)] += sizes_[g];
        --groups_in_fold_[static_cast<std::size_t>(from)];
        ++groups_in_fold_[static_cast<std::size_t>(to)];
        fold_[g] = to;
    }

    std::vector<std::vector<std::size_t>> members_;
    std::vector<std::size_t> sizes_;
    std::vector<int> required_;
    std::vector<int>& fold_;
    int k_;
    std::vector<int> count_;
    std::vector<int> covered_;
    std::vector<std::size_t> load_;
    std::vector<int> groups_in_fold_;
};

void partition_grouped(const Dataset& d, FoldAssignment& fa, Rng& rng) {
    const bool by_annotator = fa.scheme == PartitionScheme::ByAnnotator;
    const auto records = d.records();

    std::vector<std::size_t> group_of_record(records.size());
    std::vector<std::string> keys;
    std::unordered_map<std::string, std::size_t> key_index;
    for (std::size_t r = 0; r < records.size(); ++r) {
        std::string key;
        if (by_annotator) {
            key = d.annotators()[records[r].annotator];
        } else {
            const Item& item = d.items()[records[r].item];
            const auto& tag = fa.scheme == PartitionScheme::ByPredicate ? item.predicate : item.structure;
            if (!tag)
                throw PartitionError("item '" + item.id + "' has no " + to_string(fa.scheme) + " tag");
            key = *tag;
        }
        auto [it, inserted] = key_index.emplace(key, keys.size());
        if (inserted) keys.push_back(key);
        group_of_record[r] = it->second;
    }
    if (keys.size() < static_cast<std::size_t>(fa.k))
        throw PartitionError("only " + std::to_string(keys.size()) + " distinct " + to_string(fa.scheme) +
                             " groups for " + std::to_string(fa.k) + " folds");

    std::vector<std::size_t> sizes(keys.size(), 0);
    for (std::size_t g : group_of_record) ++sizes[g];
    std::vector<int> fold = assign_groups(sizes, fa.k, rng);

    if (!by_annotator) {
        const std::size_t n_annot = d.annotators().size();
        std::vector<std::vector<std::size_t>> members(keys.size());
        std::vector<std::vector<std::size_t>> groups_of_annot(n_annot);
        std::vector<std::size_t> records_of_annot(n_annot, 0);
        for (std::size_t r = 0; r < records.size(); ++r) {
            const std::size_t a = records[r].annotator;
            const std::size_t g = group_of_record[r];
            ++records_of_annot[a];
            if (members[g].empty() || members[g].back() != a) {
                if (std::find(members[g].begin(), members[g].end(), a) == members[g].end()) {
                    members[g].push_back(a);
                    groups_of_annot[a].push_back(g);
                }
            }
        }
        std::vector<int> required(n_annot);
        for (std::size_t a = 0; a < n_annot; ++a) {
            const auto distinct = groups_of_annot[a].size();
            if (records_of_annot[a] >= static_cast<std::size_t>(fa.k) && distinct < static_cast<std::size_t>(fa.k))
                throw PartitionError("annotator '" + d.annotators()[a] + "' spans only " + std::to_string(distinct) +
                                     " " + to_string(fa.scheme) + " groups; cannot occur in all " +
                                     std::to_string(fa.k) + " folds");
            if (records_of_annot[a] < static_cast<std::size_t>(fa.k))
                fa.warnings.push_back("annotator '" + d.annotators()[a] + "' has " +
                                      std::to_string(records_of_annot[a]) + " records, fewer than " +
                                      std::to_string(fa.k) + " folds");
            required[a] = static_cast<int>(std::min<std::size_t>(distinct, static_cast<std::size_t>(fa.k)));
        }
        CoverageRepair repair(std::move(members), sizes, std::move(required), fold, fa.k);
        repair.run(static_cast<int>(keys.size()) * fa.k * 4);
        if (repair.deficit() > 0) {
            const auto missing = repair.deficient();
            throw PartitionError("annotator coverage unsatisfiable under " + to_string(fa.scheme) +
                                 " partitioning: " + std::to_string(missing.size()) +
                                 " annotator(s) missing from some fold, e.g. '" + d.annotators()[missing.front()] +
                                 "'");
        }
    }

    for (std::size_t r = 0; r < records.size(); ++r) fa.fold_of_record[r] = fold[group_of_record[r]];
}

}  // namespace

FoldAssignment partition(const Dataset& dataset, PartitionScheme scheme, int k, std::uint64_t seed) {
    if (k < 2) throw PartitionError("need at least 2 folds");
    if (dataset.records().size() < static_cast<std::size_t>(k))
        throw PartitionError("fewer records than folds");
    FoldAssignment fa;
    fa.scheme = scheme;
    fa.k = k;
    fa.seed = seed;
    fa.fold_of_record.assign(dataset.records().size(), -1);
    Rng rng(seed);
    if (scheme == PartitionScheme::Random)
        partition_random(dataset, fa, rng);
    else
        partition_grouped(dataset, fa, rng);
    return fa;
}

std::string fold_assignment_to_json(const FoldAssignment& folds) {
    nlohmann::ordered_json j;
    j["scheme"] = to_string(folds.scheme);
    j["k"] = folds.k;
    j["seed"] = folds.seed;
    nlohmann::ordered_json map = nlohmann::ordered_json::object();
    for (std::size_t r = 0; r < folds.fold_of_record.size(); ++r) map[std::to_string(r)] = folds.fold_of_record[r];
    j["fold_of_record"] = std::move(map);
    j["warnings"] = folds.warnings;
    return j.dump(2) + "\n";
}

}  // namespace annmix
