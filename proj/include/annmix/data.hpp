#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace annmix {

// How labels are expressed: a class index in {0..K-1}, or a real in [0,1]
// that is clamped into (eps, 1-eps) before it meets the Beta likelihood.
struct ResponseScale {
    enum class Kind { Categorical, BoundedContinuous };

    Kind kind = Kind::Categorical;
    int num_classes = 3;
    double boundary_epsilon = 0.005;

    static ResponseScale categorical(int num_classes);
    static ResponseScale continuous(double boundary_epsilon = 0.005);

    bool is_categorical() const { return kind == Kind::Categorical; }
    // Width of the head output: K potentials, or one real for the Beta mean.
    int output_dim() const { return is_categorical() ? num_classes : 1; }
    // Width of an annotator intercept: K, or (log-precision offset, mean shift).
    int intercept_dim() const { return is_categorical() ? num_classes : 2; }

    bool operator==(const ResponseScale&) const = default;
};

std::string to_string(ResponseScale::Kind kind);

struct Item {
    std::string id;
    std::vector<double> features;
    std::optional<std::string> predicate;
    std::optional<std::string> structure;
    std::optional<std::string> text;
    std::optional<std::string> hypothesis;

    bool operator==(const Item&) const = default;
};

// External form of one observation.
struct AnnotationRecord {
    std::string item_id;
    std::string annotator_id;
    double label = 0.0;
};

// Indexed form used everywhere internally.
struct Record {
    std::size_t item = 0;
    std::size_t annotator = 0;
    double label = 0.0;

    int class_index() const { return static_cast<int>(label); }
};

// Immutable after construction; indices into items()/annotators() are dense.
class Dataset {
public:
    Dataset() = default;

    // Validates every record against the scale and resolves ids. Annotators
    // are indexed in order of first appearance.
    static Dataset build(ResponseScale scale, std::vector<Item> items,
                         std::span<const AnnotationRecord> records);

    const ResponseScale& scale() const { return scale_; }
    std::span<const Item> items() const { return items_; }
    std::span<const Record> records() const { return records_; }
    std::span<const std::string> annotators() const { return annotators_; }
    std::size_t feature_dim() const { return items_.empty() ? 0 : items_.front().features.size(); }

    std::optional<std::size_t> find_item(std::string_view id) const;
    std::optional<std::size_t> find_annotator(std::string_view id) const;

    std::vector<AnnotationRecord> annotation_records() const;

    // Dataset restricted to the given records; items and annotators that no
    // longer appear are dropped and indices are rebuilt.
    Dataset subset(std::span<const std::size_t> record_indices) const;

private:
    ResponseScale scale_;
    std::vector<Item> items_;
    std::vector<Record> records_;
    std::vector<std::string> annotators_;
    std::unordered_map<std::string, std::size_t> item_index_;
    std::unordered_map<std::string, std::size_t> annotator_index_;
};

struct LoadOptions {
    ResponseScale scale;
    // Required feature dimension; 0 accepts whatever the items carry.
    std::size_t feature_dim = 0;
    // Hashing dimension used when feature_dim is 0 and no item has features.
    std::size_t default_feature_dim = 0;
    std::uint64_t featurize_seed = 0;
};

// Line-delimited JSON. Item lines: {"item_id", "features"?, "text"?,
// "hypothesis"?, "predicate"?, "structure"?}. Record lines: {"item_id",
// "annotator_id", "label"}. Lines may appear in any order.
Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options);
Dataset parse_dataset(std::istream& in, const LoadOptions& options, std::string_view source = "<stream>");
std::string dataset_to_jsonl(const Dataset& dataset);

// Clamps continuous labels into [eps, 1-eps]; categorical datasets pass through.
Dataset scale_labels(const Dataset& dataset, double epsilon);
double clamp_label(double y, double epsilon);

// Hashed bag of lowercase whitespace tokens. The first half of the vector
// holds the text, the second half the hypothesis. Non-empty outputs are
// L2-normalised.
std::vector<double> featurize_text(const Item& item, std::size_t dim, std::uint64_t seed);

// Majority class with ties to the lowest index.
int majority_class(std::span<const std::size_t> counts);

// Per item (indexed like items()): modal class or mean label over its
// annotators. NaN for items without records.
std::vector<double> best_fixed_predictions(const Dataset& dataset);

// Global modal class or global mean label.
double baseline_prediction(const Dataset& dataset);

}  // namespace annmix
