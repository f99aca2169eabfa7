#include "annmix/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "annmix/io.hpp"
#include "annmix/rng.hpp"

namespace annmix {

using nlohmann::json;

ResponseScale ResponseScale::categorical(int num_classes) {
    if (num_classes < 2) throw InputError("categorical scale needs at least 2 classes");
    return {Kind::Categorical, num_classes, 0.005};
}

ResponseScale ResponseScale::continuous(double boundary_epsilon) {
    if (!(boundary_epsilon > 0.0 && boundary_epsilon < 0.5))
        throw InputError("boundary epsilon must lie in (0, 0.5)");
    return {Kind::BoundedContinuous, 0, boundary_epsilon};
}

std::string to_string(ResponseScale::Kind kind) {
    return kind == ResponseScale::Kind::Categorical ? "categorical" : "continuous";
}

namespace {

void validate_label(const ResponseScale& scale, double label, std::string_view where) {
    if (!std::isfinite(label)) throw InputError(std::string(where) + ": label is not finite");
    if (scale.is_categorical()) {
        if (label != std::floor(label))
            throw InputError(std::string(where) + ": mixed label types (expected class index)");
        if (label < 0 || label >= scale.num_classes)
            throw InputError(std::string(where) + ": label out of range");
    } else if (label < 0.0 || label > 1.0) {
        throw InputError(std::string(where) + ": label out of range");
    }
}

}  // namespace

Dataset Dataset::build(ResponseScale scale, std::vector<Item> items,
                       std::span<const AnnotationRecord> records) {
    Dataset d;
    d.scale_ = scale;
    d.items_ = std::move(items);
    for (std::size_t i = 0; i < d.items_.size(); ++i) {
        const auto& item = d.items_[i];
        if (!d.item_index_.emplace(item.id, i).second)
            throw InputError("duplicate item id '" + item.id + "'");
        if (item.features.size() != d.items_.front().features.size())
            throw InputError("item '" + item.id + "' has feature dimension " +
                             std::to_string(item.features.size()) + ", expected " +
                             std::to_string(d.items_.front().features.size()));
    }
    d.records_.reserve(records.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        auto it = d.item_index_.find(rec.item_id);
        if (it == d.item_index_.end())
            throw InputError("record " + std::to_string(r) + ": dangling item reference '" +
                             rec.item_id + "'");
        validate_label(scale, rec.label, "record " + std::to_string(r));
        auto [ait, inserted] = d.annotator_index_.emplace(rec.annotator_id, d.annotators_.size());
        if (inserted) d.annotators_.push_back(rec.annotator_id);
        d.records_.push_back({it->second, ait->second, rec.label});
    }
    return d;
}

std::optional<std::size_t> Dataset::find_item(std::string_view id) const {
    auto it = item_index_.find(std::string(id));
    if (it == item_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> Dataset::find_annotator(std::string_view id) const {
    auto it = annotator_index_.find(std::string(id));
    if (it == annotator_index_.end()) return std::nullopt;
    return it->second;
}

std::vector<AnnotationRecord> Dataset::annotation_records() const {
    std::vector<AnnotationRecord> out;
    out.reserve(records_.size());
    for (const auto& r : records_)
        out.push_back({items_[r.item].id, annotators_[r.annotator], r.label});
    return out;
}

Dataset Dataset::subset(std::span<const std::size_t> record_indices) const {
    std::vector<std::size_t> item_map(items_.size(), SIZE_MAX);
    std::vector<std::size_t> annot_map(annotators_.size(), SIZE_MAX);
    Dataset d;
    d.scale_ = scale_;
    d.records_.reserve(record_indices.size());
    for (std::size_t idx : record_indices) {
        const Record& r = records_.at(idx);
        if (item_map[r.item] == SIZE_MAX) {
            item_map[r.item] = d.items_.size();
            d.item_index_.emplace(items_[r.item].id, d.items_.size());
            d.items_.push_back(items_[r.item]);
        }
        if (annot_map[r.annotator] == SIZE_MAX) {
            annot_map[r.annotator] = d.annotators_.size();
            d.annotator_index_.emplace(annotators_[r.annotator], d.annotators_.size());
            d.annotators_.push_back(annotators_[r.annotator]);
        }
        d.records_.push_back({item_map[r.item], annot_map[r.annotator], r.label});
    }
    return d;
}

namespace {

std::optional<std::string> optional_string(const json& j, const char* key, std::string_view where) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw InputError(std::string(where) + ": field '" + key + "' must be a string");
    return it->get<std::string>();
}

}  // namespace

Dataset parse_dataset(std::istream& in, const LoadOptions& options, std::string_view source) {
    const ResponseScale& scale = options.scale;
    std::vector<Item> items;
    std::unordered_map<std::string, std::size_t> seen;
    std::vector<AnnotationRecord> records;
    std::vector<std::size_t> record_lines;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = std::string(source) + ":" + std::to_string(line_no);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw InputError(where + ": malformed line (" + e.what() + ")");
        }
        if (!j.is_object() || !j.contains("item_id") || !j["item_id"].is_string())
            throw InputError(where + ": malformed line (expected object with string item_id)");

        if (j.contains("annotator_id")) {
            if (!j["annotator_id"].is_string() || !j.contains("label"))
                throw InputError(where + ": malformed line (record needs annotator_id and label)");
            const json& label = j["label"];
            if (!label.is_number()) throw InputError(where + ": mixed label types (label must be numeric)");
            if (scale.is_categorical() && !label.is_number_integer())
                throw InputError(where + ": mixed label types (expected class index)");
            AnnotationRecord rec{j["item_id"].get<std::string>(), j["annotator_id"].get<std::string>(),
                                 label.get<double>()};
            validate_label(scale, rec.label, where);
            records.push_back(std::move(rec));
            record_lines.push_back(line_no);
            continue;
        }

        Item item;
        item.id = j["item_id"].get<std::string>();
        if (auto it = j.find("features"); it != j.end() && !it->is_null()) {
            if (!it->is_array()) throw InputError(where + ": features must be an array");
            for (const auto& v : *it) {
                if (!v.is_number()) throw InputError(where + ": features must be numeric");
                item.features.push_back(v.get<double>());
            }
        }
        item.text = optional_string(j, "text", where);
        item.hypothesis = optional_string(j, "hypothesis", where);
        item.predicate = optional_string(j, "predicate", where);
        item.structure = optional_string(j, "structure", where);

        if (auto it = seen.find(item.id); it != seen.end()) {
            if (!(items[it->second] == item))
                throw InputError(where + ": conflicting duplicate of item '" + item.id + "'");
            continue;
        }
        seen.emplace(item.id, items.size());
        items.push_back(std::move(item));
    }

    std::size_t dim = 0;
    for (const auto& item : items) {
        if (item.features.empty()) continue;
        if (dim == 0) dim = item.features.size();
        if (item.features.size() != dim)
            throw InputError(std::string(source) + ": item '" + item.id + "' feature dimension mismatch");
    }
    if (dim != 0 && options.feature_dim != 0 && options.feature_dim != dim)
        throw InputError(std::string(source) + ": features have dimension " + std::to_string(dim) +
                         " but " + std::to_string(options.feature_dim) + " was requested");
    if (dim == 0) dim = options.feature_dim != 0 ? options.feature_dim : options.default_feature_dim;
    for (auto& item : items) {
        if (!item.features.empty()) continue;
        if (dim == 0)
            throw InputError(std::string(source) + ": item '" + item.id +
                             "' has no features and no feature dimension was given for hashing");
        item.features = featurize_text(item, dim, options.featurize_seed);
    }

    for (std::size_t r = 0; r < records.size(); ++r) {
        if (!seen.contains(records[r].item_id))
            throw InputError(std::string(source) + ":" + std::to_string(record_lines[r]) +
                             ": dangling item reference '" + records[r].item_id + "'");
    }
    return Dataset::build(scale, std::move(items), records);
}

Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open dataset " + path.string());
    return parse_dataset(in, options, path.string());
}

std::string dataset_to_jsonl(const Dataset& dataset) {
    std::string out;
    for (const auto& item : dataset.items()) {
        json j;
        j["item_id"] = item.id;
        j["features"] = item.features;
        if (item.text) j["text"] = *item.text;
        if (item.hypothesis) j["hypothesis"] = *item.hypothesis;
        if (item.predicate) j["predicate"] = *item.predicate;
        if (item.structure) j["structure"] = *item.structure;
        out += j.dump();
        out += '\n';
    }
    const bool categorical = dataset.scale().is_categorical();
    for (const auto& rec : dataset.records()) {
        json j;
        j["item_id"] = dataset.items()[rec.item].id;
        j["annotator_id"] = dataset.annotators()[rec.annotator];
        if (categorical)
            j["label"] = rec.class_index();
        else
            j["label"] = rec.label;
        out += j.dump();
        out += '\n';
    }
    return out;
}

double clamp_label(double y, double epsilon) { return std::min(std::max(y, epsilon), 1.0 - epsilon); }

Dataset scale_labels(const Dataset& dataset, double epsilon) {
    if (dataset.scale().is_categorical()) return dataset;
    auto records = dataset.annotation_records();
    for (auto& r : records) r.label = clamp_label(r.label, epsilon);
    ResponseScale scale = dataset.scale();
    scale.boundary_epsilon = epsilon;
    std::vector<Item> items(dataset.items().begin(), dataset.items().end());
    return Dataset::build(scale, std::move(items), records);
}

namespace {

void hash_tokens(std::string_view text, std::span<double> out, std::uint64_t seed) {
    if (out.empty()) return;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        std::size_t end = pos;
        while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
        if (end > pos) {
            std::string token(text.substr(pos, end - pos));
            for (auto& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            std::uint64_t h = fnv1a64(token);
            h = derive_seed(seed, h);
            const std::size_t slot = static_cast<std::size_t>(h % out.size());
            out[slot] += (h >> 63) ? 1.0 : -1.0;
        }
        pos = end;
    }
}

}  // namespace

std::vector<double> featurize_text(const Item& item, std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw InputError("feature dimension must be positive");
    if (!item.text && !item.hypothesis)
        throw InputError("item '" + item.id + "' has no text fields to featurize");
    std::vector<double> v(dim, 0.0);
    const std::size_t text_dim = dim - dim / 2;
    std::span<double> all(v);
    hash_tokens(item.text.value_or(""), all.first(text_dim), seed);
    hash_tokens(item.hypothesis.value_or(""), all.subspan(text_dim), derive_seed(seed, 1));
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

int majority_class(std::span<const std::size_t> counts) {
    int best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c)
        if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
    return best;
}

std::vector<double> best_fixed_predictions(const Dataset& dataset) {
    const auto n_items = dataset.items().size();
    if (dataset.scale().is_categorical()) {
        const auto k = static_cast<std::size_t>(dataset.scale().num_classes);
        std::vector<std::size_t> counts(n_items * k, 0);
        for (const auto& r : dataset.records()) ++counts[r.item * k + static_cast<std::size_t>(r.class_index())];
        std::vector<double> out(n_items, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t i = 0; i < n_items; ++i) {
            std::span<const std::size_t> c(counts.data() + i * k, k);
            bool any = false;
            for (auto x : c) any = any || x > 0;
            if (any) out[i] = majority_class(c);
        }
        return out;
    }
    std::vector<double> sums(n_items, 0.0);
    std::vector<std::size_t> counts(n_items, 0);
    for (const auto& r : dataset.records()) {
        sums[r.item] += r.label;
        ++counts[r.item];
    }
    std::vector<double> out(n_items, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < n_items; ++i)
        if (counts[i] > 0) out[i] = sums[i] / static_cast<double>(counts[i]);
    return out;
}

double baseline_prediction(const Dataset& dataset) {
    if (dataset.records().empty()) throw InputError("baseline of an empty dataset");
    if (dataset.scale().is_categorical()) {
        std::vector<std::size_t> counts(static_cast<std::size_t>(dataset.scale().num_classes), 0);
        for (const auto& r : dataset.records()) ++counts[static_cast<std::size_t>(r.class_index())];
        return majority_class(counts);
    }
    double sum = 0.0;
    for (const auto& r : dataset.records()) sum += r.label;
    return sum / static_cast<double>(dataset.records().size());
}

}  // namespace annmix
