#include "annmix/table.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace annmix {

std::string ResultsTable::Column::header() const {
    return to_string(scheme) + (kind == ResponseScale::Kind::Categorical ? " Acc" : " Corr");
}

ResultsTable emit_results_table(std::span<const CVReport> reports) {
    if (reports.empty()) throw std::invalid_argument("no reports to tabulate");
    ResultsTable t;
    for (const auto& r : reports) {
        if (r.folds.size() != reports.front().folds.size())
            throw std::invalid_argument("reports have different fold counts");
        if (std::find(t.models.begin(), t.models.end(), r.model) == t.models.end()) t.models.push_back(r.model);
    }
    for (auto scheme : {PartitionScheme::Random, PartitionScheme::ByPredicate, PartitionScheme::ByStructure,
                        PartitionScheme::ByAnnotator})
        for (auto kind : {ResponseScale::Kind::Categorical, ResponseScale::Kind::BoundedContinuous})
            if (std::any_of(reports.begin(), reports.end(),
                            [&](const CVReport& r) { return r.scheme == scheme && r.scale.kind == kind; }))
                t.columns.push_back({scheme, kind});

    t.cells.assign(t.models.size(), std::vector<std::optional<double>>(t.columns.size()));
    for (const auto& r : reports) {
        const auto row = static_cast<std::size_t>(
            std::find(t.models.begin(), t.models.end(), r.model) - t.models.begin());
        const auto col = static_cast<std::size_t>(
            std::find_if(t.columns.begin(), t.columns.end(),
                         [&](const ResultsTable::Column& c) { return c.scheme == r.scheme && c.kind == r.scale.kind; }) -
            t.columns.begin());
        auto& cell = t.cells[row][col];
        if (cell) throw std::invalid_argument("duplicate report for " + r.model + " / " + t.columns[col].header());
        cell = r.mean_rescaled;
    }

    t.best.assign(t.models.size(), std::vector<bool>(t.columns.size(), false));
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        std::optional<double> top;
        for (std::size_t m = 0; m < t.models.size(); ++m)
            if (t.cells[m][c] && (!top || *t.cells[m][c] > *top)) top = t.cells[m][c];
        for (std::size_t m = 0; m < t.models.size(); ++m) t.best[m][c] = t.cells[m][c] && *t.cells[m][c] == *top;
    }
    return t;
}

namespace {

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

}  // namespace

std::string results_table_csv(const ResultsTable& t) {
    std::ostringstream out;
    out.precision(17);
    out << "model";
    for (const auto& c : t.columns) out << ',' << c.header() << ',' << c.header() << " best";
    out << '\n';
    for (std::size_t m = 0; m < t.models.size(); ++m) {
        out << t.models[m];
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            out << ',';
            if (t.cells[m][c]) out << *t.cells[m][c];
            out << ',' << (t.best[m][c] ? 1 : 0);
        }
        out << '\n';
    }
    return out.str();
}

std::string results_table_text(const ResultsTable& t) {
    std::vector<std::string> head{"model"};
    for (const auto& c : t.columns) head.push_back(c.header());
    std::vector<std::vector<std::string>> rows;
    for (std::size_t m = 0; m < t.models.size(); ++m) {
        std::vector<std::string> row{t.models[m]};
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            row.push_back(t.cells[m][c] ? fixed3(*t.cells[m][c]) + (t.best[m][c] ? "*" : " ") : "-");
        rows.push_back(std::move(row));
    }
    std::vector<std::size_t> width(head.size());
    for (std::size_t c = 0; c < head.size(); ++c) {
        width[c] = head[c].size();
        for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
    }
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) out << "  ";
            const std::size_t pad = width[c] - cells[c].size();
            if (c == 0) out << cells[c] << std::string(pad, ' ');
            else out << std::string(pad, ' ') << cells[c];
        }
        out << '\n';
    };
    line(head);
    for (const auto& r : rows) line(r);
    out << "* best in column\n";
    return out.str();
}

}  // namespace annmix
