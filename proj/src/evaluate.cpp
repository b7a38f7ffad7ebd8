#include "bidshade/evaluate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "bidshade/errors.hpp"

namespace bidshade::evaluate {

std::int64_t to_micros(double price) {
    if (!std::isfinite(price)) throw std::invalid_argument("to_micros: non-finite price");
    return std::llround(price * 1e6);
}

double from_micros(std::int64_t micros) { return static_cast<double>(micros) * 1e-6; }

namespace {

void add_record(Slice& s, const FeedbackRecord& r) {
    ++s.n_bids;
    if (r.won) {
        ++s.n_wins;
        const std::int64_t bid = to_micros(r.bid);
        const std::int64_t value = to_micros(r.value);
        s.spend_micros += bid;
        s.value_won_micros += value;
        s.surplus_micros += value - bid;
    }
}

}  // namespace

MetricsReport score(std::span<const FeedbackRecord> records, bool with_deciles) {
    if (records.empty()) throw std::invalid_argument("score: empty input");
    MetricsReport report;
    for (const auto& r : records) add_record(report.total, r);

    if (with_deciles) {
        std::vector<double> values;
        values.reserve(records.size());
        for (const auto& r : records) values.push_back(r.value);
        std::sort(values.begin(), values.end());
        const std::size_t n = values.size();

        // Thresholds at the 10%,...,90% order statistics; membership by value
        // keeps the partition independent of input order even with ties.
        std::array<double, 9> thresholds{};
        for (std::size_t d = 1; d <= 9; ++d) thresholds[d - 1] = values[d * n / 10];

        report.deciles.resize(10);
        for (std::size_t d = 0; d < 10; ++d) {
            report.deciles[d].value_lo = d == 0 ? values.front() : thresholds[d - 1];
            report.deciles[d].value_hi = d == 9 ? values.back() : thresholds[d];
        }
        for (const auto& r : records) {
            const std::size_t d = static_cast<std::size_t>(
                std::upper_bound(thresholds.begin(), thresholds.end(), r.value) -
                thresholds.begin());
            add_record(report.deciles[d].slice, r);
        }
    }
    return report;
}

double oracle_potential(const landscape::LandscapeSpec& spec,
                        std::span<const Request> requests, std::size_t grid_n) {
    double potential = 0.0;
    for (const auto& req : requests)
        potential += landscape::oracle_optimal_bid(spec, req.features, req.value, grid_n)
                         .expected_surplus;
    return potential;
}

std::optional<double> pct_of_optimal(std::span<const FeedbackRecord> records,
                                     const landscape::LandscapeSpec& spec,
                                     std::size_t grid_n) {
    double potential = 0.0;
    std::int64_t realized = 0;
    for (const auto& r : records) {
        potential +=
            landscape::oracle_optimal_bid(spec, r.features, r.value, grid_n).expected_surplus;
        if (r.won) realized += to_micros(r.value) - to_micros(r.bid);
    }
    if (!(potential > 0.0)) return std::nullopt;
    return from_micros(realized) / potential;
}

void attach_pct_of_optimal(MetricsReport& report, std::optional<double> pct) {
    report.pct_of_optimal = pct;
    report.pct_suspicious = pct.has_value() && *pct > 1.02;
}

namespace {

const std::vector<std::string> kMetricNames = {
    "surplus", "spend", "win_rate", "ecpm", "avg_spend_per_bid", "pct_of_optimal"};

std::vector<ComparisonCell> metric_cells(const MetricsReport& r) {
    std::vector<ComparisonCell> cells(kMetricNames.size());
    cells[0].value = r.total.surplus();
    cells[1].value = r.total.spend();
    cells[2].value = r.total.win_rate();
    cells[3].value = r.total.ecpm();
    cells[4].value = r.total.avg_spend_per_bid();
    cells[5].value = r.pct_of_optimal;
    return cells;
}

std::string fmt(double v, const char* spec) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

ComparisonTable compare(const std::vector<std::pair<std::string, MetricsReport>>& reports,
                        const std::string& baseline) {
    const auto base_it =
        std::find_if(reports.begin(), reports.end(),
                     [&](const auto& nr) { return nr.first == baseline; });
    if (base_it == reports.end())
        throw config_error("compare: baseline '" + baseline + "' not found");
    const std::vector<ComparisonCell> base_cells = metric_cells(base_it->second);

    ComparisonTable table;
    table.metrics = kMetricNames;
    for (const auto& [name, report] : reports) {
        ComparisonRow row;
        row.name = name;
        row.is_baseline = name == baseline;
        row.cells = metric_cells(report);
        for (std::size_t j = 0; j < row.cells.size(); ++j) {
            const auto& base = base_cells[j].value;
            const auto& mine = row.cells[j].value;
            if (base && mine && *base != 0.0)
                row.cells[j].delta_pct = (*mine - *base) / std::abs(*base) * 100.0;
        }
        table.rows.push_back(std::move(row));
    }
    std::sort(table.rows.begin(), table.rows.end(),
              [](const ComparisonRow& a, const ComparisonRow& b) { return a.name < b.name; });
    return table;
}

std::string ComparisonTable::to_text() const {
    std::string out = "policy";
    out.append(14 - 6, ' ');
    for (const auto& m : metrics) {
        out += "  ";
        std::string head = m + " (d%)";
        if (head.size() < 24) head.append(24 - head.size(), ' ');
        out += head;
    }
    out += '\n';
    for (const auto& row : rows) {
        std::string name = row.name + (row.is_baseline ? "*" : "");
        if (name.size() < 14) name.append(14 - name.size(), ' ');
        out += name;
        for (const auto& cell : row.cells) {
            std::string body = cell.value ? fmt(*cell.value, "%.6g") : std::string("-");
            body += " (";
            body += cell.delta_pct ? fmt(*cell.delta_pct, "%+.1f") : std::string("-");
            body += ")";
            if (body.size() < 24) body.append(24 - body.size(), ' ');
            out += "  " + body;
        }
        out += '\n';
    }
    return out;
}

std::string ComparisonTable::to_tsv() const {
    std::string out = "policy\tbaseline";
    for (const auto& m : metrics) out += "\t" + m + "\t" + m + "_delta_pct";
    out += '\n';
    for (const auto& row : rows) {
        out += row.name;
        out += row.is_baseline ? "\t1" : "\t0";
        for (const auto& cell : row.cells) {
            out += '\t';
            out += cell.value ? fmt(*cell.value, "%.10g") : std::string("-");
            out += '\t';
            out += cell.delta_pct ? fmt(*cell.delta_pct, "%.6g") : std::string("-");
        }
        out += '\n';
    }
    return out;
}

}  // namespace bidshade::evaluate
