#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bidshade/feedback.hpp"
#include "bidshade/landscape.hpp"

namespace bidshade::evaluate {

// Money totals are accumulated in integer micro-units, so the accounting
// identity surplus + spend = value-over-wins holds exactly, not just to
// rounding.
std::int64_t to_micros(double price);
double from_micros(std::int64_t micros);

struct Slice {
    std::int64_t n_bids = 0;
    std::int64_t n_wins = 0;
    std::int64_t surplus_micros = 0;
    std::int64_t spend_micros = 0;
    std::int64_t value_won_micros = 0;

    double surplus() const { return from_micros(surplus_micros); }
    double spend() const { return from_micros(spend_micros); }
    double value_won() const { return from_micros(value_won_micros); }
    double win_rate() const { return n_bids ? static_cast<double>(n_wins) / static_cast<double>(n_bids) : 0.0; }
    double ecpm() const { return n_wins ? 1000.0 * spend() / static_cast<double>(n_wins) : 0.0; }
    // The draft-style all-bids average, distinct from per-win eCPM.
    double avg_spend_per_bid() const { return n_bids ? spend() / static_cast<double>(n_bids) : 0.0; }

    bool operator==(const Slice&) const = default;
};

struct DecileRow {
    double value_lo = 0.0;
    double value_hi = 0.0;
    Slice slice;

    bool operator==(const DecileRow&) const = default;
};

struct MetricsReport {
    Slice total;
    std::vector<DecileRow> deciles;  // by value decile; sums to total exactly
    std::optional<double> pct_of_optimal;
    bool pct_suspicious = false;  // pct_of_optimal above 1.02

    bool operator==(const MetricsReport&) const = default;
};

// Aggregates realized outcomes. Decile membership is by value-quantile
// thresholds (not rank) so the report is permutation invariant even with
// tied values.
MetricsReport score(std::span<const FeedbackRecord> records, bool with_deciles = true);

// Expected surplus of the ground-truth oracle over the same requests; the
// percent-of-optimal denominator.
double oracle_potential(const landscape::LandscapeSpec& spec, std::span<const Request> requests,
                        std::size_t grid_n = 2000);

// Realized surplus divided by the oracle's expected surplus. Absent when the
// potential is zero.
std::optional<double> pct_of_optimal(std::span<const FeedbackRecord> records,
                                     const landscape::LandscapeSpec& spec,
                                     std::size_t grid_n = 2000);

// Stores the ratio on the report and flags values above 1.02.
void attach_pct_of_optimal(MetricsReport& report, std::optional<double> pct);

struct ComparisonCell {
    std::optional<double> value;
    std::optional<double> delta_pct;  // vs baseline; absent for zero/absent baselines
};

struct ComparisonRow {
    std::string name;
    bool is_baseline = false;
    std::vector<ComparisonCell> cells;  // one per metric, table order
};

struct ComparisonTable {
    std::vector<std::string> metrics;
    std::vector<ComparisonRow> rows;  // sorted by policy name

    std::string to_text() const;
    std::string to_tsv() const;
};

// Per-metric percentage deltas against the named baseline report.
ComparisonTable compare(const std::vector<std::pair<std::string, MetricsReport>>& reports,
                        const std::string& baseline);

}  // namespace bidshade::evaluate
