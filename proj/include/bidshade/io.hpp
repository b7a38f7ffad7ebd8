#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bidshade/benchmarks.hpp"
#include "bidshade/feedback.hpp"
#include "bidshade/shading.hpp"
#include "bidshade/winrate.hpp"

namespace bidshade::io {

// Shortest round-trip decimal form; parsing is exact, so write -> read is
// bit-identical.
std::string format_double(double v);
double parse_double(std::string_view s);  // throws format_error

// Write whole, then rename into place.
void atomic_write(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);  // throws format_error

// --- line-oriented feedback / request / decision formats -------------------
// Each file starts with a versioned header; readers reject unknown versions.

void write_feedback(const std::filesystem::path& path,
                    std::span<const FeedbackRecord> records, std::uint32_t dimension);

struct FeedbackFile {
    std::vector<FeedbackRecord> records;
    std::uint32_t dimension = 0;
};
FeedbackFile read_feedback(const std::filesystem::path& path);

void write_requests(const std::filesystem::path& path, std::span<const Request> requests,
                    std::uint32_t dimension);

struct RequestsFile {
    std::vector<Request> requests;
    std::uint32_t dimension = 0;
};
RequestsFile read_requests(const std::filesystem::path& path);

void write_decisions(const std::filesystem::path& path,
                     std::span<const shading::ShadingDecision> decisions);

// --- versioned model documents ---------------------------------------------

struct PolicyModelFile {
    std::string policy;
    std::optional<winrate::WinRateModel> wr;
    std::optional<Vocabulary> vocabulary;
    std::optional<double> target;   // wr-maintainer
    std::optional<double> factor;   // fixed
    std::optional<benchmarks::BucketedPriceDistribution> dist;  // mpp
    bool dist_fallback = false;
    std::optional<benchmarks::ShadingFactorModel> shading_factor;
    std::optional<benchmarks::PointEstimatorModel> point_estimator;
    std::optional<benchmarks::SegmentModel> segments;
};

void write_model(const std::filesystem::path& path, const PolicyModelFile& model);
PolicyModelFile read_model(const std::filesystem::path& path);  // throws format_error

}  // namespace bidshade::io
