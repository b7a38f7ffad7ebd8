#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bidshade/benchmarks.hpp"
#include "bidshade/evaluate.hpp"
#include "bidshade/io.hpp"
#include "bidshade/landscape.hpp"
#include "bidshade/rng.hpp"

namespace bidshade::cli {

struct ValueDistConfig {
    enum class Kind { Fixed, Uniform, LogNormal };
    Kind kind = Kind::LogNormal;
    double a = 0.0;  // fixed value / lo / mu
    double b = 0.3;  // (unused) / hi / sigma

    void validate() const;  // throws config_error
    double sample(Rng& rng) const;
};

struct PolicyConfig {
    std::string name;   // registered policy, or "oracle"
    std::string label;  // report key; defaults to name

    // win-rate model training
    double learning_rate = 1.0;
    std::uint32_t epochs = 400;
    double l2_penalty = 0.0;
    std::string weighting = "none";  // none | bid-likelihood
    // shading search
    double epsilon_rel = 1e-4;
    std::uint32_t max_steps = 50;
    double floor_factor = 0.0;
    // per-benchmark knobs
    double target = 0.9;       // wr-maintainer
    double factor = 0.9;       // fixed
    double asymmetry = 0.3;    // point-est
    std::uint32_t buckets = 50;  // mpp
    double forgetting = 0.99;  // segment-nl
    std::uint32_t oracle_grid = 1500;

    winrate::TrainingConfig training_config() const;  // throws config_error
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    landscape::LandscapeSpec landscape = landscape::LandscapeSpec::uniform(0.0, 1.0);
    std::map<std::string, std::vector<std::string>> attributes;
    ValueDistConfig value_dist;
    std::uint64_t n_train = 10000;
    std::uint64_t n_eval = 10000;
    bool reveal_mbtw = false;
    // log-uniform exploration factor for training bids
    double train_factor_lo = 0.05;
    double train_factor_hi = 1.0;
    std::vector<PolicyConfig> policies;
    std::string baseline;  // defaults to the first policy's label
    std::filesystem::path output_dir = "out";
    std::vector<std::string> segment_attributes;  // defaults to the first two
    std::uint32_t oracle_grid = 1500;  // percent-of-optimal denominator grid

    void validate() const;  // throws config_error
};

ExperimentConfig load_config(const std::filesystem::path& path);

Vocabulary build_vocabulary(const std::map<std::string, std::vector<std::string>>& attributes);

std::vector<Request> sample_requests(const ExperimentConfig& config, const Vocabulary& vocab,
                                     std::uint64_t n, Rng& rng);

// Fits one policy on training feedback. "oracle" policies are created by
// run_evaluate directly since they need the ground-truth landscape.
std::unique_ptr<benchmarks::Policy> fit_policy(const PolicyConfig& policy,
                                               std::span<const FeedbackRecord> records,
                                               const Vocabulary& vocab,
                                               const ExperimentConfig& config);

io::PolicyModelFile fit_policy_model(const PolicyConfig& policy,
                                     std::span<const FeedbackRecord> records,
                                     const Vocabulary& vocab, const ExperimentConfig& config);

std::unique_ptr<benchmarks::Policy> policy_from_model(const io::PolicyModelFile& model,
                                                      const PolicyConfig& knobs);

// --- commands ---------------------------------------------------------------
// Each run_* throws on failure; main() maps exception types to exit codes.

struct SimulateOutputs {
    std::filesystem::path train_feedback;
    std::filesystem::path eval_requests;
    std::uint64_t n_train = 0;
    std::uint64_t n_eval = 0;
};
SimulateOutputs run_simulate(const ExperimentConfig& config);

void run_train(const PolicyConfig& policy, const std::filesystem::path& feedback_path,
               const std::filesystem::path& model_path,
               const ExperimentConfig& config_for_vocab);

struct ShadeStats {
    std::uint64_t requests = 0;
    double mean_iterations = 0.0;
    std::uint32_t max_iterations = 0;
    double seconds = 0.0;
};
ShadeStats run_shade(const std::filesystem::path& model_path,
                     const std::filesystem::path& requests_path,
                     const std::filesystem::path& decisions_path, double epsilon_rel,
                     std::uint32_t max_steps);

struct EvaluateResult {
    std::vector<std::pair<std::string, evaluate::MetricsReport>> reports;
    evaluate::ComparisonTable table;
    std::filesystem::path report_path;
    std::filesystem::path table_path;
};
EvaluateResult run_evaluate(const ExperimentConfig& config);

// Exit codes: 0 ok, 2 config/usage, 3 degenerate data, 4 format/version,
// 1 anything else. Prints the failure to stderr.
int run_command(const std::function<void()>& body);

}  // namespace bidshade::cli
