#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bidshade/experiment.hpp"

namespace {

using bidshade::cli::ExperimentConfig;
using bidshade::cli::PolicyConfig;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<bool> reveal_mbtw;
};

ExperimentConfig load_with_overrides(const CommonFlags& flags) {
    ExperimentConfig cfg = bidshade::cli::load_config(flags.config_path);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.out) cfg.output_dir = *flags.out;
    if (flags.reveal_mbtw) cfg.reveal_mbtw = *flags.reveal_mbtw;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bidshade: first-price auction bid-shading simulator and evaluator"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::uint64_t seed_flag = 0;
    std::string out_flag;
    bool reveal_flag = false;

    // --- simulate ---
    auto* simulate = app.add_subcommand(
        "simulate", "Generate training feedback and evaluation requests");
    simulate->add_option("--config", flags.config_path, "Experiment config (JSON)")
        ->required();
    auto* sim_seed = simulate->add_option("--seed", seed_flag, "Override config seed");
    auto* sim_out = simulate->add_option("--out", out_flag, "Override output directory");
    auto* sim_reveal =
        simulate->add_flag("--reveal-mbtw", reveal_flag, "Reveal the minimum bid to win");

    // --- train ---
    auto* train = app.add_subcommand("train", "Fit one policy on a feedback file");
    std::string policy_name;
    std::string feedback_path;
    std::string model_path = "model.json";
    PolicyConfig policy_overrides;
    train->add_option("--config", flags.config_path, "Experiment config (JSON)")->required();
    train->add_option("--policy", policy_name, "Registered policy name")->required();
    train->add_option("--data", feedback_path, "Feedback file")->required();
    train->add_option("--out", model_path, "Model output path");
    train->add_option("--lr", policy_overrides.learning_rate, "Learning rate");
    train->add_option("--epochs", policy_overrides.epochs, "Training epochs");
    train->add_option("--l2", policy_overrides.l2_penalty, "L2 penalty");
    train->add_option("--weighting", policy_overrides.weighting,
                      "Observation weighting: none | bid-likelihood");
    train->add_option("--target-winrate", policy_overrides.target,
                      "Maintained win rate (wr-maintainer)");
    train->add_option("--factor", policy_overrides.factor, "Fixed shading factor");
    train->add_option("--asymmetry", policy_overrides.asymmetry,
                      "Loss/win weight asymmetry (point-est)");
    train->add_option("--buckets", policy_overrides.buckets, "Price buckets (mpp)");

    // --- shade ---
    auto* shade = app.add_subcommand("shade", "Shade a requests file through a wr model");
    std::string shade_model;
    std::string shade_requests;
    std::string shade_out = "decisions.txt";
    double epsilon_rel = 1e-4;
    std::uint32_t max_steps = 50;
    shade->add_option("--model", shade_model, "Model file (policy wr)")->required();
    shade->add_option("--requests", shade_requests, "Requests file")->required();
    shade->add_option("--out", shade_out, "Decisions output path");
    shade->add_option("--epsilon", epsilon_rel, "Bracket tolerance relative to value");
    shade->add_option("--max-steps", max_steps, "Maximum search steps");

    // --- evaluate ---
    auto* evaluate = app.add_subcommand(
        "evaluate", "Simulate, train every configured policy, score and compare");
    evaluate->add_option("--config", flags.config_path, "Experiment config (JSON)")
        ->required();
    auto* eval_seed = evaluate->add_option("--seed", seed_flag, "Override config seed");
    auto* eval_out = evaluate->add_option("--out", out_flag, "Override output directory");
    auto* eval_reveal =
        evaluate->add_flag("--reveal-mbtw", reveal_flag, "Reveal the minimum bid to win");
    std::string baseline_flag;
    evaluate->add_option("--baseline", baseline_flag, "Baseline policy label");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const auto capture_common = [&](CLI::Option* seed_opt, CLI::Option* out_opt,
                                    CLI::Option* reveal_opt) {
        if (seed_opt && seed_opt->count()) flags.seed = seed_flag;
        if (out_opt && out_opt->count()) flags.out = out_flag;
        if (reveal_opt && reveal_opt->count()) flags.reveal_mbtw = reveal_flag;
    };

    if (simulate->parsed()) {
        capture_common(sim_seed, sim_out, sim_reveal);
        return bidshade::cli::run_command([&] {
            const auto cfg = load_with_overrides(flags);
            const auto out = bidshade::cli::run_simulate(cfg);
            std::cout << "train feedback: " << out.train_feedback.string() << " ("
                      << out.n_train << " records)\n";
            std::cout << "eval requests:  " << out.eval_requests.string() << " ("
                      << out.n_eval << " requests)\n";
        });
    }

    if (train->parsed()) {
        return bidshade::cli::run_command([&] {
            const auto cfg = bidshade::cli::load_config(flags.config_path);
            PolicyConfig policy = policy_overrides;
            policy.name = policy_name;
            policy.label = policy_name;
            bidshade::cli::run_train(policy, feedback_path, model_path, cfg);
            std::cout << "model written: " << model_path << "\n";
        });
    }

    if (shade->parsed()) {
        return bidshade::cli::run_command([&] {
            const auto stats =
                bidshade::cli::run_shade(shade_model, shade_requests, shade_out,
                                         epsilon_rel, max_steps);
            std::cerr << "shaded " << stats.requests << " requests in " << stats.seconds
                      << "s (" << (stats.seconds > 0.0
                                       ? static_cast<double>(stats.requests) / stats.seconds
                                       : 0.0)
                      << "/s), iterations mean=" << stats.mean_iterations
                      << " max=" << stats.max_iterations << "\n";
            std::cout << "decisions written: " << shade_out << "\n";
        });
    }

    // evaluate
    capture_common(eval_seed, eval_out, eval_reveal);
    return bidshade::cli::run_command([&] {
        auto cfg = load_with_overrides(flags);
        if (!baseline_flag.empty()) cfg.baseline = baseline_flag;
        const auto result = bidshade::cli::run_evaluate(cfg);
        std::cout << result.table.to_text();
        std::cout << "reports: " << result.report_path.string() << "\n";
        std::cout << "table:   " << result.table_path.string() << "\n";
    });
}
