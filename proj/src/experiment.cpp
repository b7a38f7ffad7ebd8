#include "bidshade/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>

#include <json.hpp>

#include "bidshade/errors.hpp"
#include "bidshade/shading.hpp"

namespace bidshade::cli {

using nlohmann::json;

namespace {

// Substream tags; every consumer of randomness gets its own generator.
enum Stream : std::uint64_t {
    kTrainRequests = 1,
    kTrainBids = 2,
    kTrainAuctions = 3,
    kEvalRequests = 4,
    kEvalAuctions = 5,
};

class OraclePolicy final : public benchmarks::Policy {
public:
    OraclePolicy(const landscape::LandscapeSpec& spec, std::size_t grid_n)
        : spec_(spec), grid_n_(grid_n) {}

    double bid(const FeatureVector& features, double value) const override {
        return landscape::oracle_optimal_bid(spec_, features, value, grid_n_).bid;
    }

private:
    landscape::LandscapeSpec spec_;
    std::size_t grid_n_;
};

}  // namespace

void ValueDistConfig::validate() const {
    switch (kind) {
        case Kind::Fixed:
            if (!(a > 0.0)) throw config_error("value: fixed value must be positive");
            break;
        case Kind::Uniform:
            if (!(a > 0.0 && b > a)) throw config_error("value: uniform requires 0 < lo < hi");
            break;
        case Kind::LogNormal:
            if (!(b > 0.0)) throw config_error("value: lognormal requires sigma > 0");
            break;
    }
}

double ValueDistConfig::sample(Rng& rng) const {
    switch (kind) {
        case Kind::Fixed:
            return a;
        case Kind::Uniform:
            return rng.uniform(a, b);
        case Kind::LogNormal:
            return std::exp(a + b * rng.normal());
    }
    return a;
}

winrate::TrainingConfig PolicyConfig::training_config() const {
    winrate::TrainingConfig tc;
    tc.learning_rate = learning_rate;
    tc.epochs = epochs;
    tc.l2_penalty = l2_penalty;
    if (weighting == "none")
        tc.weighting = winrate::ObservationWeighting::None;
    else if (weighting == "bid-likelihood")
        tc.weighting = winrate::ObservationWeighting::BidLikelihood;
    else
        throw config_error("unknown weighting '" + weighting + "'");
    return tc;
}

void ExperimentConfig::validate() const {
    if (n_train < 1 || n_eval < 1) throw config_error("n_train and n_eval must be >= 1");
    if (policies.empty()) throw config_error("at least one policy is required");
    if (!(train_factor_lo > 0.0 && train_factor_hi >= train_factor_lo &&
          train_factor_hi <= 1.0))
        throw config_error("train_factor range must satisfy 0 < lo <= hi <= 1");
    std::vector<std::string> labels;
    for (const auto& p : policies) {
        const auto& names = benchmarks::policy_names();
        if (p.name != "oracle" &&
            std::find(names.begin(), names.end(), p.name) == names.end())
            throw config_error("unknown policy '" + p.name + "'");
        labels.push_back(p.label.empty() ? p.name : p.label);
    }
    std::sort(labels.begin(), labels.end());
    if (std::adjacent_find(labels.begin(), labels.end()) != labels.end())
        throw config_error("policy labels must be unique (set 'label')");
    if (!baseline.empty() &&
        std::find(labels.begin(), labels.end(), baseline) == labels.end())
        throw config_error("baseline '" + baseline + "' is not a configured policy");
}

namespace {

landscape::LandscapeSpec landscape_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind"))
        throw config_error("landscape: missing field 'kind'");
    const std::string kind = j.at("kind").get<std::string>();
    landscape::LandscapeSpec spec = [&] {
        if (kind == "uniform")
            return landscape::LandscapeSpec::uniform(j.at("b0").get<double>(),
                                                     j.at("b1").get<double>());
        if (kind == "lognormal")
            return landscape::LandscapeSpec::lognormal(j.at("mu").get<double>(),
                                                       j.at("sigma").get<double>());
        if (kind == "spiked") {
            std::vector<std::pair<double, double>> spikes;
            for (const auto& s : j.at("spikes"))
                spikes.emplace_back(s.at(0).get<double>(), s.at(1).get<double>());
            return landscape::LandscapeSpec::spiked(landscape_from_json(j.at("base")),
                                                    std::move(spikes));
        }
        throw config_error("landscape: unknown kind '" + kind + "'");
    }();
    if (j.contains("feature_shift")) {
        std::map<std::uint32_t, double> shift;
        for (const auto& [key, v] : j.at("feature_shift").items())
            shift[static_cast<std::uint32_t>(std::stoul(key))] = v.get<double>();
        spec = spec.with_feature_shift(std::move(shift));
    }
    return spec;
}

ValueDistConfig value_from_json(const json& j) {
    ValueDistConfig v;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "fixed") {
        v.kind = ValueDistConfig::Kind::Fixed;
        v.a = j.at("value").get<double>();
    } else if (kind == "uniform") {
        v.kind = ValueDistConfig::Kind::Uniform;
        v.a = j.at("lo").get<double>();
        v.b = j.at("hi").get<double>();
    } else if (kind == "lognormal") {
        v.kind = ValueDistConfig::Kind::LogNormal;
        v.a = j.at("mu").get<double>();
        v.b = j.at("sigma").get<double>();
    } else {
        throw config_error("value: unknown kind '" + kind + "'");
    }
    v.validate();
    return v;
}

PolicyConfig policy_from_json(const json& j) {
    PolicyConfig p;
    p.name = j.at("name").get<std::string>();
    p.label = j.value("label", p.name);
    p.learning_rate = j.value("learning_rate", p.learning_rate);
    p.epochs = j.value("epochs", p.epochs);
    p.l2_penalty = j.value("l2_penalty", p.l2_penalty);
    p.weighting = j.value("weighting", p.weighting);
    p.epsilon_rel = j.value("epsilon_rel", p.epsilon_rel);
    p.max_steps = j.value("max_steps", p.max_steps);
    p.floor_factor = j.value("floor_factor", p.floor_factor);
    p.target = j.value("target", p.target);
    p.factor = j.value("factor", p.factor);
    p.asymmetry = j.value("asymmetry", p.asymmetry);
    p.buckets = j.value("buckets", p.buckets);
    p.forgetting = j.value("forgetting", p.forgetting);
    p.oracle_grid = j.value("oracle_grid", p.oracle_grid);
    return p;
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
    const std::string content = io::read_file(path);
    json j = json::parse(content, nullptr, false);
    if (j.is_discarded()) throw format_error("config is not valid JSON: " + path.string());
    if (j.value("format", "") != "bidshade-config" || j.value("version", 0) != 1)
        throw format_error("expected a bidshade-config v1 document");

    ExperimentConfig cfg;
    try {
        cfg.seed = j.value("seed", cfg.seed);
        cfg.landscape = landscape_from_json(j.at("landscape"));
        if (j.contains("attributes")) {
            for (const auto& [attr, spec] : j.at("attributes").items()) {
                if (spec.is_number_integer()) {
                    std::vector<std::string> values;
                    for (int i = 0; i < spec.get<int>(); ++i)
                        values.push_back(attr + std::to_string(i));
                    cfg.attributes[attr] = std::move(values);
                } else {
                    cfg.attributes[attr] = spec.get<std::vector<std::string>>();
                }
            }
        }
        if (j.contains("value")) cfg.value_dist = value_from_json(j.at("value"));
        cfg.n_train = j.value("n_train", cfg.n_train);
        cfg.n_eval = j.value("n_eval", cfg.n_eval);
        cfg.reveal_mbtw = j.value("reveal_mbtw", cfg.reveal_mbtw);
        if (j.contains("train_factor")) {
            cfg.train_factor_lo = j["train_factor"].value("lo", cfg.train_factor_lo);
            cfg.train_factor_hi = j["train_factor"].value("hi", cfg.train_factor_hi);
        }
        for (const auto& p : j.value("policies", json::array()))
            cfg.policies.push_back(policy_from_json(p));
        cfg.baseline = j.value("baseline", cfg.baseline);
        if (j.contains("output_dir"))
            cfg.output_dir = j.at("output_dir").get<std::string>();
        cfg.segment_attributes =
            j.value("segment_attributes", std::vector<std::string>{});
        cfg.oracle_grid = j.value("oracle_grid", cfg.oracle_grid);
    } catch (const json::exception& e) {
        throw config_error("malformed config " + path.string() + ": " + e.what());
    }
    cfg.validate();
    return cfg;
}

Vocabulary build_vocabulary(const std::map<std::string, std::vector<std::string>>& attributes) {
    return Vocabulary::from_attribute_values(attributes);
}

std::vector<Request> sample_requests(const ExperimentConfig& config, const Vocabulary& vocab,
                                     std::uint64_t n, Rng& rng) {
    const auto attr_names = vocab.attribute_names();
    std::vector<Request> out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        AttributeMap attrs;
        for (const auto& attr : attr_names) {
            const auto it = config.attributes.find(attr);
            const auto& values = it->second;
            attrs[attr] = values[rng.below(values.size())];
        }
        Request r;
        r.features = encode(attrs, vocab);
        r.value = config.value_dist.sample(rng);
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

std::vector<std::pair<std::uint32_t, std::uint32_t>> segment_ranges(
    const ExperimentConfig& config, const Vocabulary& vocab) {
    std::vector<std::string> attrs = config.segment_attributes;
    if (attrs.empty()) {
        const auto names = vocab.attribute_names();
        for (std::size_t i = 0; i < names.size() && i < 2; ++i) attrs.push_back(names[i]);
    }
    if (attrs.empty()) throw config_error("segment-nl: no attributes to segment on");
    std::vector<std::pair<std::uint32_t, std::uint32_t>> ranges;
    for (const auto& attr : attrs) {
        const auto range = vocab.attribute_range(attr);
        if (range.first == range.second)
            throw config_error("segment-nl: unknown segment attribute '" + attr + "'");
        ranges.push_back(range);
    }
    return ranges;
}

}  // namespace

io::PolicyModelFile fit_policy_model(const PolicyConfig& policy,
                                     std::span<const FeedbackRecord> records,
                                     const Vocabulary& vocab, const ExperimentConfig& config) {
    io::PolicyModelFile model;
    model.policy = policy.name;
    if (policy.name == "wr" || policy.name == "wr-maintainer") {
        const auto report = winrate::train(records, policy.training_config());
        model.wr = report.model;
        model.vocabulary = vocab;
        if (policy.name == "wr-maintainer") model.target = policy.target;
        std::cerr << "trained " << policy.name << ": beta=" << report.model.beta
                  << " loss=" << report.final_loss << " epochs=" << report.epochs_run << "\n";
    } else if (policy.name == "mpp") {
        double lo = 1e300;
        double hi = 0.0;
        for (const auto& r : records) {
            lo = std::min(lo, r.bid);
            hi = std::max(hi, r.bid);
        }
        if (!(hi > lo)) throw degenerate_data_error("mpp: bids are constant");
        const auto fit = benchmarks::fit_censored_distribution(
            records, benchmarks::log_spaced_edges(0.8 * lo, 1.2 * hi, policy.buckets));
        model.dist = fit.dist;
        model.dist_fallback = fit.one_sided_fallback;
        if (fit.one_sided_fallback)
            std::cerr << "mpp: one-sided data, flat-prior fallback\n";
    } else if (policy.name == "factor-lr") {
        model.shading_factor = benchmarks::fit_shading_factor(records);
    } else if (policy.name == "point-est") {
        model.point_estimator = benchmarks::point_estimator_train(records, policy.asymmetry);
    } else if (policy.name == "segment-nl") {
        benchmarks::SegmentParams defaults;
        defaults.forgetting = policy.forgetting;
        model.segments = benchmarks::fit_segments(records, segment_ranges(config, vocab),
                                                  defaults, &vocab);
    } else if (policy.name == "fixed") {
        model.factor = policy.factor;
    } else {
        throw config_error("policy '" + policy.name + "' is not trainable");
    }
    return model;
}

std::unique_ptr<benchmarks::Policy> policy_from_model(const io::PolicyModelFile& model,
                                                      const PolicyConfig& knobs) {
    if (model.policy == "wr")
        return std::make_unique<benchmarks::WinRatePolicy>(
            *model.wr, knobs.epsilon_rel, knobs.max_steps, knobs.floor_factor);
    if (model.policy == "wr-maintainer")
        return std::make_unique<benchmarks::WinRateMaintainerPolicy>(
            *model.wr, model.target.value_or(knobs.target));
    if (model.policy == "mpp")
        return std::make_unique<benchmarks::MostProbablePricePolicy>(*model.dist);
    if (model.policy == "factor-lr")
        return std::make_unique<benchmarks::ShadingFactorPolicy>(*model.shading_factor);
    if (model.policy == "point-est")
        return std::make_unique<benchmarks::PointEstimatorPolicy>(*model.point_estimator);
    if (model.policy == "segment-nl")
        return std::make_unique<benchmarks::SegmentPolicy>(*model.segments);
    if (model.policy == "fixed")
        return std::make_unique<benchmarks::FixedFactorPolicy>(*model.factor);
    throw config_error("unknown policy '" + model.policy + "'");
}

std::unique_ptr<benchmarks::Policy> fit_policy(const PolicyConfig& policy,
                                               std::span<const FeedbackRecord> records,
                                               const Vocabulary& vocab,
                                               const ExperimentConfig& config) {
    return policy_from_model(fit_policy_model(policy, records, vocab, config), policy);
}

namespace {

struct SimData {
    Vocabulary vocab;
    std::vector<Request> train_requests;
    std::vector<FeedbackRecord> train_records;
    std::vector<Request> eval_requests;
};

SimData simulate(const ExperimentConfig& config) {
    SimData sim;
    sim.vocab = build_vocabulary(config.attributes);

    Rng req_rng(derive_seed(config.seed, kTrainRequests));
    sim.train_requests = sample_requests(config, sim.vocab, config.n_train, req_rng);

    // Exploration policy for training data: a log-uniform shading factor.
    Rng bid_rng(derive_seed(config.seed, kTrainBids));
    const double log_lo = std::log(config.train_factor_lo);
    const double log_hi = std::log(config.train_factor_hi);
    const auto explore = [&](const FeatureVector&, double value) {
        return value * std::exp(bid_rng.uniform(log_lo, log_hi));
    };

    Rng auction_rng(derive_seed(config.seed, kTrainAuctions));
    auto feedback = landscape::generate_feedback(config.landscape, explore,
                                                 sim.train_requests, config.reveal_mbtw,
                                                 auction_rng);
    sim.train_records = std::move(feedback.records);

    Rng eval_rng(derive_seed(config.seed, kEvalRequests));
    sim.eval_requests = sample_requests(config, sim.vocab, config.n_eval, eval_rng);
    return sim;
}

}  // namespace

SimulateOutputs run_simulate(const ExperimentConfig& config) {
    config.validate();
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec || !std::filesystem::is_directory(config.output_dir))
        throw config_error("cannot create output_dir '" + config.output_dir.string() + "'");

    const SimData sim = simulate(config);
    SimulateOutputs out;
    out.train_feedback = config.output_dir / "train.feedback";
    out.eval_requests = config.output_dir / "eval.requests";
    out.n_train = sim.train_records.size();
    out.n_eval = sim.eval_requests.size();
    io::write_feedback(out.train_feedback, sim.train_records, sim.vocab.dimension());
    io::write_requests(out.eval_requests, sim.eval_requests, sim.vocab.dimension());
    return out;
}

void run_train(const PolicyConfig& policy, const std::filesystem::path& feedback_path,
               const std::filesystem::path& model_path,
               const ExperimentConfig& config_for_vocab) {
    const auto feedback = io::read_feedback(feedback_path);
    const Vocabulary vocab = build_vocabulary(config_for_vocab.attributes);
    const auto model =
        fit_policy_model(policy, feedback.records, vocab, config_for_vocab);
    io::write_model(model_path, model);
}

ShadeStats run_shade(const std::filesystem::path& model_path,
                     const std::filesystem::path& requests_path,
                     const std::filesystem::path& decisions_path, double epsilon_rel,
                     std::uint32_t max_steps) {
    const auto model = io::read_model(model_path);
    if (model.policy != "wr")
        throw format_error("shade requires a 'wr' model, got '" + model.policy + "'");
    const auto requests = io::read_requests(requests_path);

    const auto start = std::chrono::steady_clock::now();
    std::vector<shading::ShadingDecision> decisions;
    decisions.reserve(requests.requests.size());
    ShadeStats stats;
    double iteration_sum = 0.0;
    for (const auto& req : requests.requests) {
        auto d = shading::shade(*model.wr, req.features, req.value,
                                epsilon_rel * req.value, max_steps);
        iteration_sum += d.iterations;
        stats.max_iterations = std::max(stats.max_iterations, d.iterations);
        decisions.push_back(std::move(d));
    }
    io::write_decisions(decisions_path, decisions);

    stats.requests = decisions.size();
    stats.mean_iterations = decisions.empty() ? 0.0 : iteration_sum / decisions.size();
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return stats;
}

EvaluateResult run_evaluate(const ExperimentConfig& config) {
    config.validate();
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir / "models", ec);
    if (ec || !std::filesystem::is_directory(config.output_dir / "models"))
        throw config_error("cannot create output_dir '" + config.output_dir.string() + "'");

    const SimData sim = simulate(config);
    io::write_feedback(config.output_dir / "train.feedback", sim.train_records,
                       sim.vocab.dimension());
    io::write_requests(config.output_dir / "eval.requests", sim.eval_requests,
                       sim.vocab.dimension());

    // Every policy faces the same evaluation auctions: the highest competing
    // bid is drawn once per request.
    std::vector<double> highest_bids(sim.eval_requests.size());
    Rng eval_auction_rng(derive_seed(config.seed, kEvalAuctions));
    for (std::size_t i = 0; i < sim.eval_requests.size(); ++i)
        highest_bids[i] = landscape::sample_highest_bid(
            config.landscape, sim.eval_requests[i].features, eval_auction_rng);

    const double potential =
        evaluate::oracle_potential(config.landscape, sim.eval_requests, config.oracle_grid);

    EvaluateResult result;
    for (const auto& policy_cfg : config.policies) {
        const std::string label = policy_cfg.label.empty() ? policy_cfg.name : policy_cfg.label;
        std::unique_ptr<benchmarks::Policy> policy;
        if (policy_cfg.name == "oracle") {
            policy = std::make_unique<OraclePolicy>(config.landscape, policy_cfg.oracle_grid);
        } else {
            auto model = fit_policy_model(policy_cfg, sim.train_records, sim.vocab, config);
            io::write_model(config.output_dir / "models" / (label + ".json"), model);
            policy = policy_from_model(model, policy_cfg);
        }

        std::vector<FeedbackRecord> records;
        records.reserve(sim.eval_requests.size());
        for (std::size_t i = 0; i < sim.eval_requests.size(); ++i) {
            const auto& req = sim.eval_requests[i];
            FeedbackRecord r;
            r.features = req.features;
            r.value = req.value;
            r.bid = policy->bid(req.features, req.value);
            r.won = r.bid > highest_bids[i];
            if (config.reveal_mbtw) r.min_bid_to_win = highest_bids[i];
            records.push_back(std::move(r));
        }

        auto report = evaluate::score(records);
        std::optional<double> pct;
        if (potential > 0.0)
            pct = evaluate::from_micros(report.total.surplus_micros) / potential;
        evaluate::attach_pct_of_optimal(report, pct);
        result.reports.emplace_back(label, std::move(report));
    }

    const std::string baseline =
        config.baseline.empty()
            ? (config.policies.front().label.empty() ? config.policies.front().name
                                                     : config.policies.front().label)
            : config.baseline;
    result.table = evaluate::compare(result.reports, baseline);

    json report_json{{"format", "bidshade-report"}, {"version", 1}, {"baseline", baseline}};
    for (const auto& [label, report] : result.reports) {
        json r{{"n_bids", report.total.n_bids},
               {"n_wins", report.total.n_wins},
               {"surplus", report.total.surplus()},
               {"spend", report.total.spend()},
               {"value_won", report.total.value_won()},
               {"win_rate", report.total.win_rate()},
               {"ecpm", report.total.ecpm()},
               {"avg_spend_per_bid", report.total.avg_spend_per_bid()}};
        if (report.pct_of_optimal) {
            r["pct_of_optimal"] = *report.pct_of_optimal;
            r["pct_suspicious"] = report.pct_suspicious;
        }
        json deciles = json::array();
        for (const auto& d : report.deciles)
            deciles.push_back({{"value_lo", d.value_lo},
                               {"value_hi", d.value_hi},
                               {"n_bids", d.slice.n_bids},
                               {"n_wins", d.slice.n_wins},
                               {"surplus", d.slice.surplus()},
                               {"spend", d.slice.spend()}});
        r["deciles"] = std::move(deciles);
        report_json["policies"][label] = std::move(r);
    }

    result.report_path = config.output_dir / "reports.json";
    result.table_path = config.output_dir / "comparison.tsv";
    io::atomic_write(result.report_path, report_json.dump(2) + "\n");
    io::atomic_write(result.table_path, result.table.to_tsv());
    return result;
}

int run_command(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const degenerate_data_error& e) {
        std::cerr << "degenerate data: " << e.what() << "\n";
        return 3;
    } catch (const model_rejected_error& e) {
        std::cerr << "model rejected: " << e.what() << "\n";
        return 3;
    } catch (const format_error& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace bidshade::cli
