#include "bidshade/winrate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bidshade/errors.hpp"

namespace bidshade::winrate {

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double logit(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("logit: p must be in (0,1)");
    return std::log(p / (1.0 - p));
}

namespace {

// log(1 + e^z), safe across the whole double range.
double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double median(std::vector<double> v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    const double hi = v[mid];
    if (n % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + mid);
    return 0.5 * (lo + hi);
}

}  // namespace

void WinRateModel::validate() const {
    if (weights.size() != dimension)
        throw std::invalid_argument("WinRateModel: weight length mismatch");
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("WinRateModel: beta must be positive");
    if (!(currency_scale > 0.0) || !std::isfinite(currency_scale))
        throw std::invalid_argument("WinRateModel: currency_scale must be positive");
    if (!std::isfinite(w0))
        throw std::invalid_argument("WinRateModel: non-finite intercept");
    for (const double w : weights)
        if (!std::isfinite(w)) throw std::invalid_argument("WinRateModel: non-finite weight");
}

void TrainingConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainingConfig: learning_rate must be positive");
    if (epochs < 1) throw std::invalid_argument("TrainingConfig: epochs must be >= 1");
    if (!(l2_penalty >= 0.0)) throw std::invalid_argument("TrainingConfig: l2_penalty must be nonnegative");
}

double alpha(const WinRateModel& model, const FeatureVector& features) {
    if (features.dimension != model.dimension)
        throw std::invalid_argument("alpha: feature dimension mismatch");
    return model.w0 + dot(model.weights, features);
}

double predict_win_rate(const WinRateModel& model, const FeatureVector& features,
                        double bid) {
    if (!(bid > 0.0)) throw std::domain_error("predict_win_rate: bid must be positive");
    return logistic(alpha(model, features) + model.beta * std::log(bid / model.currency_scale));
}

Objective::Objective(std::span<const FeedbackRecord> records, const TrainingConfig& config)
    : records_(records), l2_(config.l2_penalty) {
    if (records.empty()) throw degenerate_data_error("train: no records");
    dimension_ = records.front().features.dimension;

    std::vector<double> bids;
    bids.reserve(records.size());
    for (const auto& r : records_) {
        if (r.features.dimension != dimension_)
            throw std::invalid_argument("train: inconsistent feature dimensions");
        if (!(r.bid > 0.0) || !std::isfinite(r.bid))
            throw std::invalid_argument("train: bids must be positive");
        bids.push_back(r.bid);
    }
    currency_scale_ = median(bids);

    log_bids_.reserve(records.size());
    for (const auto& r : records_) log_bids_.push_back(std::log(r.bid / currency_scale_));

    weights_.assign(records.size(), 1.0);
    if (config.weighting == ObservationWeighting::BidLikelihood) {
        // Losing-region observations crowd the fit, so each record is
        // weighted by the inverse of its bid bucket's empirical density
        // (10 log-spaced buckets), normalized to mean 1.
        const auto [lo_it, hi_it] = std::minmax_element(bids.begin(), bids.end());
        const double log_lo = std::log(*lo_it);
        const double log_hi = std::log(*hi_it);
        if (log_hi > log_lo) {
            constexpr int kBuckets = 10;
            const double width = (log_hi - log_lo) / kBuckets;
            std::vector<std::size_t> counts(kBuckets, 0);
            std::vector<int> bucket_of(bids.size());
            for (std::size_t i = 0; i < bids.size(); ++i) {
                int b = static_cast<int>((std::log(bids[i]) - log_lo) / width);
                b = std::clamp(b, 0, kBuckets - 1);
                bucket_of[i] = b;
                ++counts[b];
            }
            std::size_t nonempty = 0;
            for (const auto c : counts) nonempty += c > 0;
            const double scale = static_cast<double>(bids.size()) / static_cast<double>(nonempty);
            for (std::size_t i = 0; i < bids.size(); ++i)
                weights_[i] = scale / static_cast<double>(counts[bucket_of[i]]);
        }
    }
}

double Objective::loss(std::span<const double> params) const {
    const double w0 = params[0];
    const std::span<const double> w = params.subspan(1, dimension_);
    const double beta = params[dimension_ + 1];

    double acc = 0.0;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        double z = w0 + beta * log_bids_[i];
        for (const auto& e : r.features.entries) z += w[e.index] * e.value;
        // softplus(z) - y*z is the exact logistic log-loss of the record
        acc += weights_[i] * (softplus(z) - (r.won ? z : 0.0));
    }
    double penalty = 0.0;
    for (const double wj : w) penalty += wj * wj;
    return acc / static_cast<double>(records_.size()) + 0.5 * l2_ * penalty;
}

void Objective::gradient(std::span<const double> params, std::span<double> grad) const {
    const double w0 = params[0];
    const std::span<const double> w = params.subspan(1, dimension_);
    const double beta = params[dimension_ + 1];

    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        double z = w0 + beta * log_bids_[i];
        for (const auto& e : r.features.entries) z += w[e.index] * e.value;
        const double residual = weights_[i] * (logistic(z) - (r.won ? 1.0 : 0.0));
        grad[0] += residual;
        for (const auto& e : r.features.entries) grad[1 + e.index] += residual * e.value;
        grad[dimension_ + 1] += residual * log_bids_[i];
    }
    const double inv_n = 1.0 / static_cast<double>(records_.size());
    for (auto& g : grad) g *= inv_n;
    for (std::uint32_t j = 0; j < dimension_; ++j) grad[1 + j] += l2_ * w[j];
}

TrainingReport train(std::span<const FeedbackRecord> records, const TrainingConfig& config) {
    config.validate();
    std::size_t wins = 0;
    for (const auto& r : records) wins += r.won;
    if (records.size() < 2 || wins == 0 || wins == records.size())
        throw degenerate_data_error("train: need at least one win and one loss");

    Objective obj(records, config);
    std::vector<double> params(obj.param_count(), 0.0);
    params.back() = 1.0;  // beta starts positive
    std::vector<double> grad(obj.param_count(), 0.0);

    std::uint32_t epochs_run = 0;
    for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
        obj.gradient(params, grad);
        double max_abs = 0.0;
        for (const auto g : grad) max_abs = std::max(max_abs, std::abs(g));
        if (!std::isfinite(max_abs))
            throw model_rejected_error("train: diverged; reduce learning_rate");
        epochs_run = epoch + 1;
        if (max_abs < 1e-12) break;  // converged early; keeps runs deterministic
        for (std::size_t j = 0; j < params.size(); ++j)
            params[j] -= config.learning_rate * grad[j];
    }

    TrainingReport report;
    report.final_loss = obj.loss(params);
    report.epochs_run = epochs_run;
    if (!std::isfinite(report.final_loss))
        throw model_rejected_error("train: loss is not finite; reduce learning_rate");
    if (!(params.back() > 0.0))
        throw model_rejected_error("train: fitted beta is not positive");

    WinRateModel& m = report.model;
    m.dimension = obj.dimension();
    m.w0 = params[0];
    m.weights.assign(params.begin() + 1, params.begin() + 1 + obj.dimension());
    m.beta = params.back();
    m.currency_scale = obj.currency_scale();
    m.validate();
    return report;
}

}  // namespace bidshade::winrate
