#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "bidshade/feedback.hpp"

namespace bidshade::winrate {

// Numerically stable logistic / logit pair.
double logistic(double z);
double logit(double p);

// Constrained logistic win-rate model:
//   P(win | x, b) = logistic(w0 + sum_i w_i x_i + beta * log(b / currency_scale)).
// Bids are normalized by currency_scale (the median training bid); the log
// shift folds into w0, so the family is unchanged but the fit is better
// conditioned. beta must be positive for a usable model.
struct WinRateModel {
    std::uint32_t dimension = 0;
    double w0 = 0.0;
    std::vector<double> weights;  // length == dimension
    double beta = 1.0;
    double currency_scale = 1.0;

    void validate() const;  // throws std::invalid_argument

    // Intercept re-expressed for raw (unnormalized) bids:
    // logistic(w0 + beta*log(b/scale)) == logistic(raw_intercept() + beta*log b).
    double raw_intercept() const { return w0 - beta * std::log(currency_scale); }
};

enum class ObservationWeighting { None, BidLikelihood };

struct TrainingConfig {
    double learning_rate = 1.0;
    std::uint32_t epochs = 400;
    double l2_penalty = 0.0;  // applied to feature weights only, not w0 or beta
    ObservationWeighting weighting = ObservationWeighting::None;
    std::uint64_t seed = 0;   // reserved; full-batch training is order-deterministic

    void validate() const;
};

// w0 + sum_i w_i x_i (normalized-bid space).
double alpha(const WinRateModel& model, const FeatureVector& features);

// Probability of winning at `bid`; strictly increasing in bid when beta > 0.
// Throws std::domain_error for bid <= 0.
double predict_win_rate(const WinRateModel& model, const FeatureVector& features,
                        double bid);

// Fixed-weight training objective over a feedback set. Parameter layout is
// [w0, w1..wk, beta]; exposed so the gradient can be checked against finite
// differences independently of the descent loop.
class Objective {
public:
    Objective(std::span<const FeedbackRecord> records, const TrainingConfig& config);

    double loss(std::span<const double> params) const;
    void gradient(std::span<const double> params, std::span<double> grad) const;

    std::uint32_t dimension() const noexcept { return dimension_; }
    std::size_t param_count() const noexcept { return dimension_ + 2; }
    double currency_scale() const noexcept { return currency_scale_; }
    const std::vector<double>& record_weights() const noexcept { return weights_; }

private:
    std::span<const FeedbackRecord> records_;
    std::vector<double> log_bids_;  // log(bid / currency_scale)
    std::vector<double> weights_;   // per-record, mean 1
    double currency_scale_ = 1.0;
    double l2_ = 0.0;
    std::uint32_t dimension_ = 0;
};

struct TrainingReport {
    WinRateModel model;
    double final_loss = 0.0;
    std::uint32_t epochs_run = 0;
};

// Full-batch gradient descent on the weighted logistic log-loss.
// Requires at least one win and one loss; rejects the model if the fitted
// beta is not positive. Deterministic for a fixed record order.
TrainingReport train(std::span<const FeedbackRecord> records, const TrainingConfig& config);

}  // namespace bidshade::winrate
