#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bidshade/feedback.hpp"
#include "bidshade/winrate.hpp"

namespace bidshade::benchmarks {

// ---------------------------------------------------------------------------
// Censored winning-price distribution (bucketed maximum likelihood)
// ---------------------------------------------------------------------------

struct BucketedPriceDistribution {
    std::vector<double> edges;  // bucket boundaries, strictly increasing
    std::vector<double> pmf;    // one mass per bucket, sums to 1

    void validate() const;                   // throws std::invalid_argument
    std::vector<double> cdf_at_edges() const;  // prefix sums, length edges.size()
};

std::vector<double> log_spaced_edges(double lo, double hi, std::size_t buckets);

struct CensoredFit {
    BucketedPriceDistribution dist;
    bool one_sided_fallback = false;  // all-wins or all-losses input: flat prior
    std::uint32_t iterations = 0;
    std::uint64_t dropped_records = 0;  // observations incompatible with the bucket range
};

// Self-consistency (EM) fit of the bucket masses from censored outcomes: a
// win at bid b says the winning price was below b, a loss says at or above b.
// min_bid_to_win is not used.
CensoredFit fit_censored_distribution(std::span<const FeedbackRecord> records,
                                      std::vector<double> edges);

// Midpoint of the highest-mass bucket; ties resolve to the lowest bucket.
double most_probable_price_bid(const BucketedPriceDistribution& dist);

// ---------------------------------------------------------------------------
// Shading-factor logistic regression (factor in (0,1), applied to the
// unshaded bid). Targets are min_bid_to_win / unshaded_bid clamped to (0,1].
// ---------------------------------------------------------------------------

struct ShadingFactorModel {
    std::uint32_t dimension = 0;
    double w0 = 0.0;
    std::vector<double> weights;

    double factor(const FeatureVector& features) const;  // in (0,1)
    double bid(const FeatureVector& features, double unshaded_bid) const;
};

ShadingFactorModel fit_shading_factor(std::span<const FeedbackRecord> records);

// ---------------------------------------------------------------------------
// Segment-based nonlinear shader, parameters fit per segment by recursive
// least squares. The applied function has a nonlinear branch when u2 > 0 and
// a plain multiplicative factor b1 otherwise.
// ---------------------------------------------------------------------------

struct SegmentParams {
    std::vector<std::string> segment_key;  // readable attribute values
    double u1 = 0.0;
    double u2 = 0.0;
    double b1 = 0.9;                        // factor in (0,1]
    std::array<double, 4> cov{100.0, 0.0, 0.0, 100.0};  // RLS covariance (2x2)
    double forgetting = 0.99;

    void validate() const;
};

struct SegmentApplyStats {
    std::uint64_t nonlinear_fallbacks = 0;
};

// log((1 + u1*u2*x) / u2) when u2 > 0, b1*x otherwise; output clamped to
// (0, x]. An unusable nonlinear output falls back to the linear branch and
// is counted.
double segment_nonlinear_apply(const SegmentParams& params, double unshaded_bid,
                               SegmentApplyStats* stats = nullptr);

// One recursive-least-squares step fitting the applied output to the observed
// minimum bid to win. The nonlinear branch updates (u1, u2) through the
// linearized output; the linear branch updates b1. The covariance is
// symmetrized every step.
SegmentParams segment_rls_update(SegmentParams params, double observed_mbtw,
                                 double unshaded_bid);

// One active slot per tracked attribute range; UINT32_MAX when absent.
using SegmentKey = std::vector<std::uint32_t>;

SegmentKey segment_key_of(const FeatureVector& features,
                          std::span<const std::pair<std::uint32_t, std::uint32_t>> ranges);

struct SegmentModel {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> key_ranges;
    SegmentParams defaults;
    std::map<SegmentKey, SegmentParams> segments;
};

// Replays the feedback in order, one RLS update per record against its
// segment. Segments never share state. Requires min_bid_to_win.
SegmentModel fit_segments(std::span<const FeedbackRecord> records,
                          std::vector<std::pair<std::uint32_t, std::uint32_t>> key_ranges,
                          SegmentParams defaults, const Vocabulary* vocab = nullptr);

// ---------------------------------------------------------------------------
// Win-rate maintainer: the smallest bid whose predicted win rate hits the
// target, clamped to (0, value].
// ---------------------------------------------------------------------------

double winrate_maintainer_bid(const winrate::WinRateModel& model,
                              const FeatureVector& features, double target, double value);

// ---------------------------------------------------------------------------
// Asymmetric-loss point estimator: weighted least squares on the observed
// market price, weight 1+a on losses and 1-a on wins.
// ---------------------------------------------------------------------------

struct PointEstimatorModel {
    std::uint32_t dimension = 0;
    double w0 = 0.0;
    std::vector<double> weights;
    double asymmetry = 0.0;
    bool ridge_fallback = false;  // normal equations were singular

    double predict(const FeatureVector& features) const;
};

PointEstimatorModel point_estimator_train(std::span<const FeedbackRecord> records,
                                          double asymmetry);
double point_estimator_bid(const PointEstimatorModel& model, const FeatureVector& features);

// ---------------------------------------------------------------------------
// Fixed-factor baseline.
// ---------------------------------------------------------------------------

double fixed_factor_bid(double factor, double value);

// ---------------------------------------------------------------------------
// Policy objects. Every policy emits a bid in (0, value].
// ---------------------------------------------------------------------------

class Policy {
public:
    virtual ~Policy() = default;
    virtual double bid(const FeatureVector& features, double value) const = 0;
};

class FixedFactorPolicy final : public Policy {
public:
    explicit FixedFactorPolicy(double factor);
    double bid(const FeatureVector&, double value) const override;

private:
    double factor_;
};

class WinRatePolicy final : public Policy {
public:
    explicit WinRatePolicy(winrate::WinRateModel model, double epsilon_rel = 1e-4,
                           std::uint32_t max_steps = 50, double floor_factor = 0.0);
    double bid(const FeatureVector& features, double value) const override;
    const winrate::WinRateModel& model() const noexcept { return model_; }

private:
    winrate::WinRateModel model_;
    double epsilon_rel_;
    std::uint32_t max_steps_;
    double floor_factor_;
};

class MostProbablePricePolicy final : public Policy {
public:
    explicit MostProbablePricePolicy(BucketedPriceDistribution dist);
    double bid(const FeatureVector&, double value) const override;
    const BucketedPriceDistribution& distribution() const noexcept { return dist_; }

private:
    BucketedPriceDistribution dist_;
    double mpp_bid_;
};

class ShadingFactorPolicy final : public Policy {
public:
    explicit ShadingFactorPolicy(ShadingFactorModel model);
    double bid(const FeatureVector& features, double value) const override;
    const ShadingFactorModel& model() const noexcept { return model_; }

private:
    ShadingFactorModel model_;
};

class SegmentPolicy final : public Policy {
public:
    explicit SegmentPolicy(SegmentModel model);
    double bid(const FeatureVector& features, double value) const override;
    const SegmentModel& model() const noexcept { return model_; }

private:
    SegmentModel model_;
};

class WinRateMaintainerPolicy final : public Policy {
public:
    WinRateMaintainerPolicy(winrate::WinRateModel model, double target);
    double bid(const FeatureVector& features, double value) const override;
    const winrate::WinRateModel& model() const noexcept { return model_; }
    double target() const noexcept { return target_; }

private:
    winrate::WinRateModel model_;
    double target_;
};

class PointEstimatorPolicy final : public Policy {
public:
    explicit PointEstimatorPolicy(PointEstimatorModel model);
    double bid(const FeatureVector& features, double value) const override;
    const PointEstimatorModel& model() const noexcept { return model_; }

private:
    PointEstimatorModel model_;
};

// Registered benchmark names, in canonical order.
const std::vector<std::string>& policy_names();

}  // namespace bidshade::benchmarks
