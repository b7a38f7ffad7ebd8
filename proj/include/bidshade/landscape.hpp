#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "bidshade/feedback.hpp"
#include "bidshade/rng.hpp"

namespace bidshade::landscape {

enum class Kind { Uniform, LogNormal, SpikedMixture };

// Ground-truth distribution of the highest competing bid. Parameters are
// validated at construction; cdf/sampling queries never fail. Features enter
// as an additive shift on the location parameter (both uniform bounds, or the
// log-normal mu). Spike prices are fixed; they model clustering at round
// numbers, which does not move with the request.
class LandscapeSpec {
public:
    static LandscapeSpec uniform(double b0, double b1);
    static LandscapeSpec lognormal(double mu, double sigma);
    // Point masses at (price, weight); the base keeps 1 - sum(weights).
    static LandscapeSpec spiked(LandscapeSpec base,
                                std::vector<std::pair<double, double>> spikes);

    LandscapeSpec with_feature_shift(std::map<std::uint32_t, double> shift) const;

    Kind kind() const noexcept { return kind_; }
    const std::map<std::uint32_t, double>& feature_shift() const noexcept { return shift_; }
    double param0() const noexcept { return p0_; }  // B0 or mu
    double param1() const noexcept { return p1_; }  // B1 or sigma
    const std::vector<std::pair<double, double>>& spikes() const noexcept { return spikes_; }
    const LandscapeSpec& base() const { return *base_; }

    // Sum of shift[i] * x_i over active features.
    double location_shift(const FeatureVector& features) const;

    double cdf(double b, double shift) const;      // P(bhat < b)
    double sample(Rng& rng, double shift) const;

private:
    LandscapeSpec() = default;

    Kind kind_ = Kind::Uniform;
    double p0_ = 0.0;
    double p1_ = 1.0;
    std::vector<std::pair<double, double>> spikes_;
    std::shared_ptr<const LandscapeSpec> base_;  // SpikedMixture only
    double base_weight_ = 1.0;
    std::map<std::uint32_t, double> shift_;
};

// P(bhat < b) for the request's conditional distribution. Monotone
// nondecreasing in b, 0 at b = 0, -> 1 as b -> infinity.
double true_cdf(const LandscapeSpec& spec, const FeatureVector& features, double b);

double sample_highest_bid(const LandscapeSpec& spec, const FeatureVector& features, Rng& rng);

using BidPolicyFn = std::function<double(const FeatureVector& features, double value)>;

struct FeedbackResult {
    std::vector<FeedbackRecord> records;
    std::uint64_t rejected_bids = 0;  // policy returned a nonpositive bid
};

// Runs one auction per request. A bid strictly greater than the sampled
// highest competing bid wins; ties lose.
FeedbackResult generate_feedback(const LandscapeSpec& spec, const BidPolicyFn& policy,
                                 std::span<const Request> requests, bool reveal_mbtw,
                                 Rng& rng);

struct OracleBid {
    double bid = 0.0;
    double expected_surplus = 0.0;
};

// Ground-truth oracle: exhaustive maximum of (V - b) * cdf(b) on a uniform
// grid over (0, V]; ties resolve to the lowest bid.
OracleBid oracle_optimal_bid(const LandscapeSpec& spec, const FeatureVector& features,
                             double value, std::size_t grid_n);

}  // namespace bidshade::landscape
