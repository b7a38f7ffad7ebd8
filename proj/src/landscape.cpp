#include "bidshade/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bidshade::landscape {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

}  // namespace

LandscapeSpec LandscapeSpec::uniform(double b0, double b1) {
    if (!(b0 >= 0.0) || !(b1 > b0) || !std::isfinite(b0) || !std::isfinite(b1))
        throw std::invalid_argument("landscape: uniform requires 0 <= B0 < B1");
    LandscapeSpec s;
    s.kind_ = Kind::Uniform;
    s.p0_ = b0;
    s.p1_ = b1;
    return s;
}

LandscapeSpec LandscapeSpec::lognormal(double mu, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(mu) || !std::isfinite(sigma))
        throw std::invalid_argument("landscape: lognormal requires sigma > 0");
    LandscapeSpec s;
    s.kind_ = Kind::LogNormal;
    s.p0_ = mu;
    s.p1_ = sigma;
    return s;
}

LandscapeSpec LandscapeSpec::spiked(LandscapeSpec base,
                                    std::vector<std::pair<double, double>> spikes) {
    if (base.kind_ == Kind::SpikedMixture)
        throw std::invalid_argument("landscape: spiked base must not itself be spiked");
    double total = 0.0;
    for (const auto& [price, weight] : spikes) {
        if (!(price > 0.0) || !std::isfinite(price))
            throw std::invalid_argument("landscape: spike price must be positive");
        if (!(weight >= 0.0) || !std::isfinite(weight))
            throw std::invalid_argument("landscape: spike weight must be nonnegative");
        total += weight;
    }
    if (total > 1.0 + 1e-12)
        throw std::invalid_argument("landscape: spike weights must sum to at most 1");
    LandscapeSpec s;
    s.kind_ = Kind::SpikedMixture;
    s.spikes_ = std::move(spikes);
    s.base_weight_ = std::max(0.0, 1.0 - total);
    s.shift_ = base.shift_;
    s.base_ = std::make_shared<const LandscapeSpec>(std::move(base));
    return s;
}

LandscapeSpec LandscapeSpec::with_feature_shift(std::map<std::uint32_t, double> shift) const {
    for (const auto& [idx, v] : shift) {
        (void)idx;
        if (!std::isfinite(v))
            throw std::invalid_argument("landscape: feature shift must be finite");
    }
    LandscapeSpec s = *this;
    s.shift_ = std::move(shift);
    return s;
}

double LandscapeSpec::location_shift(const FeatureVector& features) const {
    if (shift_.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& e : features.entries) {
        const auto it = shift_.find(e.index);
        if (it != shift_.end()) acc += it->second * e.value;
    }
    return acc;
}

double LandscapeSpec::cdf(double b, double shift) const {
    switch (kind_) {
        case Kind::Uniform: {
            // Shift both bounds; floor the support at zero so prices stay valid.
            const double s = std::max(shift, -p0_);
            const double lo = p0_ + s;
            const double hi = p1_ + s;
            if (b <= lo) return 0.0;
            if (b >= hi) return 1.0;
            return (b - lo) / (hi - lo);
        }
        case Kind::LogNormal: {
            if (b <= 0.0) return 0.0;
            return normal_cdf((std::log(b) - (p0_ + shift)) / p1_);
        }
        case Kind::SpikedMixture: {
            double acc = base_weight_ * base_->cdf(b, shift);
            // Strictly-below convention: the atom at b itself is excluded,
            // so a bid equal to a spike price still loses.
            for (const auto& [price, weight] : spikes_)
                if (price < b) acc += weight;
            return std::min(acc, 1.0);
        }
    }
    return 0.0;
}

double LandscapeSpec::sample(Rng& rng, double shift) const {
    switch (kind_) {
        case Kind::Uniform: {
            const double s = std::max(shift, -p0_);
            return (p0_ + s) + rng.uniform01() * (p1_ - p0_);
        }
        case Kind::LogNormal:
            return std::exp(p0_ + shift + p1_ * rng.normal());
        case Kind::SpikedMixture: {
            double u = rng.uniform01();
            for (const auto& [price, weight] : spikes_) {
                if (u < weight) return price;
                u -= weight;
            }
            return base_->sample(rng, shift);
        }
    }
    return 0.0;
}

double true_cdf(const LandscapeSpec& spec, const FeatureVector& features, double b) {
    if (!(b >= 0.0)) throw std::domain_error("true_cdf: price must be nonnegative");
    return spec.cdf(b, spec.location_shift(features));
}

double sample_highest_bid(const LandscapeSpec& spec, const FeatureVector& features,
                          Rng& rng) {
    return spec.sample(rng, spec.location_shift(features));
}

FeedbackResult generate_feedback(const LandscapeSpec& spec, const BidPolicyFn& policy,
                                 std::span<const Request> requests, bool reveal_mbtw,
                                 Rng& rng) {
    FeedbackResult out;
    out.records.reserve(requests.size());
    for (const auto& req : requests) {
        const double bid = policy(req.features, req.value);
        if (!(bid > 0.0) || !std::isfinite(bid)) {
            ++out.rejected_bids;
            continue;
        }
        const double bhat = spec.sample(rng, spec.location_shift(req.features));
        FeedbackRecord rec;
        rec.features = req.features;
        rec.bid = bid;
        rec.value = req.value;
        rec.won = bid > bhat;
        if (reveal_mbtw) rec.min_bid_to_win = bhat;
        out.records.push_back(std::move(rec));
    }
    return out;
}

OracleBid oracle_optimal_bid(const LandscapeSpec& spec, const FeatureVector& features,
                             double value, std::size_t grid_n) {
    if (!(value > 0.0)) throw std::domain_error("oracle_optimal_bid: value must be positive");
    if (grid_n < 1000) throw std::invalid_argument("oracle_optimal_bid: grid_n must be >= 1000");
    const double shift = spec.location_shift(features);
    const double n = static_cast<double>(grid_n);
    OracleBid best{value / n, -1.0};
    for (std::size_t j = 1; j <= grid_n; ++j) {
        const double b = value * (static_cast<double>(j) / n);
        const double s = (value - b) * spec.cdf(b, shift);
        if (s > best.expected_surplus) best = {b, s};  // strict: ties keep the lowest bid
    }
    if (best.expected_surplus < 0.0) best.expected_surplus = 0.0;
    return best;
}

}  // namespace bidshade::landscape
