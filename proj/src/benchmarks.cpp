#include "bidshade/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bidshade/errors.hpp"
#include "bidshade/shading.hpp"

namespace bidshade::benchmarks {

namespace {

// In-place Cholesky solve of A x = b for a symmetric matrix (row major).
// Returns false when a pivot is not positive.
bool cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n,
                    std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) sum -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (!(sum > 0.0)) return false;
                a[i * n + i] = std::sqrt(sum);
            } else {
                a[i * n + j] = sum / a[j * n + j];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double sum = b[i];
        for (std::size_t k = 0; k < i; ++k) sum -= a[i * n + k] * b[k];
        b[i] = sum / a[i * n + i];
    }
    x.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double sum = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) sum -= a[k * n + ii] * x[k];
        x[ii] = sum / a[ii * n + ii];
    }
    return true;
}

// Augmented row for the dense regressors: slot 0 is the intercept, slots
// 1..k mirror the sparse feature entries.
void accumulate_row(std::vector<double>& a, std::vector<double>& rhs, std::size_t n,
                    const FeatureVector& f, double weight, double target) {
    std::vector<std::pair<std::size_t, double>> row;
    row.reserve(f.entries.size() + 1);
    row.emplace_back(0, 1.0);
    for (const auto& e : f.entries) row.emplace_back(1 + e.index, e.value);
    for (const auto& [i, vi] : row) {
        rhs[i] += weight * target * vi;
        for (const auto& [j, vj] : row) a[i * n + j] += weight * vi * vj;
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Censored-distribution estimator
// ---------------------------------------------------------------------------

void BucketedPriceDistribution::validate() const {
    if (edges.size() < 2 || pmf.size() + 1 != edges.size())
        throw std::invalid_argument("BucketedPriceDistribution: edge/pmf size mismatch");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1]))
            throw std::invalid_argument("BucketedPriceDistribution: edges must be increasing");
    double sum = 0.0;
    for (const double p : pmf) {
        if (!(p >= 0.0)) throw std::invalid_argument("BucketedPriceDistribution: negative mass");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("BucketedPriceDistribution: pmf must sum to 1");
}

std::vector<double> BucketedPriceDistribution::cdf_at_edges() const {
    std::vector<double> cdf(edges.size(), 0.0);
    for (std::size_t i = 0; i < pmf.size(); ++i) cdf[i + 1] = cdf[i] + pmf[i];
    return cdf;
}

std::vector<double> log_spaced_edges(double lo, double hi, std::size_t buckets) {
    if (!(lo > 0.0) || !(hi > lo) || buckets < 1)
        throw std::invalid_argument("log_spaced_edges: need 0 < lo < hi and buckets >= 1");
    std::vector<double> edges(buckets + 1);
    const double llo = std::log(lo);
    const double step = (std::log(hi) - llo) / static_cast<double>(buckets);
    for (std::size_t i = 0; i <= buckets; ++i)
        edges[i] = std::exp(llo + step * static_cast<double>(i));
    edges.front() = lo;
    edges.back() = hi;
    return edges;
}

CensoredFit fit_censored_distribution(std::span<const FeedbackRecord> records,
                                      std::vector<double> edges) {
    if (records.empty()) throw degenerate_data_error("censored fit: no records");
    if (edges.size() < 2) throw std::invalid_argument("censored fit: need at least one bucket");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1]))
            throw std::invalid_argument("censored fit: edges must be increasing");

    const std::size_t m = edges.size() - 1;
    // A win at bid b locates the winning price in buckets [0, cut); a loss in
    // [cut, m). Observations collapse to these cut patterns, so the EM cost is
    // independent of the record count.
    std::vector<double> win_at(m + 1, 0.0);
    std::vector<double> loss_at(m, 0.0);
    std::size_t wins = 0;
    std::size_t losses = 0;
    CensoredFit out;
    for (const auto& r : records) {
        if (r.won) {
            const std::size_t cut = static_cast<std::size_t>(
                std::lower_bound(edges.begin(), edges.begin() + static_cast<long>(m), r.bid) -
                edges.begin());
            if (cut == 0) {
                ++out.dropped_records;  // win below the bucket range
                continue;
            }
            win_at[cut] += 1.0;
            ++wins;
        } else {
            const std::size_t cut = static_cast<std::size_t>(
                std::upper_bound(edges.begin() + 1, edges.end(), r.bid) -
                (edges.begin() + 1));
            if (cut >= m) {
                ++out.dropped_records;  // loss above the bucket range
                continue;
            }
            loss_at[cut] += 1.0;
            ++losses;
        }
    }

    out.dist.edges = std::move(edges);
    if (wins == 0 || losses == 0) {
        // One-sided censoring says nothing about the other tail.
        out.one_sided_fallback = true;
        out.dist.pmf.assign(m, 1.0 / static_cast<double>(m));
        return out;
    }

    const double total = static_cast<double>(wins + losses);
    std::vector<double> p(m, 1.0 / static_cast<double>(m));
    std::vector<double> prefix(m + 1), suffix(m + 1), coef(m);
    for (std::uint32_t iter = 1; iter <= 2000; ++iter) {
        out.iterations = iter;
        prefix[0] = 0.0;
        for (std::size_t j = 0; j < m; ++j) prefix[j + 1] = prefix[j] + p[j];
        suffix[m] = 0.0;
        for (std::size_t j = m; j-- > 0;) suffix[j] = suffix[j + 1] + p[j];

        // coef[j] = sum over observations whose admissible set contains j of
        // count / (admissible mass); the self-consistency update is then
        // p[j] <- p[j] * coef[j] / total.
        double tail = 0.0;
        for (std::size_t c = m; c-- > 0;) {
            if (win_at[c + 1] > 0.0 && prefix[c + 1] > 1e-300)
                tail += win_at[c + 1] / prefix[c + 1];
            coef[c] = tail;
        }
        double head = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            if (loss_at[c] > 0.0 && suffix[c] > 1e-300) head += loss_at[c] / suffix[c];
            coef[c] += head;
        }

        double delta = 0.0;
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double next = p[j] * coef[j] / total;
            delta = std::max(delta, std::abs(next - p[j]));
            p[j] = next;
            sum += next;
        }
        if (sum > 0.0)
            for (auto& pj : p) pj /= sum;
        if (delta < 1e-12) break;
    }

    out.dist.pmf = std::move(p);
    out.dist.validate();
    return out;
}

double most_probable_price_bid(const BucketedPriceDistribution& dist) {
    dist.validate();
    std::size_t best = 0;
    for (std::size_t j = 1; j < dist.pmf.size(); ++j)
        if (dist.pmf[j] > dist.pmf[best]) best = j;  // ties keep the lowest bucket
    return 0.5 * (dist.edges[best] + dist.edges[best + 1]);
}

// ---------------------------------------------------------------------------
// Shading-factor logistic regression
// ---------------------------------------------------------------------------

double ShadingFactorModel::factor(const FeatureVector& features) const {
    return winrate::logistic(w0 + dot(weights, features));
}

double ShadingFactorModel::bid(const FeatureVector& features, double unshaded_bid) const {
    return factor(features) * unshaded_bid;
}

ShadingFactorModel fit_shading_factor(std::span<const FeedbackRecord> records) {
    if (records.empty()) throw degenerate_data_error("factor-lr: no records");
    const std::uint32_t k = records.front().features.dimension;
    const std::size_t n = k + 1;

    std::vector<double> targets;
    targets.reserve(records.size());
    for (const auto& r : records) {
        if (!r.min_bid_to_win)
            throw degenerate_data_error("factor-lr: records must carry min_bid_to_win");
        if (!(r.value > 0.0)) throw std::invalid_argument("factor-lr: values must be positive");
        targets.push_back(std::clamp(*r.min_bid_to_win / r.value, 1e-9, 1.0));
    }

    // Soft-label logistic GLM fit by damped Newton steps: E[target] is
    // modeled as logistic(w.x), so an intercept-only fit recovers the mean
    // target through the logit link.
    std::vector<double> w(n, 0.0);
    const double inv = 1.0 / static_cast<double>(records.size());
    constexpr double kRidge = 1e-8;
    for (int step = 0; step < 50; ++step) {
        std::vector<double> grad(n, 0.0);
        std::vector<double> hess(n * n, 0.0);
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& f = records[i].features;
            double z = w[0];
            for (const auto& e : f.entries) z += w[1 + e.index] * e.value;
            const double pz = winrate::logistic(z);
            const double resid = (pz - targets[i]) * inv;
            const double curv = std::max(pz * (1.0 - pz), 1e-12) * inv;
            grad[0] += resid;
            hess[0] += curv;
            for (const auto& e : f.entries) {
                grad[1 + e.index] += resid * e.value;
                hess[(1 + e.index) * n] += curv * e.value;
                hess[1 + e.index] += curv * e.value;
                for (const auto& e2 : f.entries)
                    hess[(1 + e.index) * n + 1 + e2.index] += curv * e.value * e2.value;
            }
        }
        for (std::size_t j = 0; j < n; ++j) hess[j * n + j] += kRidge;

        std::vector<double> delta;
        if (!cholesky_solve(hess, grad, n, delta)) break;
        double max_step = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            w[j] -= delta[j];
            max_step = std::max(max_step, std::abs(delta[j]));
        }
        if (max_step < 1e-12) break;
    }

    ShadingFactorModel model;
    model.dimension = k;
    model.w0 = w[0];
    model.weights.assign(w.begin() + 1, w.end());
    return model;
}

// ---------------------------------------------------------------------------
// Segment shader
// ---------------------------------------------------------------------------

void SegmentParams::validate() const {
    if (!(b1 > 0.0 && b1 <= 1.0))
        throw std::invalid_argument("SegmentParams: b1 must be in (0, 1]");
    if (!std::isfinite(u1) || !std::isfinite(u2))
        throw std::invalid_argument("SegmentParams: non-finite parameters");
    if (!(forgetting > 0.0 && forgetting <= 1.0))
        throw std::invalid_argument("SegmentParams: forgetting must be in (0, 1]");
}

double segment_nonlinear_apply(const SegmentParams& params, double unshaded_bid,
                               SegmentApplyStats* stats) {
    if (!(unshaded_bid > 0.0))
        throw std::domain_error("segment shader: unshaded bid must be positive");
    double out = params.b1 * unshaded_bid;
    if (params.u2 > 0.0) {
        const double arg = (1.0 + params.u1 * params.u2 * unshaded_bid) / params.u2;
        // The output must stay a positive price, so both a nonpositive log
        // argument and a nonpositive log value fall back to the factor branch.
        const double y = arg > 0.0 ? std::log(arg) : -1.0;
        if (y > 0.0)
            out = y;
        else if (stats)
            ++stats->nonlinear_fallbacks;
    }
    return std::min(out, unshaded_bid);
}

SegmentParams segment_rls_update(SegmentParams params, double observed_mbtw,
                                 double unshaded_bid) {
    if (!(unshaded_bid > 0.0))
        throw std::domain_error("segment shader: unshaded bid must be positive");
    const double lam = params.forgetting;
    const double x = unshaded_bid;
    const double y = observed_mbtw;

    if (params.u2 > 0.0) {
        const double denom_arg = 1.0 + params.u1 * params.u2 * x;
        if (denom_arg > 0.0 && denom_arg / params.u2 > 0.0) {
            // Gauss-Newton flavored RLS: regress the residual on the output's
            // gradient in (u1, u2).
            const double pred = std::log(denom_arg / params.u2);
            const double g1 = params.u2 * x / denom_arg;
            const double g2 = params.u1 * x / denom_arg - 1.0 / params.u2;
            const double pg1 = params.cov[0] * g1 + params.cov[1] * g2;
            const double pg2 = params.cov[2] * g1 + params.cov[3] * g2;
            const double gain = lam + g1 * pg1 + g2 * pg2;
            const double err = y - pred;
            params.u1 += pg1 / gain * err;
            params.u2 += pg2 / gain * err;
            const double k1 = pg1 / gain;
            const double k2 = pg2 / gain;
            const double n00 = (params.cov[0] - k1 * pg1) / lam;
            const double n11 = (params.cov[3] - k2 * pg2) / lam;
            const double off = 0.5 * ((params.cov[1] - k1 * pg2) + (params.cov[2] - k2 * pg1)) / lam;
            params.cov = {n00, off, off, n11};
            return params;
        }
        // Nonlinear branch unusable at this bid; fall through to the factor.
    }

    const double p = params.cov[0];
    const double gain = lam + x * p * x;
    const double k = p * x / gain;
    params.b1 = std::clamp(params.b1 + k * (y - params.b1 * x), 1e-6, 1.0);
    params.cov[0] = (p - k * x * p) / lam;
    return params;
}

SegmentKey segment_key_of(const FeatureVector& features,
                          std::span<const std::pair<std::uint32_t, std::uint32_t>> ranges) {
    SegmentKey key;
    key.reserve(ranges.size());
    for (const auto& [first, last] : ranges) {
        std::uint32_t slot = UINT32_MAX;
        for (const auto& e : features.entries) {
            if (e.index >= last) break;
            if (e.index >= first && e.value != 0.0) {
                slot = e.index;
                break;
            }
        }
        key.push_back(slot);
    }
    return key;
}

SegmentModel fit_segments(std::span<const FeedbackRecord> records,
                          std::vector<std::pair<std::uint32_t, std::uint32_t>> key_ranges,
                          SegmentParams defaults, const Vocabulary* vocab) {
    defaults.validate();
    SegmentModel model;
    model.key_ranges = std::move(key_ranges);
    model.defaults = defaults;
    for (const auto& r : records) {
        if (!r.min_bid_to_win)
            throw degenerate_data_error("segment-nl: records must carry min_bid_to_win");
        const SegmentKey key = segment_key_of(r.features, model.key_ranges);
        auto [it, inserted] = model.segments.try_emplace(key, defaults);
        if (inserted) {
            it->second.segment_key.clear();
            for (const auto slot : key) {
                if (slot == UINT32_MAX)
                    it->second.segment_key.push_back("*");
                else if (vocab && slot < vocab->entries().size())
                    it->second.segment_key.push_back(vocab->entries()[slot]);
                else
                    it->second.segment_key.push_back("slot:" + std::to_string(slot));
            }
        }
        it->second = segment_rls_update(std::move(it->second), *r.min_bid_to_win, r.value);
    }
    return model;
}

// ---------------------------------------------------------------------------
// Win-rate maintainer
// ---------------------------------------------------------------------------

double winrate_maintainer_bid(const winrate::WinRateModel& model,
                              const FeatureVector& features, double target, double value) {
    if (!(target > 0.0 && target < 1.0))
        throw std::invalid_argument("winrate_maintainer_bid: target must be in (0,1)");
    if (!(value > 0.0)) throw std::domain_error("winrate_maintainer_bid: value must be positive");
    model.validate();
    const double z = (winrate::logit(target) - winrate::alpha(model, features)) / model.beta;
    const double raw = model.currency_scale * std::exp(std::min(z, 700.0));
    return std::min(std::max(raw, 1e-9 * value), value);
}

// ---------------------------------------------------------------------------
// Point estimator
// ---------------------------------------------------------------------------

double PointEstimatorModel::predict(const FeatureVector& features) const {
    return w0 + dot(weights, features);
}

PointEstimatorModel point_estimator_train(std::span<const FeedbackRecord> records,
                                          double asymmetry) {
    if (records.empty()) throw degenerate_data_error("point-est: no records");
    if (!(asymmetry >= 0.0 && asymmetry < 1.0))
        throw std::invalid_argument("point-est: asymmetry must be in [0, 1)");
    const std::uint32_t k = records.front().features.dimension;
    const std::size_t n = k + 1;

    std::vector<double> a(n * n, 0.0);
    std::vector<double> rhs(n, 0.0);
    for (const auto& r : records) {
        if (!r.min_bid_to_win)
            throw degenerate_data_error("point-est: records must carry min_bid_to_win");
        const double weight = r.won ? 1.0 - asymmetry : 1.0 + asymmetry;
        accumulate_row(a, rhs, n, r.features, weight, *r.min_bid_to_win);
    }

    PointEstimatorModel model;
    model.dimension = k;
    model.asymmetry = asymmetry;
    std::vector<double> w;
    if (!cholesky_solve(a, rhs, n, w)) {
        model.ridge_fallback = true;
        for (std::size_t j = 0; j < n; ++j) a[j * n + j] += 1e-6;
        if (!cholesky_solve(a, rhs, n, w))
            throw degenerate_data_error("point-est: normal equations unsolvable");
    }
    model.w0 = w[0];
    model.weights.assign(w.begin() + 1, w.end());
    return model;
}

double point_estimator_bid(const PointEstimatorModel& model, const FeatureVector& features) {
    return std::max(model.predict(features), 1e-6);
}

// ---------------------------------------------------------------------------
// Fixed factor
// ---------------------------------------------------------------------------

double fixed_factor_bid(double factor, double value) {
    if (!(factor > 0.0 && factor <= 1.0))
        throw std::invalid_argument("fixed_factor_bid: factor must be in (0, 1]");
    if (!(value > 0.0)) throw std::domain_error("fixed_factor_bid: value must be positive");
    return factor * value;
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

FixedFactorPolicy::FixedFactorPolicy(double factor) : factor_(factor) {
    if (!(factor > 0.0 && factor <= 1.0))
        throw std::invalid_argument("FixedFactorPolicy: factor must be in (0, 1]");
}

double FixedFactorPolicy::bid(const FeatureVector&, double value) const {
    return fixed_factor_bid(factor_, value);
}

WinRatePolicy::WinRatePolicy(winrate::WinRateModel model, double epsilon_rel,
                             std::uint32_t max_steps, double floor_factor)
    : model_(std::move(model)),
      epsilon_rel_(epsilon_rel),
      max_steps_(max_steps),
      floor_factor_(floor_factor) {
    model_.validate();
    if (!(epsilon_rel > 0.0)) throw std::invalid_argument("WinRatePolicy: epsilon_rel must be positive");
}

double WinRatePolicy::bid(const FeatureVector& features, double value) const {
    return shading::shade(model_, features, value, epsilon_rel_ * value, max_steps_,
                          floor_factor_)
        .bid;
}

MostProbablePricePolicy::MostProbablePricePolicy(BucketedPriceDistribution dist)
    : dist_(std::move(dist)), mpp_bid_(most_probable_price_bid(dist_)) {}

double MostProbablePricePolicy::bid(const FeatureVector&, double value) const {
    return std::min(mpp_bid_, value);
}

ShadingFactorPolicy::ShadingFactorPolicy(ShadingFactorModel model)
    : model_(std::move(model)) {}

double ShadingFactorPolicy::bid(const FeatureVector& features, double value) const {
    return model_.bid(features, value);
}

SegmentPolicy::SegmentPolicy(SegmentModel model) : model_(std::move(model)) {}

double SegmentPolicy::bid(const FeatureVector& features, double value) const {
    const SegmentKey key = segment_key_of(features, model_.key_ranges);
    const auto it = model_.segments.find(key);
    const SegmentParams& params = it == model_.segments.end() ? model_.defaults : it->second;
    return segment_nonlinear_apply(params, value);
}

WinRateMaintainerPolicy::WinRateMaintainerPolicy(winrate::WinRateModel model, double target)
    : model_(std::move(model)), target_(target) {
    model_.validate();
    if (!(target > 0.0 && target < 1.0))
        throw std::invalid_argument("WinRateMaintainerPolicy: target must be in (0,1)");
}

double WinRateMaintainerPolicy::bid(const FeatureVector& features, double value) const {
    return winrate_maintainer_bid(model_, features, target_, value);
}

PointEstimatorPolicy::PointEstimatorPolicy(PointEstimatorModel model)
    : model_(std::move(model)) {}

double PointEstimatorPolicy::bid(const FeatureVector& features, double value) const {
    return std::min(point_estimator_bid(model_, features), value);
}

const std::vector<std::string>& policy_names() {
    static const std::vector<std::string> names = {
        "wr", "mpp", "factor-lr", "segment-nl", "wr-maintainer", "point-est", "fixed"};
    return names;
}

}  // namespace bidshade::benchmarks
