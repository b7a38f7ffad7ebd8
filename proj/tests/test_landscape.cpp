#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bidshade/landscape.hpp"
#include "bidshade/rng.hpp"
#include "bidshade/shading.hpp"

using namespace bidshade;
using landscape::LandscapeSpec;

namespace {

const FeatureVector kNoFeatures{};

FeatureVector one_hot(std::uint32_t index, std::uint32_t dimension) {
    FeatureVector f;
    f.dimension = dimension;
    f.entries.push_back({index, 1.0});
    return f;
}

// Two-sided Kolmogorov-Smirnov distance against the strictly-below cdf,
// handling point masses (spikes) explicitly.
double ks_distance(const LandscapeSpec& spec, std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < samples.size()) {
        std::size_t j = i;
        while (j < samples.size() && samples[j] == samples[i]) ++j;
        const double x = samples[i];
        double atom = 0.0;
        if (spec.kind() == landscape::Kind::SpikedMixture)
            for (const auto& [price, weight] : spec.spikes())
                if (price == x) atom += weight;
        const double f_lo = landscape::true_cdf(spec, kNoFeatures, x);
        d = std::max(d, std::abs(f_lo - static_cast<double>(i) / n));
        d = std::max(d, std::abs(f_lo + atom - static_cast<double>(j) / n));
        i = j;
    }
    return d;
}

LandscapeSpec random_spec(Rng& rng) {
    switch (rng.below(3)) {
        case 0: {
            const double b0 = rng.uniform(0.0, 2.0);
            return LandscapeSpec::uniform(b0, b0 + rng.uniform(0.1, 3.0));
        }
        case 1:
            return LandscapeSpec::lognormal(rng.uniform(-1.0, 1.0), rng.uniform(0.2, 1.2));
        default: {
            const double b0 = rng.uniform(0.0, 1.0);
            return LandscapeSpec::spiked(
                LandscapeSpec::uniform(b0, b0 + rng.uniform(0.5, 2.0)),
                {{rng.uniform(0.5, 2.0), 0.1}, {rng.uniform(2.0, 3.0), 0.05}});
        }
    }
}

}  // namespace

TEST_CASE("uniform cdf closed form") {
    const auto u01 = LandscapeSpec::uniform(0.0, 1.0);
    CHECK(landscape::true_cdf(u01, kNoFeatures, 0.5) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(landscape::true_cdf(u01, kNoFeatures, 0.0) == 0.0);
    CHECK(landscape::true_cdf(u01, kNoFeatures, 2.0) == 1.0);

    const auto u24 = LandscapeSpec::uniform(2.0, 4.0);
    CHECK(landscape::true_cdf(u24, kNoFeatures, 3.0) == doctest::Approx(0.5).epsilon(1e-14));

    // Monte-Carlo cross-check of the same value.
    Rng rng(1);
    std::size_t below = 0;
    constexpr std::size_t kDraws = 1000000;
    for (std::size_t i = 0; i < kDraws; ++i)
        below += landscape::sample_highest_bid(u24, kNoFeatures, rng) < 3.0;
    CHECK(std::abs(static_cast<double>(below) / kDraws - 0.5) <= 0.002);

    CHECK_THROWS_AS(landscape::true_cdf(u01, kNoFeatures, -0.1), std::domain_error);
}

TEST_CASE("invalid specs fail at construction") {
    CHECK_THROWS_AS(LandscapeSpec::uniform(1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(LandscapeSpec::uniform(-0.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(LandscapeSpec::lognormal(0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(
        LandscapeSpec::spiked(LandscapeSpec::uniform(0.0, 1.0), {{0.5, 0.7}, {0.8, 0.5}}),
        std::invalid_argument);
    CHECK_THROWS_AS(
        LandscapeSpec::spiked(LandscapeSpec::uniform(0.0, 1.0), {{0.5, -0.1}}),
        std::invalid_argument);
}

TEST_CASE("sampling support and determinism") {
    const auto u01 = LandscapeSpec::uniform(0.0, 1.0);
    Rng rng(9);
    for (int i = 0; i < 1000; ++i) {
        const double x = landscape::sample_highest_bid(u01, kNoFeatures, rng);
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }

    Rng a(123);
    Rng b(123);
    for (int i = 0; i < 20; ++i)
        CHECK(landscape::sample_highest_bid(u01, kNoFeatures, a) ==
              landscape::sample_highest_bid(u01, kNoFeatures, b));
}

TEST_CASE("sample mean of the uniform landscape") {
    const auto u01 = LandscapeSpec::uniform(0.0, 1.0);
    Rng rng(17);
    double sum = 0.0;
    constexpr std::size_t kDraws = 1000000;
    for (std::size_t i = 0; i < kDraws; ++i)
        sum += landscape::sample_highest_bid(u01, kNoFeatures, rng);
    CHECK(std::abs(sum / kDraws - 0.5) <= 0.002);
}

TEST_CASE("empirical cdf stays within KS distance 0.01 of the true cdf") {
    const std::vector<LandscapeSpec> specs = {
        LandscapeSpec::uniform(0.5, 2.0),
        LandscapeSpec::lognormal(0.0, 0.7),
        LandscapeSpec::spiked(LandscapeSpec::uniform(0.5, 2.0),
                              {{1.0, 0.15}, {1.5, 0.05}}),
    };
    std::uint64_t seed = 400;
    for (const auto& spec : specs) {
        Rng rng(seed++);
        std::vector<double> samples(100000);
        for (auto& s : samples) s = landscape::sample_highest_bid(spec, kNoFeatures, rng);
        CHECK(ks_distance(spec, std::move(samples)) <= 0.01);
    }
}

TEST_CASE("spike mass sits strictly above the spike price") {
    const auto spec = LandscapeSpec::spiked(LandscapeSpec::uniform(0.0, 2.0), {{1.0, 0.2}});
    CHECK(landscape::true_cdf(spec, kNoFeatures, 1.0) ==
          doctest::Approx(0.8 * 0.5).epsilon(1e-12));
    CHECK(landscape::true_cdf(spec, kNoFeatures, 1.0 + 1e-9) ==
          doctest::Approx(0.8 * 0.5 + 0.2).epsilon(1e-6));
    // A bid equal to the spike price loses against the spike.
    Rng rng(5);
    std::size_t at_spike = 0;
    for (int i = 0; i < 20000; ++i)
        at_spike += landscape::sample_highest_bid(spec, kNoFeatures, rng) == 1.0;
    CHECK(std::abs(static_cast<double>(at_spike) / 20000.0 - 0.2) <= 0.01);
}

TEST_CASE("feature shifts move the location parameter") {
    const auto base = LandscapeSpec::uniform(1.0, 2.0);
    const auto spec = base.with_feature_shift({{0, 0.5}});
    const auto f = one_hot(0, 3);
    CHECK(landscape::true_cdf(spec, f, 1.75) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(landscape::true_cdf(spec, kNoFeatures, 1.75) ==
          doctest::Approx(0.75).epsilon(1e-12));

    const auto ln = LandscapeSpec::lognormal(0.0, 0.6).with_feature_shift({{0, 0.3}});
    CHECK(landscape::true_cdf(ln, f, std::exp(0.3)) == doctest::Approx(0.5).epsilon(1e-12));

    // Negative shifts cannot push the uniform support below zero.
    const auto clamped = LandscapeSpec::uniform(0.2, 1.2).with_feature_shift({{0, -1.0}});
    CHECK(landscape::true_cdf(clamped, f, 0.0) == 0.0);
    CHECK(landscape::true_cdf(clamped, f, 0.5) == doctest::Approx(0.5).epsilon(1e-12));

    // Spike prices hold still under shifts; only the base moves.
    const auto spiked = LandscapeSpec::spiked(LandscapeSpec::uniform(0.0, 2.0), {{1.0, 0.2}})
                            .with_feature_shift({{0, 0.5}});
    CHECK(landscape::true_cdf(spiked, f, 1.0 + 1e-9) ==
          doctest::Approx(0.8 * 0.25 + 0.2).epsilon(1e-6));
}

TEST_CASE("cdf is monotone, 0 at 0, and 1 in the far tail") {
    Rng rng(33);
    for (int i = 0; i < 200; ++i) {
        const auto spec = random_spec(rng);
        CHECK(landscape::true_cdf(spec, kNoFeatures, 0.0) == 0.0);
        CHECK(landscape::true_cdf(spec, kNoFeatures, 1e12) >= 1.0 - 1e-9);
        double b1 = rng.uniform(0.0, 5.0);
        double b2 = rng.uniform(0.0, 5.0);
        if (b2 < b1) std::swap(b1, b2);
        CHECK(landscape::true_cdf(spec, kNoFeatures, b1) <=
              landscape::true_cdf(spec, kNoFeatures, b2));
    }
}

TEST_CASE("generate_feedback basics") {
    const auto u01 = LandscapeSpec::uniform(0.0, 1.0);
    std::vector<Request> requests(200);
    for (auto& r : requests) r.value = 2.0;

    SUBCASE("bidding above the support always wins") {
        Rng rng(3);
        const auto out = landscape::generate_feedback(
            u01, [](const FeatureVector&, double value) { return value; }, requests, false,
            rng);
        REQUIRE(out.records.size() == requests.size());
        for (const auto& r : out.records) {
            CHECK(r.won);
            CHECK_FALSE(r.min_bid_to_win.has_value());
        }
    }

    SUBCASE("win fraction matches the cdf at the bid") {
        std::vector<Request> many(100000);
        for (auto& r : many) r.value = 1.0;
        Rng rng(13);
        const auto out = landscape::generate_feedback(
            u01, [](const FeatureVector&, double) { return 0.25; }, many, false, rng);
        std::size_t wins = 0;
        for (const auto& r : out.records) wins += r.won;
        CHECK(std::abs(static_cast<double>(wins) / many.size() - 0.25) <= 0.01);
    }

    SUBCASE("revealed minimum bid to win is consistent with the outcome") {
        Rng rng(29);
        Rng bid_rng(30);
        const auto out = landscape::generate_feedback(
            u01,
            [&](const FeatureVector&, double) { return bid_rng.uniform(0.01, 1.2); },
            requests, true, rng);
        for (const auto& r : out.records) {
            REQUIRE(r.min_bid_to_win.has_value());
            CHECK(r.won == (r.bid > *r.min_bid_to_win));
        }
    }

    SUBCASE("nonpositive bids are rejected with a count") {
        Rng rng(55);
        int calls = 0;
        const auto out = landscape::generate_feedback(
            u01,
            [&](const FeatureVector&, double) { return ++calls % 4 == 0 ? -1.0 : 0.5; },
            requests, false, rng);
        CHECK(out.rejected_bids == requests.size() / 4);
        CHECK(out.records.size() == requests.size() - out.rejected_bids);
    }
}

TEST_CASE("oracle_optimal_bid worked cases") {
    const auto u01 = LandscapeSpec::uniform(0.0, 1.0);
    const auto a = landscape::oracle_optimal_bid(u01, kNoFeatures, 1.0, 100000);
    CHECK(std::abs(a.bid - 0.5) <= 1e-5 + 1e-12);
    CHECK(a.expected_surplus == doctest::Approx(0.25).epsilon(1e-6));

    // The optimum sits at the cdf kink, so the grid surplus is off by up to
    // one step times the unit slope.
    const auto b = landscape::oracle_optimal_bid(u01, kNoFeatures, 3.0, 100000);
    CHECK(std::abs(b.bid - 1.0) <= 3e-5 + 1e-12);
    CHECK(std::abs(b.expected_surplus - 2.0) <= 2.0 * 3e-5);

    const auto u12 = LandscapeSpec::uniform(1.0, 2.0);
    const auto c = landscape::oracle_optimal_bid(u12, kNoFeatures, 2.0, 100000);
    CHECK(std::abs(c.bid - 1.5) <= 2e-5 + 1e-12);
    CHECK(c.expected_surplus == doctest::Approx(0.25).epsilon(1e-6));

    CHECK_THROWS_AS(landscape::oracle_optimal_bid(u01, kNoFeatures, 1.0, 100),
                    std::invalid_argument);
}

TEST_CASE("oracle agrees with the uniform closed form within one grid step") {
    Rng rng(71);
    for (int i = 0; i < 50; ++i) {
        const double b0 = rng.uniform(0.0, 2.0);
        const double b1 = b0 + rng.uniform(0.2, 2.0);
        const double value = b0 + rng.uniform(0.1, 3.0);
        const auto spec = LandscapeSpec::uniform(b0, b1);
        const auto oracle = landscape::oracle_optimal_bid(spec, kNoFeatures, value, 50000);
        const auto closed = shading::uniform_closed_form(value, b0, b1);
        CHECK(std::abs(oracle.bid - closed.bid) <= value / 50000.0 * 1.000001);
    }
}
