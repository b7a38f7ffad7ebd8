#pragma once

#include <optional>

#include "bidshade/features.hpp"

namespace bidshade {

// One simulated bid request: encoded attributes plus the private value.
struct Request {
    FeatureVector features;
    double value = 0.0;
};

// One logged auction. min_bid_to_win carries the sampled highest competing
// bid and is present only when the simulator is configured to reveal it.
struct FeedbackRecord {
    FeatureVector features;
    double bid = 0.0;
    double value = 0.0;
    bool won = false;
    std::optional<double> min_bid_to_win;
};

}  // namespace bidshade
