#pragma once

#include <stdexcept>

namespace bidshade {

// One exception type per CLI exit class: 2 config/usage, 3 degenerate data,
// 4 file format/version. Everything else maps to a generic failure.

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct degenerate_data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training finished but the fitted model violates a contract (e.g. the
// log-bid coefficient came out nonpositive). Never silently corrected.
struct model_rejected_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace bidshade
