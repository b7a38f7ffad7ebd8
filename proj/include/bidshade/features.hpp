#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bidshade {

// Sparse one-hot-style feature vector. Indices are strictly increasing and
// below `dimension`; values are finite.
struct FeatureVector {
    struct Entry {
        std::uint32_t index = 0;
        double value = 0.0;
    };

    std::vector<Entry> entries;
    std::uint32_t dimension = 0;

    bool empty() const noexcept { return entries.empty(); }
    void validate() const;  // throws std::invalid_argument
};

// Dot product against a dense weight vector of length `dimension`.
double dot(const std::vector<double>& weights, const FeatureVector& fv);

using AttributeMap = std::map<std::string, std::string>;

// Frozen categorical dictionary. Slots are laid out attribute-major in sorted
// attribute order; the final slot is reserved for out-of-vocabulary values.
class Vocabulary {
public:
    Vocabulary() = default;

    static Vocabulary from_attribute_values(
        const std::map<std::string, std::vector<std::string>>& values);
    // Rebuild from "attr=value" labels in slot order (model files store these).
    static Vocabulary from_entries(std::vector<std::string> entries);

    std::uint32_t dimension() const noexcept {
        return static_cast<std::uint32_t>(entries_.size()) + 1;
    }
    std::uint32_t oov_index() const noexcept {
        return static_cast<std::uint32_t>(entries_.size());
    }
    const std::vector<std::string>& entries() const noexcept { return entries_; }

    std::optional<std::uint32_t> index_of(const std::string& attr,
                                          const std::string& value) const;
    // Contiguous [first, last) slot range of one attribute; (0,0) if unknown.
    std::pair<std::uint32_t, std::uint32_t> attribute_range(const std::string& attr) const;
    std::vector<std::string> attribute_names() const;

private:
    std::vector<std::string> entries_;  // "attr=value" per slot
    std::map<std::string, std::uint32_t> index_;
    std::map<std::string, std::pair<std::uint32_t, std::uint32_t>> ranges_;
};

struct EncodeStats {
    std::uint64_t oov_hits = 0;
};

// Deterministic one-hot encoding. Unknown attribute values collapse into the
// reserved OOV slot and are counted; encoding never fails.
FeatureVector encode(const AttributeMap& attrs, const Vocabulary& vocab,
                     EncodeStats* stats = nullptr);

}  // namespace bidshade
