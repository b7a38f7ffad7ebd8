#include "bidshade/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bidshade {

void FeatureVector::validate() const {
    bool first = true;
    std::uint32_t prev = 0;
    for (const auto& e : entries) {
        if (!std::isfinite(e.value))
            throw std::invalid_argument("FeatureVector: non-finite value");
        if (e.index >= dimension)
            throw std::invalid_argument("FeatureVector: index out of range");
        if (!first && e.index <= prev)
            throw std::invalid_argument("FeatureVector: indices must be strictly increasing");
        prev = e.index;
        first = false;
    }
}

double dot(const std::vector<double>& weights, const FeatureVector& fv) {
    double acc = 0.0;
    for (const auto& e : fv.entries) acc += weights[e.index] * e.value;
    return acc;
}

Vocabulary Vocabulary::from_attribute_values(
    const std::map<std::string, std::vector<std::string>>& values) {
    Vocabulary v;
    for (const auto& [attr, vals] : values) {
        if (attr.empty() || attr.find('=') != std::string::npos)
            throw std::invalid_argument("Vocabulary: bad attribute name '" + attr + "'");
        const auto first = static_cast<std::uint32_t>(v.entries_.size());
        for (const auto& val : vals) {
            const std::string label = attr + "=" + val;
            if (!v.index_.emplace(label, static_cast<std::uint32_t>(v.entries_.size())).second)
                throw std::invalid_argument("Vocabulary: duplicate entry '" + label + "'");
            v.entries_.push_back(label);
        }
        v.ranges_[attr] = {first, static_cast<std::uint32_t>(v.entries_.size())};
    }
    return v;
}

Vocabulary Vocabulary::from_entries(std::vector<std::string> entries) {
    Vocabulary v;
    v.entries_ = std::move(entries);
    std::string current;
    std::uint32_t start = 0;
    for (std::uint32_t i = 0; i < v.entries_.size(); ++i) {
        const auto& label = v.entries_[i];
        const auto eq = label.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::invalid_argument("Vocabulary: malformed entry '" + label + "'");
        if (!v.index_.emplace(label, i).second)
            throw std::invalid_argument("Vocabulary: duplicate entry '" + label + "'");
        const std::string attr = label.substr(0, eq);
        if (attr != current) {
            if (v.ranges_.count(attr))
                throw std::invalid_argument("Vocabulary: entries not attribute-major");
            if (!current.empty()) v.ranges_[current] = {start, i};
            current = attr;
            start = i;
        }
    }
    if (!current.empty())
        v.ranges_[current] = {start, static_cast<std::uint32_t>(v.entries_.size())};
    return v;
}

std::optional<std::uint32_t> Vocabulary::index_of(const std::string& attr,
                                                  const std::string& value) const {
    const auto it = index_.find(attr + "=" + value);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::pair<std::uint32_t, std::uint32_t> Vocabulary::attribute_range(
    const std::string& attr) const {
    const auto it = ranges_.find(attr);
    if (it == ranges_.end()) return {0, 0};
    return it->second;
}

std::vector<std::string> Vocabulary::attribute_names() const {
    std::vector<std::string> names;
    names.reserve(ranges_.size());
    for (const auto& [attr, range] : ranges_) names.push_back(attr);
    return names;
}

FeatureVector encode(const AttributeMap& attrs, const Vocabulary& vocab,
                     EncodeStats* stats) {
    std::vector<std::uint32_t> slots;
    slots.reserve(attrs.size());
    bool oov = false;
    for (const auto& [attr, value] : attrs) {
        if (const auto idx = vocab.index_of(attr, value)) {
            slots.push_back(*idx);
        } else {
            if (stats) ++stats->oov_hits;
            oov = true;
        }
    }
    if (oov) slots.push_back(vocab.oov_index());
    std::sort(slots.begin(), slots.end());
    slots.erase(std::unique(slots.begin(), slots.end()), slots.end());

    FeatureVector fv;
    fv.dimension = vocab.dimension();
    fv.entries.reserve(slots.size());
    for (const auto s : slots) fv.entries.push_back({s, 1.0});
    return fv;
}

}  // namespace bidshade
