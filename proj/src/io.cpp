#include "bidshade/io.hpp"

#include <charconv>
#include <fstream>
#include <system_error>

#include <json.hpp>

#include "bidshade/errors.hpp"

namespace bidshade::io {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw format_error("bad number: '" + std::string(s) + "'");
    return v;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("cannot open: " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

namespace {

constexpr std::uint32_t kLineFormatVersion = 1;

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= line.size()) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            if (start < line.size()) out.push_back(line.substr(start));
            break;
        }
        if (pos > start) out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::pair<std::string_view, std::string_view> key_value(std::string_view token) {
    const auto eq = token.find('=');
    if (eq == std::string_view::npos)
        throw format_error("expected key=value, got '" + std::string(token) + "'");
    return {token.substr(0, eq), token.substr(eq + 1)};
}

// Header: "#bidshade-<kind> v=1 [dim=N]". Unknown versions are rejected.
std::uint32_t parse_header(std::string_view line, std::string_view kind, bool want_dim) {
    const auto tokens = split(line, ' ');
    const std::string expected = "#bidshade-" + std::string(kind);
    if (tokens.empty() || tokens[0] != expected)
        throw format_error("bad header: expected '" + expected + "'");
    std::optional<std::uint32_t> version;
    std::optional<std::uint32_t> dim;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        const auto [k, v] = key_value(tokens[i]);
        if (k == "v")
            version = static_cast<std::uint32_t>(parse_double(v));
        else if (k == "dim")
            dim = static_cast<std::uint32_t>(parse_double(v));
        else
            throw format_error("unknown header field '" + std::string(k) + "'");
    }
    if (!version || *version != kLineFormatVersion)
        throw format_error("unsupported " + std::string(kind) + " version");
    if (want_dim && !dim) throw format_error("header missing dim");
    return want_dim ? *dim : 0;
}

std::string format_features(const FeatureVector& fv) {
    if (fv.entries.empty()) return "-";
    std::string out;
    for (std::size_t i = 0; i < fv.entries.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(fv.entries[i].index);
        out += ':';
        out += format_double(fv.entries[i].value);
    }
    return out;
}

FeatureVector parse_features(std::string_view body, std::uint32_t dimension) {
    FeatureVector fv;
    fv.dimension = dimension;
    if (body == "-") return fv;
    for (const auto part : split(body, ',')) {
        const auto colon = part.find(':');
        if (colon == std::string_view::npos)
            throw format_error("bad feature entry '" + std::string(part) + "'");
        FeatureVector::Entry e;
        e.index = static_cast<std::uint32_t>(parse_double(part.substr(0, colon)));
        e.value = parse_double(part.substr(colon + 1));
        fv.entries.push_back(e);
    }
    fv.validate();
    return fv;
}

}  // namespace

void write_feedback(const std::filesystem::path& path,
                    std::span<const FeedbackRecord> records, std::uint32_t dimension) {
    std::string out = "#bidshade-feedback v=1 dim=" + std::to_string(dimension) + "\n";
    for (const auto& r : records) {
        out += "features=" + format_features(r.features);
        out += " bid=" + format_double(r.bid);
        out += " value=" + format_double(r.value);
        out += r.won ? " won=1" : " won=0";
        if (r.min_bid_to_win) out += " mbtw=" + format_double(*r.min_bid_to_win);
        out += '\n';
    }
    atomic_write(path, out);
}

FeedbackFile read_feedback(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    const auto lines = split(content, '\n');
    if (lines.empty()) throw format_error("empty feedback file: " + path.string());
    FeedbackFile file;
    file.dimension = parse_header(lines[0], "feedback", true);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        FeedbackRecord r;
        bool have_bid = false, have_value = false, have_won = false, have_features = false;
        for (const auto token : split(lines[i], ' ')) {
            const auto [k, v] = key_value(token);
            if (k == "features") {
                r.features = parse_features(v, file.dimension);
                have_features = true;
            } else if (k == "bid") {
                r.bid = parse_double(v);
                have_bid = true;
            } else if (k == "value") {
                r.value = parse_double(v);
                have_value = true;
            } else if (k == "won") {
                if (v != "0" && v != "1") throw format_error("won must be 0 or 1");
                r.won = v == "1";
                have_won = true;
            } else if (k == "mbtw") {
                r.min_bid_to_win = parse_double(v);
            } else {
                throw format_error("unknown feedback field '" + std::string(k) + "'");
            }
        }
        if (!have_features || !have_bid || !have_value || !have_won)
            throw format_error("incomplete feedback line " + std::to_string(i + 1));
        if (!(r.bid > 0.0)) throw format_error("feedback bid must be positive");
        if (!(r.value > 0.0)) throw format_error("feedback value must be positive");
        file.records.push_back(std::move(r));
    }
    return file;
}

void write_requests(const std::filesystem::path& path, std::span<const Request> requests,
                    std::uint32_t dimension) {
    std::string out = "#bidshade-requests v=1 dim=" + std::to_string(dimension) + "\n";
    for (const auto& r : requests) {
        out += "features=" + format_features(r.features);
        out += " value=" + format_double(r.value);
        out += '\n';
    }
    atomic_write(path, out);
}

RequestsFile read_requests(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    const auto lines = split(content, '\n');
    if (lines.empty()) throw format_error("empty requests file: " + path.string());
    RequestsFile file;
    file.dimension = parse_header(lines[0], "requests", true);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        Request r;
        bool have_value = false, have_features = false;
        for (const auto token : split(lines[i], ' ')) {
            const auto [k, v] = key_value(token);
            if (k == "features") {
                r.features = parse_features(v, file.dimension);
                have_features = true;
            } else if (k == "value") {
                r.value = parse_double(v);
                have_value = true;
            } else {
                throw format_error("unknown request field '" + std::string(k) + "'");
            }
        }
        if (!have_features || !have_value)
            throw format_error("incomplete request line " + std::to_string(i + 1));
        if (!(r.value > 0.0)) throw format_error("request value must be positive");
        file.requests.push_back(std::move(r));
    }
    return file;
}

void write_decisions(const std::filesystem::path& path,
                     std::span<const shading::ShadingDecision> decisions) {
    std::string out = "#bidshade-decisions v=1\n";
    for (const auto& d : decisions) {
        out += "bid=" + format_double(d.bid);
        out += " win_rate=" + format_double(d.expected_win_rate);
        out += " surplus=" + format_double(d.expected_surplus);
        out += " iters=" + std::to_string(d.iterations);
        out += '\n';
    }
    atomic_write(path, out);
}

// ---------------------------------------------------------------------------
// Model documents
// ---------------------------------------------------------------------------

namespace {

constexpr int kModelVersion = 1;

json load_json(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    json j = json::parse(content, nullptr, false);
    if (j.is_discarded()) throw format_error("not valid JSON: " + path.string());
    return j;
}

void check_envelope(const json& j, const std::string& format) {
    if (!j.is_object() || j.value("format", "") != format)
        throw format_error("expected a '" + format + "' document");
    if (!j.contains("version") || !j["version"].is_number_integer() ||
        j["version"].get<int>() != kModelVersion)
        throw format_error("unsupported " + format + " version");
}

json linear_to_json(double w0, const std::vector<double>& weights, std::uint32_t dim) {
    return json{{"k", dim}, {"w0", w0}, {"weights", weights}};
}

}  // namespace

void write_model(const std::filesystem::path& path, const PolicyModelFile& model) {
    json j{{"format", "bidshade-model"}, {"version", kModelVersion}, {"policy", model.policy}};
    if (model.wr) {
        j.update(linear_to_json(model.wr->w0, model.wr->weights, model.wr->dimension));
        j["beta"] = model.wr->beta;
        j["currency_scale"] = model.wr->currency_scale;
    }
    if (model.vocabulary) j["vocabulary"] = model.vocabulary->entries();
    if (model.target) j["target"] = *model.target;
    if (model.factor) j["factor"] = *model.factor;
    if (model.dist) {
        j["edges"] = model.dist->edges;
        j["pmf"] = model.dist->pmf;
        j["fallback"] = model.dist_fallback;
    }
    if (model.shading_factor)
        j.update(linear_to_json(model.shading_factor->w0, model.shading_factor->weights,
                                model.shading_factor->dimension));
    if (model.point_estimator) {
        j.update(linear_to_json(model.point_estimator->w0, model.point_estimator->weights,
                                model.point_estimator->dimension));
        j["asymmetry"] = model.point_estimator->asymmetry;
        j["ridge_fallback"] = model.point_estimator->ridge_fallback;
    }
    if (model.segments) {
        json ranges = json::array();
        for (const auto& [a, b] : model.segments->key_ranges) ranges.push_back({a, b});
        j["key_ranges"] = ranges;
        const auto params_json = [](const benchmarks::SegmentParams& p) {
            return json{{"key", p.segment_key}, {"u1", p.u1},   {"u2", p.u2},
                        {"b1", p.b1},           {"cov", p.cov}, {"forgetting", p.forgetting}};
        };
        j["defaults"] = params_json(model.segments->defaults);
        json segs = json::array();
        for (const auto& [key, params] : model.segments->segments) {
            json s = params_json(params);
            s["slots"] = key;
            segs.push_back(std::move(s));
        }
        j["segments"] = std::move(segs);
    }
    atomic_write(path, j.dump(2) + "\n");
}

PolicyModelFile read_model(const std::filesystem::path& path) {
    const json j = load_json(path);
    check_envelope(j, "bidshade-model");
    PolicyModelFile model;
    try {
        model.policy = j.at("policy").get<std::string>();
        if (j.contains("vocabulary"))
            model.vocabulary =
                Vocabulary::from_entries(j["vocabulary"].get<std::vector<std::string>>());

        if (model.policy == "wr" || model.policy == "wr-maintainer") {
            winrate::WinRateModel m;
            m.dimension = j.at("k").get<std::uint32_t>();
            m.w0 = j.at("w0").get<double>();
            m.weights = j.at("weights").get<std::vector<double>>();
            m.beta = j.at("beta").get<double>();
            m.currency_scale = j.at("currency_scale").get<double>();
            m.validate();
            model.wr = std::move(m);
            if (model.policy == "wr-maintainer") model.target = j.at("target").get<double>();
        } else if (model.policy == "fixed") {
            model.factor = j.at("factor").get<double>();
        } else if (model.policy == "mpp") {
            benchmarks::BucketedPriceDistribution d;
            d.edges = j.at("edges").get<std::vector<double>>();
            d.pmf = j.at("pmf").get<std::vector<double>>();
            d.validate();
            model.dist = std::move(d);
            model.dist_fallback = j.value("fallback", false);
        } else if (model.policy == "factor-lr") {
            benchmarks::ShadingFactorModel m;
            m.dimension = j.at("k").get<std::uint32_t>();
            m.w0 = j.at("w0").get<double>();
            m.weights = j.at("weights").get<std::vector<double>>();
            model.shading_factor = std::move(m);
        } else if (model.policy == "point-est") {
            benchmarks::PointEstimatorModel m;
            m.dimension = j.at("k").get<std::uint32_t>();
            m.w0 = j.at("w0").get<double>();
            m.weights = j.at("weights").get<std::vector<double>>();
            m.asymmetry = j.at("asymmetry").get<double>();
            m.ridge_fallback = j.value("ridge_fallback", false);
            model.point_estimator = std::move(m);
        } else if (model.policy == "segment-nl") {
            benchmarks::SegmentModel m;
            for (const auto& r : j.at("key_ranges"))
                m.key_ranges.emplace_back(r.at(0).get<std::uint32_t>(),
                                          r.at(1).get<std::uint32_t>());
            const auto params_from = [](const json& s) {
                benchmarks::SegmentParams p;
                p.segment_key = s.at("key").get<std::vector<std::string>>();
                p.u1 = s.at("u1").get<double>();
                p.u2 = s.at("u2").get<double>();
                p.b1 = s.at("b1").get<double>();
                p.cov = s.at("cov").get<std::array<double, 4>>();
                p.forgetting = s.at("forgetting").get<double>();
                p.validate();
                return p;
            };
            m.defaults = params_from(j.at("defaults"));
            for (const auto& s : j.at("segments"))
                m.segments.emplace(s.at("slots").get<benchmarks::SegmentKey>(), params_from(s));
            model.segments = std::move(m);
        } else {
            throw format_error("unknown policy '" + model.policy + "' in " + path.string());
        }
    } catch (const json::exception& e) {
        throw format_error("malformed model document " + path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw format_error("invalid model document " + path.string() + ": " + e.what());
    }
    return model;
}

}  // namespace bidshade::io
