#pragma once

// Experiment configuration: one `key = value` file with a [section] per
// module, overridable key by key. The hash of the fully resolved settings is
// stamped into every artifact so outputs can be traced to their inputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "rangeface/error.hpp"
#include "rangeface/facegen.hpp"
#include "rangeface/fusion.hpp"
#include "rangeface/normalize.hpp"
#include "rangeface/textio.hpp"

namespace rangeface {

/// Bad configuration keys or values; reported as a usage error.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what, ExitCode::usage) {}
};

struct SynthSettings {
    std::size_t subjects = 100;
    std::uint64_t seed = 1;
    double nominal_d = 60.0;
    double max_rotation_deg = 10.0;
    double max_translation = 30.0;
    double depth_noise = 0.005;  // units of d
    double landmark_noise = 0.01;  // units of d
    double color_noise = 0.01;
    double color_gain = 0.03;
    int voids = 2;
    double void_radius = 0.15;  // units of d
    double gallery_subsample = 1.0;
    double probe_subsample = 0.8;
    double position_quantum = 1e-4;
    double color_quantum = 1e-4;
};

struct Config {
    SynthSettings synth;
    GridConfig grid;
    bool crop = true;
    std::size_t max_components = 0;
    double eigenvalue_floor = 1e-10;
    NormalizationScope scope = NormalizationScope::global;
    bool image_standardize = true;
    bool allow_signed_product = false;
    double far_target = 0.01;
    std::size_t chart_max_rank = 20;
};

namespace detail {

struct Setting {
    std::string key;  // "section.name"
    std::function<void(std::string_view)> set;
    std::function<std::string()> get;
};

inline double to_double(std::string_view key, std::string_view v) {
    double out = 0;
    if (!textio::parse_double(v, out) || !std::isfinite(out))
        throw ConfigError("config " + std::string(key) + ": expected a number, got '" + std::string(v) + "'");
    return out;
}

inline std::uint64_t to_u64(std::string_view key, std::string_view v) {
    std::uint64_t out = 0;
    if (!textio::parse_u64(v, out))
        throw ConfigError("config " + std::string(key) + ": expected a non-negative integer, got '" + std::string(v) + "'");
    return out;
}

inline bool to_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config " + std::string(key) + ": expected true or false, got '" + std::string(v) + "'");
}

inline std::vector<Setting> settings(Config& c) {
    std::vector<Setting> s;
    auto num = [&s](std::string key, double& field) {
        s.push_back({key, [&field, key](std::string_view v) { field = to_double(key, v); },
                     [&field] { return textio::fmt(field); }});
    };
    auto count = [&s](std::string key, auto& field) {
        s.push_back({key,
                     [&field, key](std::string_view v) {
                         field = static_cast<std::remove_reference_t<decltype(field)>>(to_u64(key, v));
                     },
                     [&field] { return std::to_string(field); }});
    };
    auto flag = [&s](std::string key, bool& field) {
        s.push_back({key, [&field, key](std::string_view v) { field = to_bool(key, v); },
                     [&field] { return std::string(field ? "true" : "false"); }});
    };
    count("synth.subjects", c.synth.subjects);
    count("synth.seed", c.synth.seed);
    num("synth.nominal_d", c.synth.nominal_d);
    num("synth.max_rotation_deg", c.synth.max_rotation_deg);
    num("synth.max_translation", c.synth.max_translation);
    num("synth.depth_noise", c.synth.depth_noise);
    num("synth.landmark_noise", c.synth.landmark_noise);
    num("synth.color_noise", c.synth.color_noise);
    num("synth.color_gain", c.synth.color_gain);
    count("synth.voids", c.synth.voids);
    num("synth.void_radius", c.synth.void_radius);
    num("synth.gallery_subsample", c.synth.gallery_subsample);
    num("synth.probe_subsample", c.synth.probe_subsample);
    num("synth.position_quantum", c.synth.position_quantum);
    num("synth.color_quantum", c.synth.color_quantum);
    count("normalize.resolution", c.grid.resolution);
    num("normalize.x_half_extent", c.grid.x_half_extent);
    num("normalize.y_below", c.grid.y_below);
    num("normalize.y_above", c.grid.y_above);
    s.push_back({"normalize.color_mode",
                 [&c](std::string_view v) {
                     if (v == "luminance") c.grid.color_mode = ColorMode::luminance;
                     else if (v == "rgb") c.grid.color_mode = ColorMode::rgb;
                     else throw ConfigError("config normalize.color_mode: expected luminance or rgb");
                 },
                 [&c] { return std::string(c.grid.color_mode == ColorMode::rgb ? "rgb" : "luminance"); }});
    flag("normalize.crop", c.crop);
    count("subspace.max_components", c.max_components);
    num("subspace.eigenvalue_floor", c.eigenvalue_floor);
    s.push_back({"fusion.scope",
                 [&c](std::string_view v) {
                     if (v == "global") c.scope = NormalizationScope::global;
                     else if (v == "per_probe") c.scope = NormalizationScope::per_probe;
                     else throw ConfigError("config fusion.scope: expected global or per_probe");
                 },
                 [&c] { return std::string(c.scope == NormalizationScope::global ? "global" : "per_probe"); }});
    flag("fusion.image_standardize", c.image_standardize);
    flag("fusion.allow_signed_product", c.allow_signed_product);
    num("eval.far", c.far_target);
    count("eval.chart_max_rank", c.chart_max_rank);
    return s;
}

}  // namespace detail

/// Applies one `section.key = value` assignment.
inline void set_option(Config& c, std::string_view key, std::string_view value) {
    for (auto& s : detail::settings(c))
        if (s.key == key) {
            s.set(textio::trim(value));
            return;
        }
    throw ConfigError("unknown config key '" + std::string(key) + "'");
}

/// Applies a `section.key=value` override as given on the command line.
inline void apply_override(Config& c, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ConfigError("override must look like section.key=value");
    set_option(c, textio::trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

/// Reads `[section]` headers and `key = value` lines on top of `c`.
inline void apply_config_text(Config& c, std::string_view text) {
    textio::LineReader reader(text);
    std::string_view line;
    std::string section;
    while (reader.next(line)) {
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) throw ConfigError("malformed section header, line " + std::to_string(reader.line_no()));
            section = std::string(textio::trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected key = value, line " + std::to_string(reader.line_no()));
        if (section.empty()) throw ConfigError("key outside any [section], line " + std::to_string(reader.line_no()));
        const std::string key = section + "." + std::string(textio::trim(line.substr(0, eq)));
        try {
            set_option(c, key, line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(e.what()) + ", line " + std::to_string(reader.line_no()));
        }
    }
}

inline void validate(const Config& c) {
    c.grid.validate();
    const auto& s = c.synth;
    if (s.subjects < 2) throw ConfigError("synth.subjects must be >= 2");
    if (!(s.nominal_d > 0)) throw ConfigError("synth.nominal_d must be > 0");
    for (double f : {s.gallery_subsample, s.probe_subsample})
        if (!(f > 0 && f <= 1)) throw ConfigError("subsample fractions must lie in (0, 1]");
    for (double v : {s.max_rotation_deg, s.max_translation, s.depth_noise, s.landmark_noise, s.color_noise, s.color_gain,
                     s.void_radius, s.position_quantum, s.color_quantum})
        if (v < 0) throw ConfigError("synth noise, motion and quantum settings must be >= 0");
    if (!(c.eigenvalue_floor >= 0 && c.eigenvalue_floor < 1)) throw ConfigError("subspace.eigenvalue_floor must lie in [0, 1)");
    if (!(c.far_target > 0 && c.far_target <= 1)) throw ConfigError("eval.far must lie in (0, 1]");
}

/// Every resolved setting as sorted `section.key = value` lines; parsing this
/// text back reproduces the configuration.
inline std::string dump_config(const Config& c) {
    Config copy = c;
    auto all = detail::settings(copy);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
    std::string out, section;
    for (const auto& s : all) {
        const auto dot = s.key.find('.');
        const std::string sec = s.key.substr(0, dot);
        if (sec != section) {
            out += (out.empty() ? "[" : "\n[") + sec + "]\n";
            section = sec;
        }
        out += s.key.substr(dot + 1) + " = " + s.get() + "\n";
    }
    return out;
}

inline std::string config_hash(const Config& c) { return textio::hex64(textio::fnv1a(dump_config(c))); }

inline CaptureParams gallery_capture(const Config& c) {
    CaptureParams p;
    p.seed = splitmix64(c.synth.seed ^ 0x67616c6cULL);
    p.max_rotation_deg = c.synth.max_rotation_deg;
    p.max_translation = c.synth.max_translation;
    p.subsample_fraction = c.synth.gallery_subsample;
    p.void_count = c.synth.voids;
    p.void_radius = c.synth.void_radius;
    p.depth_noise = c.synth.depth_noise;
    p.color_noise = c.synth.color_noise;
    p.color_gain = c.synth.color_gain;
    p.landmark_noise = c.synth.landmark_noise;
    p.position_quantum = c.synth.position_quantum;
    p.color_quantum = c.synth.color_quantum;
    return p;
}

inline CaptureParams probe_capture(const Config& c) {
    CaptureParams p = gallery_capture(c);
    p.seed = splitmix64(c.synth.seed ^ 0x70726f62ULL);
    p.subsample_fraction = c.synth.probe_subsample;
    return p;
}

}  // namespace rangeface
