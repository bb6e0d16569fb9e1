#pragma once

// JSON experiment configuration, its canonical hash and the run manifest.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lowmach/error.hpp"
#include "lowmach/limitlab.hpp"

namespace lowmach {

using json = nlohmann::json;

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

}  // namespace detail

inline json to_json(const SweepConfig& c) {
    json masses = json::array();
    for (const auto& m : c.masses) masses.push_back({{"x", m.x}, {"y", m.y}, {"mass", m.mass}});
    const auto& d = c.data;
    return {{"grid", {{"n", c.n}, {"length", c.length}}},
            {"model", {{"name", c.model}, {"radiation", c.radiation}}},
            {"scaling", {{"a", c.a_exp_visc}, {"b", c.b_exp_heat}, {"eps", c.eps_list}}},
            {"eta", c.eta_list},
            {"masses", masses},
            {"data",
             {{"preset", d.kind}, {"cx", d.cx}, {"cy", d.cy}, {"theta_amp", d.theta_amp}, {"width", d.width}, {"imbalance", d.imbalance},
              {"swirl", d.swirl}, {"gradient", d.gradient}, {"flow_width", d.flow_width}, {"noise", d.noise}}},
            {"window", {{"half", c.window_half}}},
            {"horizon", c.horizon},
            {"samples", c.samples},
            {"measure_from", c.measure_from},
            {"numerics",
             {{"acoustic_cfl", c.acoustic_cfl}, {"advective_cfl", c.advective_cfl}, {"sponge_width", c.sponge_width},
              {"sponge_rate", c.sponge_rate}}},
            {"output", {{"checkpoint_every", c.checkpoint_every}}},
            {"seed", c.seed}};
}

/// Missing keys keep their defaults; unknown keys are errors.
inline SweepConfig sweep_config_from_json(const json& j) {
    using detail::read_opt;
    detail::reject_unknown(j, {"grid", "model", "scaling", "eta", "masses", "data", "window", "horizon", "samples", "measure_from",
                               "numerics", "output", "seed"},
                           "config");
    SweepConfig c;
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        detail::reject_unknown(g, {"n", "length"}, "grid");
        read_opt(g, "n", c.n);
        read_opt(g, "length", c.length);
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        if (m.is_string()) {
            c.model = m.get<std::string>();
        } else {
            detail::reject_unknown(m, {"name", "radiation"}, "model");
            read_opt(m, "name", c.model);
            read_opt(m, "radiation", c.radiation);
        }
    }
    if (j.contains("scaling")) {
        const auto& s = j["scaling"];
        detail::reject_unknown(s, {"a", "b", "eps"}, "scaling");
        read_opt(s, "a", c.a_exp_visc);
        read_opt(s, "b", c.b_exp_heat);
        read_opt(s, "eps", c.eps_list);
    }
    read_opt(j, "eta", c.eta_list);
    if (j.contains("masses")) {
        if (!j["masses"].is_array()) throw ConfigError("masses must be an array");
        c.masses.clear();
        for (const auto& m : j["masses"]) {
            detail::reject_unknown(m, {"x", "y", "mass"}, "mass entry");
            PointMass pm;
            read_opt(m, "x", pm.x);
            read_opt(m, "y", pm.y);
            read_opt(m, "mass", pm.mass);
            c.masses.push_back(pm);
        }
    }
    if (j.contains("data")) {
        const auto& d = j["data"];
        detail::reject_unknown(d, {"preset", "cx", "cy", "theta_amp", "width", "imbalance", "swirl", "gradient", "flow_width", "noise"},
                               "data");
        read_opt(d, "preset", c.data.kind);
        read_opt(d, "cx", c.data.cx);
        read_opt(d, "cy", c.data.cy);
        read_opt(d, "theta_amp", c.data.theta_amp);
        read_opt(d, "width", c.data.width);
        read_opt(d, "imbalance", c.data.imbalance);
        read_opt(d, "swirl", c.data.swirl);
        read_opt(d, "gradient", c.data.gradient);
        read_opt(d, "flow_width", c.data.flow_width);
        read_opt(d, "noise", c.data.noise);
    }
    if (j.contains("window")) {
        detail::reject_unknown(j["window"], {"half"}, "window");
        read_opt(j["window"], "half", c.window_half);
    }
    read_opt(j, "horizon", c.horizon);
    read_opt(j, "samples", c.samples);
    read_opt(j, "measure_from", c.measure_from);
    if (j.contains("numerics")) {
        const auto& n = j["numerics"];
        detail::reject_unknown(n, {"acoustic_cfl", "advective_cfl", "sponge_width", "sponge_rate"}, "numerics");
        read_opt(n, "acoustic_cfl", c.acoustic_cfl);
        read_opt(n, "advective_cfl", c.advective_cfl);
        read_opt(n, "sponge_width", c.sponge_width);
        read_opt(n, "sponge_rate", c.sponge_rate);
    }
    if (j.contains("output")) {
        detail::reject_unknown(j["output"], {"checkpoint_every"}, "output");
        read_opt(j["output"], "checkpoint_every", c.checkpoint_every);
    }
    read_opt(j, "seed", c.seed);
    c.validate();
    return c;
}

inline SweepConfig load_sweep_config(const std::filesystem::path& p) {
    std::ifstream is(p);
    if (!is) throw ConfigError("cannot open config " + p.string());
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + p.string() + ": " + e.what());
    }
    return sweep_config_from_json(j);
}

/// FNV-1a over the canonical dump of the normalized config.
inline std::string config_hash(const SweepConfig& c) {
    const std::string s = to_json(c).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

inline void write_manifest(const std::filesystem::path& dir, const std::string& command, const SweepConfig& c, const json& extra = {}) {
    std::filesystem::create_directories(dir);
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::ostringstream ts;
    ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
    json m{{"command", command}, {"config_hash", config_hash(c)}, {"config", to_json(c)}, {"created", ts.str()}};
    if (!extra.is_null()) m["outputs"] = extra;
    std::ofstream os(dir / "manifest.json");
    if (!os) throw ConfigError("cannot write manifest in " + dir.string());
    os << m.dump(2) << '\n';
}

inline json read_manifest(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw ConfigError("no manifest in " + dir.string());
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("bad manifest: ") + e.what());
    }
}

}  // namespace lowmach
