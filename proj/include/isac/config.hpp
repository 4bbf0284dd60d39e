// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace isac {

/// How historical angle estimates are generated.
///   relative: theta_hat = theta * (1 + e), e ~ N(0, obs_rel_mse)
///   crlb:     theta_hat = theta + N(0, CRLB_theta(theta, w))
enum class ThetaMode { relative, crlb };

inline std::string to_string(ThetaMode m) { return m == ThetaMode::relative ? "relative" : "crlb"; }

inline ThetaMode theta_mode_from_string(std::string_view s)
{
    if (s == "relative") return ThetaMode::relative;
    if (s == "crlb") return ThetaMode::crlb;
    throw std::invalid_argument("unknown theta mode '" + std::string(s) + "' (expected relative|crlb)");
}

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Physical, scenario and optimization constants. Defaults reproduce the
/// reference scenario: 32x32 ULA at 30 GHz serving three vehicles on a road
/// 20 m from the RSU.
struct SimConfig {
    // array / users
    int n_tx = 32;
    int n_rx = 32;
    int n_vehicles = 3;

    // propagation
    double carrier_hz = 30e9;
    double wave_speed = 3e8;
    double noise_rsu = 1e-11;     // sigma_z^2 [W], -80 dBm
    double noise_vehicle = 1e-11; // sigma_k^2 [W]
    std::complex<double> rcs_coeff{10.0, 10.0};
    double mf_gain = 10.0;
    double rho_nu = 2.0e-6;
    double rho_mu = 2.0e-6;
    double echo_noise = 0.0; // sigma_r^2 override [W]; 0 selects mf_gain * noise_rsu
    double pathloss_ref = 1e-7;
    double ref_dist = 1.0;
    double pathloss_exp = 2.55;

    // mobility
    double slot_dur = 0.02;
    double v_min = 8.0;
    double v_max = 8.25;
    double road_y = 20.0;
    double anchor_x0 = 15.0;
    double anchor_spacing = 10.0;
    double position_jitter = 1.0; // std of the N(0, s^2) offsets on the initial anchors

    // problem
    double gamma_theta = 0.01;
    double gamma_d = 0.01;
    double power_budget = 1.0;
    double lambda1 = 1e3;
    double lambda2 = 1e3;
    double lambda3 = 1e3;
    double crlb_cap_factor = 1e6; // unobservable CRLBs are clamped to cap_factor * gamma

    // protocol
    int history_len = 5;
    int episode_slots = 50;
    double obs_rel_mse = 0.01;
    ThetaMode theta_mode = ThetaMode::relative;
    std::uint64_t rng_seed = 1;

    [[nodiscard]] double echo_noise_var() const { return echo_noise > 0.0 ? echo_noise : mf_gain * noise_rsu; }
    [[nodiscard]] double crlb_theta_cap() const { return crlb_cap_factor * gamma_theta; }
    [[nodiscard]] double crlb_d_cap() const { return crlb_cap_factor * gamma_d; }

    void validate() const
    {
        auto require = [](bool ok, const char* what) {
            if (!ok) throw ConfigError(std::string("invalid configuration: ") + what);
        };
        require(n_tx >= 1 && n_rx >= 1, "n_tx and n_rx must be >= 1");
        require(n_vehicles >= 1, "n_vehicles must be >= 1");
        require(history_len >= 1, "history_len must be >= 1");
        require(episode_slots >= 1, "episode_slots must be >= 1");
        require(v_min <= v_max && v_min >= 0.0, "need 0 <= v_min <= v_max");
        require(carrier_hz > 0.0 && wave_speed > 0.0, "carrier_hz and wave_speed must be > 0");
        require(noise_rsu > 0.0 && noise_vehicle > 0.0, "noise powers must be > 0");
        require(echo_noise >= 0.0, "echo_noise must be >= 0");
        require(mf_gain > 0.0, "mf_gain must be > 0");
        require(rho_nu >= 0.0 && rho_mu >= 0.0, "rho_nu and rho_mu must be >= 0");
        require(pathloss_ref > 0.0 && ref_dist > 0.0 && pathloss_exp >= 0.0, "path loss parameters out of range");
        require(slot_dur > 0.0, "slot_dur must be > 0");
        require(gamma_theta > 0.0 && gamma_d > 0.0, "CRLB thresholds must be > 0");
        require(power_budget >= 0.0, "power_budget must be >= 0");
        require(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda3 >= 0.0, "penalties must be >= 0");
        require(crlb_cap_factor > 0.0, "crlb_cap_factor must be > 0");
        require(obs_rel_mse >= 0.0, "obs_rel_mse must be >= 0");
        require(position_jitter >= 0.0, "position_jitter must be >= 0");
    }
};

namespace detail {

inline std::string trim(std::string_view s)
{
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline double parse_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
}

inline std::int64_t parse_int(const std::string& key, const std::string& v)
{
    std::int64_t x = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    return x;
}

inline std::string format_double(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct ConfigKey {
    const char* name;
    std::function<std::string(const SimConfig&)> get;
    std::function<void(SimConfig&, const std::string&)> set;
};

template <class T>
ConfigKey real_key(const char* name, T SimConfig::*member)
{
    return {name, [member](const SimConfig& c) { return format_double(c.*member); },
            [member, name](SimConfig& c, const std::string& v) { c.*member = parse_double(name, v); }};
}

template <class T>
ConfigKey int_key(const char* name, T SimConfig::*member)
{
    return {name, [member](const SimConfig& c) { return std::to_string(c.*member); },
            [member, name](SimConfig& c, const std::string& v) {
                auto x = parse_int(name, v);
                if constexpr (std::is_unsigned_v<T>) {
                    if (x < 0) throw ConfigError(std::string("key '") + name + "' must be non-negative");
                }
                c.*member = static_cast<T>(x);
            }};
}

inline const std::vector<ConfigKey>& config_keys()
{
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> k;
        k.push_back(int_key("n_tx", &SimConfig::n_tx));
        k.push_back(int_key("n_rx", &SimConfig::n_rx));
        k.push_back(int_key("n_vehicles", &SimConfig::n_vehicles));
        k.push_back(real_key("carrier_hz", &SimConfig::carrier_hz));
        k.push_back(real_key("wave_speed", &SimConfig::wave_speed));
        k.push_back(real_key("noise_rsu", &SimConfig::noise_rsu));
        k.push_back(real_key("noise_vehicle", &SimConfig::noise_vehicle));
        k.push_back({"rcs_re", [](const SimConfig& c) { return format_double(c.rcs_coeff.real()); },
                     [](SimConfig& c, const std::string& v) { c.rcs_coeff.real(parse_double("rcs_re", v)); }});
        k.push_back({"rcs_im", [](const SimConfig& c) { return format_double(c.rcs_coeff.imag()); },
                     [](SimConfig& c, const std::string& v) { c.rcs_coeff.imag(parse_double("rcs_im", v)); }});
        k.push_back(real_key("mf_gain", &SimConfig::mf_gain));
        k.push_back(real_key("rho_nu", &SimConfig::rho_nu));
        k.push_back(real_key("rho_mu", &SimConfig::rho_mu));
        k.push_back(real_key("echo_noise", &SimConfig::echo_noise));
        k.push_back(real_key("pathloss_ref", &SimConfig::pathloss_ref));
        k.push_back(real_key("ref_dist", &SimConfig::ref_dist));
        k.push_back(real_key("pathloss_exp", &SimConfig::pathloss_exp));
        k.push_back(real_key("slot_dur", &SimConfig::slot_dur));
        k.push_back(real_key("v_min", &SimConfig::v_min));
        k.push_back(real_key("v_max", &SimConfig::v_max));
        k.push_back(real_key("road_y", &SimConfig::road_y));
        k.push_back(real_key("anchor_x0", &SimConfig::anchor_x0));
        k.push_back(real_key("anchor_spacing", &SimConfig::anchor_spacing));
        k.push_back(real_key("position_jitter", &SimConfig::position_jitter));
        k.push_back(real_key("gamma_theta", &SimConfig::gamma_theta));
        k.push_back(real_key("gamma_d", &SimConfig::gamma_d));
        k.push_back(real_key("power_budget", &SimConfig::power_budget));
        k.push_back(real_key("lambda1", &SimConfig::lambda1));
        k.push_back(real_key("lambda2", &SimConfig::lambda2));
        k.push_back(real_key("lambda3", &SimConfig::lambda3));
        k.push_back(real_key("crlb_cap_factor", &SimConfig::crlb_cap_factor));
        k.push_back(int_key("history_len", &SimConfig::history_len));
        k.push_back(int_key("episode_slots", &SimConfig::episode_slots));
        k.push_back(real_key("obs_rel_mse", &SimConfig::obs_rel_mse));
        k.push_back({"theta_mode", [](const SimConfig& c) { return to_string(c.theta_mode); },
                     [](SimConfig& c, const std::string& v) {
                         try {
                             c.theta_mode = theta_mode_from_string(v);
                         } catch (const std::invalid_argument& e) {
                             throw ConfigError(e.what());
                         }
                     }});
        k.push_back(int_key("rng_seed", &SimConfig::rng_seed));
        return k;
    }();
    return keys;
}

} // namespace detail

/// Names of every settable configuration key, in echo order.
inline std::vector<std::string> config_key_names()
{
    std::vector<std::string> out;
    for (const auto& k : detail::config_keys()) out.emplace_back(k.name);
    return out;
}

/// Set one key from its textual value. Unknown keys throw ConfigError.
inline void set_config_value(SimConfig& cfg, std::string_view key, const std::string& value)
{
    for (const auto& k : detail::config_keys()) {
        if (key == k.name) {
            k.set(cfg, value);
            return;
        }
    }
    throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

inline std::string get_config_value(const SimConfig& cfg, std::string_view key)
{
    for (const auto& k : detail::config_keys())
        if (key == k.name) return k.get(cfg);
    throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

/// Full effective configuration as ordered (key, value) pairs. Values are
/// printed with 17 significant digits so they parse back bit-exactly.
inline std::vector<std::pair<std::string, std::string>> config_echo(const SimConfig& cfg)
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : detail::config_keys()) out.emplace_back(k.name, k.get(cfg));
    return out;
}

/// Apply a "key=value" override.
inline void apply_override(SimConfig& cfg, std::string_view assignment)
{
    auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
    set_config_value(cfg, detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
}

/// Parse the key-value config format:
///
///     # comment            ; also a comment
///     [array]
///     n_tx = 32
///
/// Section headers only group keys; every key name is global. Inline
/// comments are not supported.
inline SimConfig parse_config_text(std::string_view text, SimConfig cfg = {})
{
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto s = detail::trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            continue;
        }
        if (s.find('=') == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        try {
            apply_override(cfg, s);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

inline SimConfig load_config_file(const std::string& path, SimConfig cfg = {})
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config_text(ss.str(), cfg);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

} // namespace isac
