// SPDX-License-Identifier: Apache-2.0
#pragma once

// Binary container shared by model and dataset files.
//
//   offset 0   8 bytes   magic "ISACBF01"
//   offset 8   u64 LE    H, header length in bytes
//   offset 16  H bytes   UTF-8 text, one "key=value" per line
//   16+H       u64 LE    N, payload length in doubles
//   24+H       N x f64   payload, IEEE-754 binary64 little-endian
//
// Header keys common to all kinds: kind, format_version. The run
// configuration is echoed under "config.<key>".

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "isac/baselines.hpp"
#include "isac/channel.hpp"
#include "isac/config.hpp"
#include "isac/nn/data.hpp"
#include "isac/nn/hcl_net.hpp"

namespace isac::io {

inline constexpr char kMagic[8] = {'I', 'S', 'A', 'C', 'B', 'F', '0', '1'};

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Header = std::vector<std::pair<std::string, std::string>>;

struct Container {
    Header header;
    std::vector<double> payload;

    [[nodiscard]] const std::string& get(const std::string& key) const
    {
        for (const auto& [k, v] : header)
            if (k == key) return v;
        throw FormatError("missing header key '" + key + "'");
    }
    [[nodiscard]] bool has(const std::string& key) const
    {
        for (const auto& kv : header)
            if (kv.first == key) return true;
        return false;
    }
    [[nodiscard]] double get_double(const std::string& key) const { return isac::detail::parse_double(key, get(key)); }
    [[nodiscard]] long long get_int(const std::string& key) const { return isac::detail::parse_int(key, get(key)); }
};

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint64_t get_u64(const std::string& in, std::size_t at)
{
    if (at + 8 > in.size()) throw FormatError("truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}

inline std::string read_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

inline std::string join(const Eigen::VectorXd& v)
{
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += isac::detail::format_double(v[i]);
    }
    return s;
}

inline Eigen::VectorXd split(const std::string& key, const std::string& s)
{
    std::vector<double> xs;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) xs.push_back(isac::detail::parse_double(key, item));
    return Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

} // namespace detail

inline std::string serialize(const Container& c)
{
    std::string text;
    for (const auto& [k, v] : c.header) {
        if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
            throw std::invalid_argument("header entry '" + k + "' contains a reserved character");
        text += k + "=" + v + "\n";
    }
    std::string out(kMagic, kMagic + 8);
    detail::put_u64(out, text.size());
    out += text;
    detail::put_u64(out, c.payload.size());
    for (double x : c.payload) detail::put_u64(out, std::bit_cast<std::uint64_t>(x));
    return out;
}

inline Container deserialize(const std::string& bytes)
{
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) throw FormatError("bad magic");
    const std::uint64_t H = detail::get_u64(bytes, 8);
    if (16 + H > bytes.size()) throw FormatError("truncated header");
    Container c;
    std::stringstream ss(bytes.substr(16, H));
    std::string line;
    while (std::getline(ss, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("malformed header line '" + line + "'");
        c.header.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }
    const std::size_t at = 16 + H;
    const std::uint64_t N = detail::get_u64(bytes, at);
    if (bytes.size() != at + 8 + 8 * N) throw FormatError("payload length does not match file size");
    c.payload.resize(N);
    for (std::uint64_t i = 0; i < N; ++i) c.payload[i] = std::bit_cast<double>(detail::get_u64(bytes, at + 8 + 8 * i));
    return c;
}

inline void write_container(const std::string& path, const Container& c) { detail::write_file(path, serialize(c)); }

inline Container read_container(const std::string& path)
{
    try {
        return deserialize(detail::read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline void echo_config(Header& h, const SimConfig& cfg)
{
    for (auto& [k, v] : config_echo(cfg)) h.emplace_back("config." + k, v);
}

/// Rebuilds a configuration from the "config.*" entries of a header.
inline SimConfig config_from_header(const Container& c)
{
    SimConfig cfg;
    for (const auto& [k, v] : c.header)
        if (k.rfind("config.", 0) == 0) set_config_value(cfg, k.substr(7), v);
    return cfg;
}

// ---- models ----------------------------------------------------------------

inline Container model_container(const nn::HclNet& net, const SimConfig& cfg, double p_train)
{
    Container c;
    const auto& s = net.shape();
    c.header = {{"kind", "hcl_net"},
                {"format_version", "1"},
                {"n_vehicles", std::to_string(s.n_vehicles)},
                {"n_antennas", std::to_string(s.n_antennas)},
                {"history_len", std::to_string(s.history_len)},
                {"filters", std::to_string(s.filters)},
                {"hidden", std::to_string(s.hidden)},
                {"kappa", isac::detail::format_double(net.kappa())},
                {"p_train", isac::detail::format_double(p_train)},
                {"param_count", std::to_string(net.params().size())}};
    echo_config(c.header, cfg);
    const auto& p = net.params().flat_view();
    c.payload.assign(p.data(), p.data() + p.size());
    return c;
}

inline Container model_container(const NaiveNet& net, const SimConfig& cfg, double p_train)
{
    Container c;
    c.header = {{"kind", "naive_dl"},
                {"format_version", "1"},
                {"n_vehicles", std::to_string(net.n_vehicles())},
                {"n_antennas", std::to_string(net.n_antennas())},
                {"hidden", std::to_string(net.hidden())},
                {"input_shift", detail::join(net.shift())},
                {"input_scale", detail::join(net.scale())},
                {"p_train", isac::detail::format_double(p_train)},
                {"param_count", std::to_string(net.params().size())}};
    echo_config(c.header, cfg);
    const auto& p = net.params().flat_view();
    c.payload.assign(p.data(), p.data() + p.size());
    return c;
}

template <class Net>
void save_model(const std::string& path, const Net& net, const SimConfig& cfg, double p_train)
{
    write_container(path, model_container(net, cfg, p_train));
}

struct LoadedHcl {
    nn::HclNet net;
    double p_train = 0.0;
    SimConfig cfg;
};

struct LoadedNaive {
    NaiveNet net;
    double p_train = 0.0;
    SimConfig cfg;
};

namespace detail {
inline void check_payload(const Container& c, Eigen::Index expected)
{
    if (static_cast<Eigen::Index>(c.payload.size()) != expected || c.get_int("param_count") != expected)
        throw FormatError("parameter count " + std::to_string(c.payload.size()) + " does not match the declared shapes (" +
                          std::to_string(expected) + ")");
}
inline void check_kind(const Container& c, const std::string& kind)
{
    if (c.get("kind") != kind) throw FormatError("expected a '" + kind + "' file, found '" + c.get("kind") + "'");
}
} // namespace detail

inline LoadedHcl load_hcl(const std::string& path)
{
    Container c = read_container(path);
    try {
        detail::check_kind(c, "hcl_net");
        nn::HclShape s;
        s.n_vehicles = static_cast<int>(c.get_int("n_vehicles"));
        s.n_antennas = static_cast<int>(c.get_int("n_antennas"));
        s.history_len = static_cast<int>(c.get_int("history_len"));
        s.filters = static_cast<int>(c.get_int("filters"));
        s.hidden = static_cast<int>(c.get_int("hidden"));
        s.validate();
        nn::HclNet net(s, c.get_double("kappa"));
        detail::check_payload(c, net.params().size());
        net.params().flat_view() = Eigen::Map<const Eigen::VectorXd>(c.payload.data(), net.params().size());
        return {std::move(net), c.get_double("p_train"), config_from_header(c)};
    } catch (const std::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
}

inline LoadedNaive load_naive(const std::string& path)
{
    Container c = read_container(path);
    try {
        detail::check_kind(c, "naive_dl");
        NaiveNet net(static_cast<int>(c.get_int("n_vehicles")), static_cast<int>(c.get_int("n_antennas")),
                     static_cast<int>(c.get_int("hidden")));
        detail::check_payload(c, net.params().size());
        net.params().flat_view() = Eigen::Map<const Eigen::VectorXd>(c.payload.data(), net.params().size());
        net.set_normalization(detail::split("input_shift", c.get("input_shift")),
                              detail::split("input_scale", c.get("input_scale")));
        return {std::move(net), c.get_double("p_train"), config_from_header(c)};
    } catch (const std::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
}

// ---- datasets ----------------------------------------------------------------
//
// Payload per example: for each of the tau history slots, the estimated
// channel (N_t x K, column-major, interleaved Re/Im) followed by the K angle
// and K range estimates; then the K true angles and K true ranges. True
// channels are rebuilt from the true geometry on load.

inline Container dataset_container(const std::vector<nn::TrainingExample>& data, const SimConfig& cfg)
{
    Container c;
    c.header = {{"kind", "dataset"},
                {"format_version", "1"},
                {"n_examples", std::to_string(data.size())},
                {"n_vehicles", std::to_string(cfg.n_vehicles)},
                {"n_antennas", std::to_string(cfg.n_tx)},
                {"history_len", std::to_string(cfg.history_len)}};
    echo_config(c.header, cfg);
    for (const auto& ex : data) {
        if (ex.history.length() != cfg.history_len || ex.history.n_vehicles() != cfg.n_vehicles ||
            ex.history.n_antennas() != cfg.n_tx)
            throw std::invalid_argument("dataset_container: example shape does not match the configuration");
        for (int t = 0; t < cfg.history_len; ++t) {
            const auto ti = static_cast<std::size_t>(t);
            const auto& H = ex.history.slots[ti];
            for (Eigen::Index k = 0; k < H.cols(); ++k)
                for (Eigen::Index m = 0; m < H.rows(); ++m) {
                    c.payload.push_back(H(m, k).real());
                    c.payload.push_back(H(m, k).imag());
                }
            for (int k = 0; k < cfg.n_vehicles; ++k) c.payload.push_back(ex.history.theta_hat[ti][k]);
            for (int k = 0; k < cfg.n_vehicles; ++k) c.payload.push_back(ex.history.d_hat[ti][k]);
        }
        for (int k = 0; k < cfg.n_vehicles; ++k) c.payload.push_back(ex.true_thetas[k]);
        for (int k = 0; k < cfg.n_vehicles; ++k) c.payload.push_back(ex.true_dists[k]);
    }
    return c;
}

inline std::uint64_t dataset_hash(const std::vector<nn::TrainingExample>& data, const SimConfig& cfg)
{
    return fnv1a(serialize(dataset_container(data, cfg)));
}

inline void save_dataset(const std::string& path, const std::vector<nn::TrainingExample>& data, const SimConfig& cfg)
{
    write_container(path, dataset_container(data, cfg));
}

struct LoadedDataset {
    std::vector<nn::TrainingExample> examples;
    SimConfig cfg;
};

inline LoadedDataset load_dataset(const std::string& path)
{
    Container c = read_container(path);
    LoadedDataset out;
    try {
        detail::check_kind(c, "dataset");
        out.cfg = config_from_header(c);
        const auto n = static_cast<std::size_t>(c.get_int("n_examples"));
        const int K = static_cast<int>(c.get_int("n_vehicles")), M = static_cast<int>(c.get_int("n_antennas"));
        const int T = static_cast<int>(c.get_int("history_len"));
        const std::size_t per = static_cast<std::size_t>(T) * (2 * M * K + 2 * K) + 2 * static_cast<std::size_t>(K);
        if (c.payload.size() != n * per) throw FormatError("payload length does not match the declared shapes");
        std::size_t i = 0;
        out.examples.resize(n);
        for (auto& ex : out.examples) {
            for (int t = 0; t < T; ++t) {
                ChannelMatrix H(M, K);
                for (int k = 0; k < K; ++k)
                    for (int m = 0; m < M; ++m, i += 2) H(m, k) = cplx(c.payload[i], c.payload[i + 1]);
                Eigen::VectorXd th(K), d(K);
                for (int k = 0; k < K; ++k) th[k] = c.payload[i++];
                for (int k = 0; k < K; ++k) d[k] = c.payload[i++];
                ex.history.slots.push_back(std::move(H));
                ex.history.theta_hat.push_back(std::move(th));
                ex.history.d_hat.push_back(std::move(d));
            }
            ex.true_thetas.resize(K);
            ex.true_dists.resize(K);
            for (int k = 0; k < K; ++k) ex.true_thetas[k] = c.payload[i++];
            for (int k = 0; k < K; ++k) ex.true_dists[k] = c.payload[i++];
            ex.true_channels.resize(M, K);
            for (int k = 0; k < K; ++k) ex.true_channels.col(k) = effective_channel(ex.true_thetas[k], ex.true_dists[k], out.cfg);
        }
    } catch (const std::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    return out;
}

} // namespace isac::io
