#pragma once

// Experiment description shared by the sweeps, the CLI and the acceptance runs.

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwofdm/codebook.hpp"
#include "uwofdm/fec.hpp"
#include "uwofdm/rxfront.hpp"

namespace uwofdm::harness {

enum class ExperimentKind { mse_sweep, ber_sweep, calibrate, model_check };

inline const char* to_string(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::mse_sweep: return "mse_sweep";
    case ExperimentKind::ber_sweep: return "ber_sweep";
    case ExperimentKind::calibrate: return "calibrate";
    case ExperimentKind::model_check: return "model_check";
    }
    return "unknown";
}

inline ExperimentKind kind_from_string(const std::string& s) {
    if (s == "mse_sweep" || s == "mse-sweep") return ExperimentKind::mse_sweep;
    if (s == "ber_sweep" || s == "ber-sweep") return ExperimentKind::ber_sweep;
    if (s == "calibrate") return ExperimentKind::calibrate;
    if (s == "model_check" || s == "model-check") return ExperimentKind::model_check;
    throw error(errc::parse_error, "unknown experiment kind '" + s + "'");
}

enum class UwKind { zero, barker13 };

inline const char* to_string(UwKind u) { return u == UwKind::zero ? "zero" : "barker13"; }

inline UwKind uw_from_string(const std::string& s) {
    if (s == "zero") return UwKind::zero;
    if (s == "barker13") return UwKind::barker13;
    throw error(errc::parse_error, "unknown UW '" + s + "'");
}

/// OFDM variant plus generator choice, named uw_spread (G''_d),
/// uw_systematic (G'_d) or cp.
struct SystemChoice {
    Variant variant = Variant::uw_ofdm;
    GeneratorKind kind = GeneratorKind::spread;

    std::string name() const {
        if (variant == Variant::cp_ofdm) return "cp";
        return kind == GeneratorKind::systematic ? "uw_systematic" : "uw_spread";
    }
    bool operator==(const SystemChoice&) const = default;
};

inline SystemChoice system_from_string(const std::string& s) {
    if (s == "uw_spread" || s == "uw") return {Variant::uw_ofdm, GeneratorKind::spread};
    if (s == "uw_systematic") return {Variant::uw_ofdm, GeneratorKind::systematic};
    if (s == "cp") return {Variant::cp_ofdm, GeneratorKind::cp_ofdm};
    throw error(errc::parse_error, "unknown system '" + s + "' (uw_spread, uw_systematic, cp)");
}

inline constexpr std::size_t desk_scale_channels = 300;
inline constexpr std::size_t full_scale_channels = 10000;

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::mse_sweep;
    std::vector<SystemChoice> systems{system_from_string("uw_spread"), system_from_string("cp")};
    std::vector<double> epsilon_list{0.1};
    std::vector<double> ebn0_list_db{};  // empty: noise-free (MSE sweeps)
    fec::Rate rate = fec::Rate::r1_2;
    bool coded = true;
    unsigned constellation = 4;
    std::vector<Tier> tiers{Tier::cpe};
    std::size_t n_channels = desk_scale_channels;
    std::size_t n_packets = 1;  // packets per channel realization
    std::uint64_t base_seed = 1;
    UwKind uw = UwKind::zero;
    double tau_rms = 100e-9;  // 0: flat channel
    std::size_t workers = 1;
    std::size_t symbols_per_packet = 0;  // 0: preset L
    std::size_t gh_nodes = 16;
    std::vector<SystemConfig> config_overrides;  // replace the preset of the same variant
};

inline void validate(const ExperimentSpec& s) {
    require(!s.systems.empty(), errc::invalid_argument, "system list is empty");
    require(!s.epsilon_list.empty(), errc::invalid_argument, "epsilon list is empty");
    require(!s.tiers.empty(), errc::invalid_argument, "tier list is empty");
    require(s.n_channels >= 1, errc::invalid_argument, "n_channels must be >= 1");
    require(s.n_packets >= 1, errc::invalid_argument, "n_packets must be >= 1");
    require(s.workers >= 1, errc::invalid_argument, "workers must be >= 1");
    require(s.constellation == 4 || s.constellation == 16, errc::invalid_argument, "constellation must be 4 or 16");
    require(s.tau_rms >= 0.0, errc::invalid_argument, "tau_rms must be >= 0");
    require(s.symbols_per_packet != 1, errc::invalid_argument, "CFO estimation needs at least two symbols");
    if (s.kind == ExperimentKind::ber_sweep)
        require(!s.ebn0_list_db.empty(), errc::invalid_argument, "BER sweep needs an Eb/N0 list");
}

inline void apply_full_scale(ExperimentSpec& s) { s.n_channels = full_scale_channels; }

inline std::string rate_name(fec::Rate r, bool coded) {
    if (!coded) return "uncoded";
    return r == fec::Rate::r1_2 ? "1/2" : "3/4";
}

inline ExperimentSpec spec_from_json(const nlohmann::json& j) {
    ExperimentSpec s;
    try {
        if (j.contains("kind")) s.kind = kind_from_string(j.at("kind").get<std::string>());
        if (j.contains("system")) {
            s.systems.clear();
            const auto& v = j.at("system");
            if (v.is_string())
                s.systems.push_back(system_from_string(v.get<std::string>()));
            else
                for (const auto& e : v) s.systems.push_back(system_from_string(e.get<std::string>()));
        }
        if (j.contains("epsilon_list")) s.epsilon_list = j.at("epsilon_list").get<std::vector<double>>();
        if (j.contains("ebn0_list_db")) s.ebn0_list_db = j.at("ebn0_list_db").get<std::vector<double>>();
        if (j.contains("rate")) {
            const auto r = j.at("rate").get<std::string>();
            if (r == "uncoded") {
                s.coded = false;
            } else if (r == "1/2") {
                s.rate = fec::Rate::r1_2;
            } else if (r == "3/4") {
                s.rate = fec::Rate::r3_4;
            } else {
                throw error(errc::parse_error, "rate must be 1/2, 3/4 or uncoded");
            }
        }
        if (j.contains("constellation")) {
            const auto c = j.at("constellation").get<std::string>();
            require(c == "qpsk" || c == "qam16", errc::parse_error, "constellation must be qpsk or qam16");
            s.constellation = c == "qpsk" ? 4 : 16;
        }
        if (j.contains("compensation_tier")) {
            s.tiers.clear();
            const auto& v = j.at("compensation_tier");
            if (v.is_string())
                s.tiers.push_back(tier_from_string(v.get<std::string>()));
            else
                for (const auto& e : v) s.tiers.push_back(tier_from_string(e.get<std::string>()));
        }
        if (j.contains("n_channels")) s.n_channels = j.at("n_channels").get<std::size_t>();
        if (j.contains("n_packets")) s.n_packets = j.at("n_packets").get<std::size_t>();
        if (j.contains("base_seed")) s.base_seed = j.at("base_seed").get<std::uint64_t>();
        if (j.contains("uw")) s.uw = uw_from_string(j.at("uw").get<std::string>());
        if (j.contains("tau_rms")) s.tau_rms = j.at("tau_rms").get<double>();
        if (j.contains("workers")) s.workers = j.at("workers").get<std::size_t>();
        if (j.contains("symbols_per_packet")) s.symbols_per_packet = j.at("symbols_per_packet").get<std::size_t>();
        if (j.contains("gh_nodes")) s.gh_nodes = j.at("gh_nodes").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw error(errc::parse_error, std::string("experiment spec: ") + e.what());
    }
    validate(s);
    return s;
}

inline nlohmann::json to_json(const ExperimentSpec& s) {
    nlohmann::json j;
    j["kind"] = to_string(s.kind);
    std::vector<std::string> sys;
    for (const auto& c : s.systems) sys.push_back(c.name());
    j["system"] = sys;
    j["epsilon_list"] = s.epsilon_list;
    j["ebn0_list_db"] = s.ebn0_list_db;
    j["rate"] = rate_name(s.rate, s.coded);
    j["constellation"] = s.constellation == 4 ? "qpsk" : "qam16";
    std::vector<std::string> tiers;
    for (auto t : s.tiers) tiers.push_back(to_string(t));
    j["compensation_tier"] = tiers;
    j["n_channels"] = s.n_channels;
    j["n_packets"] = s.n_packets;
    j["base_seed"] = s.base_seed;
    j["uw"] = to_string(s.uw);
    j["tau_rms"] = s.tau_rms;
    j["workers"] = s.workers;
    j["symbols_per_packet"] = s.symbols_per_packet;
    j["gh_nodes"] = s.gh_nodes;
    return j;
}

inline ExperimentSpec load_spec(const std::string& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), errc::io_error, "cannot open experiment spec " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw error(errc::parse_error, path + ": " + e.what());
    }
    return spec_from_json(j);
}

} // namespace uwofdm::harness
