#pragma once

// System configurations and the subcarrier selection matrices derived from
// them. Subcarrier indices are DFT-bin indices 0..N-1; no fftshift is applied
// anywhere in the data path.

#include <algorithm>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "uwofdm/types.hpp"

namespace uwofdm {

enum class Variant { uw_ofdm, cp_ofdm };

inline const char* to_string(Variant v) { return v == Variant::uw_ofdm ? "uw_ofdm" : "cp_ofdm"; }

inline Variant variant_from_string(const std::string& s) {
    if (s == "uw_ofdm" || s == "uw") return Variant::uw_ofdm;
    if (s == "cp_ofdm" || s == "cp") return Variant::cp_ofdm;
    throw error(errc::parse_error, "unknown variant '" + s + "'");
}

struct SystemConfig {
    Variant variant = Variant::uw_ofdm;
    std::size_t n_dft = 0;    // N
    std::size_t n_data = 0;   // N_d (UW) or N'_d (CP)
    std::size_t n_red = 0;    // N_r, zero for CP-OFDM
    std::size_t n_pilot = 0;  // N_p
    std::size_t n_zero = 0;   // N_z
    std::size_t n_guard = 0;  // N_g = N_u
    index_set zero_indices;
    index_set pilot_indices;
    index_set red_indices;    // UW-OFDM only; empty means "placement pending"
    double subcarrier_spacing = 0.0;  // Hz
    std::size_t symbols_per_packet = 0;  // L

    std::size_t n_used() const { return n_dft - n_zero; }
    double dft_duration() const { return 1.0 / subcarrier_spacing; }
    double sample_period() const { return dft_duration() / static_cast<double>(n_dft); }

    /// Samples per transmitted symbol: N for UW-OFDM (guard inside the DFT
    /// window), N + N_g for CP-OFDM.
    std::size_t samples_per_symbol() const {
        return variant == Variant::uw_ofdm ? n_dft : n_dft + n_guard;
    }

    /// Offset of the DFT window within a transmitted symbol.
    std::size_t window_offset() const { return variant == Variant::uw_ofdm ? 0 : n_guard; }

    double symbol_duration() const { return static_cast<double>(samples_per_symbol()) * sample_period(); }
};

/// Table I setups: N = 64, 12 zero and 4 pilot subcarriers, 16 guard samples,
/// 312.5 kHz spacing, L = 200 symbols per packet.
inline SystemConfig build_preset(Variant variant) {
    SystemConfig cfg;
    cfg.variant = variant;
    cfg.n_dft = 64;
    cfg.n_zero = 12;
    cfg.n_pilot = 4;
    cfg.n_guard = 16;
    cfg.zero_indices = {0, 27, 28, 29, 30, 31, 32, 33, 34, 35, 36, 37};
    cfg.pilot_indices = {7, 21, 43, 57};
    cfg.subcarrier_spacing = 312.5e3;
    cfg.symbols_per_packet = 200;
    if (variant == Variant::uw_ofdm) {
        cfg.n_data = 32;
        cfg.n_red = 16;
    } else {
        cfg.n_data = 48;
        cfg.n_red = 0;
    }
    return cfg;
}

/// Checks all configuration invariants; throws uwofdm::error on violation.
inline void validate(const SystemConfig& cfg) {
    require(cfg.n_dft > 0, errc::dimension_mismatch, "N must be positive");
    require(cfg.subcarrier_spacing > 0.0, errc::invalid_argument, "subcarrier spacing must be positive");
    const bool uw = cfg.variant == Variant::uw_ofdm;
    const std::size_t total = cfg.n_data + cfg.n_red + cfg.n_pilot + cfg.n_zero;
    require(total == cfg.n_dft, errc::dimension_mismatch,
            std::to_string(cfg.n_data) + "+" + std::to_string(cfg.n_red) + "+" + std::to_string(cfg.n_pilot) +
                "+" + std::to_string(cfg.n_zero) + " != N=" + std::to_string(cfg.n_dft));
    if (uw)
        require(cfg.n_red == cfg.n_guard, errc::dimension_mismatch, "UW-OFDM requires N_r = N_u");
    else
        require(cfg.n_red == 0 && cfg.red_indices.empty(), errc::dimension_mismatch,
                "CP-OFDM has no redundant subcarriers");
    require(cfg.n_guard < cfg.n_dft, errc::dimension_mismatch, "guard must be shorter than N");

    require(cfg.zero_indices.size() == cfg.n_zero, errc::dimension_mismatch, "|I_z| != N_z");
    require(cfg.pilot_indices.size() == cfg.n_pilot, errc::dimension_mismatch, "|I_p| != N_p");
    require(cfg.red_indices.empty() || cfg.red_indices.size() == cfg.n_red, errc::dimension_mismatch,
            "|I_r| != N_r");

    std::set<std::size_t> seen;
    auto check = [&](const index_set& s, const char* name) {
        for (auto i : s) {
            require(i < cfg.n_dft, errc::index_out_of_range,
                    std::string(name) + " index " + std::to_string(i) + " >= N=" + std::to_string(cfg.n_dft));
            require(seen.insert(i).second, errc::overlapping_indices,
                    std::string(name) + " index " + std::to_string(i) + " is used twice");
        }
    };
    check(cfg.zero_indices, "zero");
    check(cfg.pilot_indices, "pilot");
    check(cfg.red_indices, "redundant");
}

/// Index bookkeeping plus the binary selection matrices.
///
/// "Used" vectors have length N - N_z and list the non-zero subcarriers in
/// ascending bin order. P_p orders a used vector as [non-pilot; pilot], so
/// E_p = [0 I] P_p^T and B_p = P_p [I; 0].
struct SelectionMatrices {
    index_set used_indices;  // bins of the non-zero subcarriers
    index_set pilot_pos;     // positions of pilots within a used vector
    index_set red_pos;       // positions of redundant carriers (UW-OFDM)
    index_set data_pos;      // remaining positions (data carriers)
    index_set nonpilot_pos;  // data_pos and red_pos merged, ascending
    rmat b;    // N x (N - N_z)
    rmat e_p;  // N_p x (N - N_z)
    rmat p_p;  // (N - N_z) x (N - N_z)
    rmat b_p;  // (N - N_z) x (N - N_z - N_p)
};

inline SelectionMatrices build_selection_matrices(const SystemConfig& cfg) {
    validate(cfg);
    SelectionMatrices sel;
    const auto n = cfg.n_dft;
    std::vector<int> role(n, 0);  // 0 data, 1 zero, 2 pilot, 3 redundant
    for (auto i : cfg.zero_indices) role[i] = 1;
    for (auto i : cfg.pilot_indices) role[i] = 2;
    for (auto i : cfg.red_indices) role[i] = 3;
    for (std::size_t k = 0; k < n; ++k) {
        if (role[k] == 1) continue;
        const std::size_t pos = sel.used_indices.size();
        sel.used_indices.push_back(k);
        if (role[k] == 2) {
            sel.pilot_pos.push_back(pos);
        } else {
            sel.nonpilot_pos.push_back(pos);
            (role[k] == 3 ? sel.red_pos : sel.data_pos).push_back(pos);
        }
    }
    // pilots are listed in the order of cfg.pilot_indices
    sel.pilot_pos.clear();
    for (auto pi : cfg.pilot_indices) {
        auto it = std::find(sel.used_indices.begin(), sel.used_indices.end(), pi);
        sel.pilot_pos.push_back(static_cast<std::size_t>(it - sel.used_indices.begin()));
    }

    const auto nu = sel.used_indices.size();
    const auto np = sel.pilot_pos.size();
    sel.b = rmat::Zero(n, nu);
    for (std::size_t j = 0; j < nu; ++j) sel.b(sel.used_indices[j], j) = 1.0;
    sel.p_p = rmat::Zero(nu, nu);
    for (std::size_t j = 0; j < sel.nonpilot_pos.size(); ++j) sel.p_p(sel.nonpilot_pos[j], j) = 1.0;
    for (std::size_t m = 0; m < np; ++m) sel.p_p(sel.pilot_pos[m], nu - np + m) = 1.0;
    sel.e_p = rmat::Zero(np, nu);
    for (std::size_t m = 0; m < np; ++m) sel.e_p(m, sel.pilot_pos[m]) = 1.0;
    sel.b_p = sel.p_p.leftCols(nu - np);
    return sel;
}

// ---------------------------------------------------------------------------
// JSON configuration files. Keys mirror the SystemConfig fields; any key that
// is absent keeps the value of the preset named by "variant".

inline nlohmann::json to_json(const SystemConfig& cfg) {
    return {
        {"variant", to_string(cfg.variant)},
        {"n_dft", cfg.n_dft},
        {"n_data", cfg.n_data},
        {"n_red", cfg.n_red},
        {"n_pilot", cfg.n_pilot},
        {"n_zero", cfg.n_zero},
        {"n_guard", cfg.n_guard},
        {"zero_indices", cfg.zero_indices},
        {"pilot_indices", cfg.pilot_indices},
        {"red_indices", cfg.red_indices},
        {"subcarrier_spacing", cfg.subcarrier_spacing},
        {"symbols_per_packet", cfg.symbols_per_packet},
    };
}

inline SystemConfig config_from_json(const nlohmann::json& j) {
    try {
        const Variant v = variant_from_string(j.value("variant", std::string("uw_ofdm")));
        SystemConfig cfg = build_preset(v);
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) j.at(key).get_to(field);
        };
        get("n_dft", cfg.n_dft);
        get("n_data", cfg.n_data);
        get("n_red", cfg.n_red);
        get("n_pilot", cfg.n_pilot);
        get("n_zero", cfg.n_zero);
        get("n_guard", cfg.n_guard);
        get("zero_indices", cfg.zero_indices);
        get("pilot_indices", cfg.pilot_indices);
        get("red_indices", cfg.red_indices);
        get("subcarrier_spacing", cfg.subcarrier_spacing);
        get("symbols_per_packet", cfg.symbols_per_packet);
        validate(cfg);
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw error(errc::parse_error, e.what());
    }
}

inline SystemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), errc::io_error, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw error(errc::parse_error, path + ": " + e.what());
    }
    return config_from_json(j);
}

} // namespace uwofdm
