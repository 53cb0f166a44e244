#pragma once

// One link: a system with its pilots and UW, a channel realization, and the
// receiver processing of a packet for any compensation tier.

#include <cmath>
#include <cstdint>
#include <vector>

#include "uwofdm/channel.hpp"
#include "uwofdm/errmodel.hpp"
#include "uwofdm/harness/experiment.hpp"
#include "uwofdm/mapping.hpp"
#include "uwofdm/rxfront.hpp"
#include "uwofdm/txchain.hpp"

namespace uwofdm::harness {

struct Link {
    SystemChoice choice;
    System sys;
    cvec pilots;
    cvec x_u;      // empty: zero UW
    cvec uw_used;  // UW spectrum on the used bins
    double tau_rms = 100e-9;
    std::size_t n_symbols = 0;
    double symbol_energy = 0.0;  // expected energy of one transmitted symbol, guard included
};

inline Link make_link(SystemChoice choice, UwKind uw, double tau_rms, std::size_t n_symbols = 0,
                      const SystemConfig* config = nullptr) {
    Link k;
    k.choice = choice;
    k.sys = config ? make_system(*config, choice.kind) : make_system(choice.variant, choice.kind);
    const auto& cfg = k.sys.cfg;
    k.pilots = default_pilots(cfg.n_pilot);
    if (uw == UwKind::barker13 && cfg.variant == Variant::uw_ofdm)
        k.x_u = barker_uw(cfg.n_guard, payload_sample_power(cfg, k.sys.gs, k.pilots));
    k.uw_used = uw_spectrum_used(cfg, k.sys.sel, k.x_u);
    k.tau_rms = tau_rms;
    k.n_symbols = n_symbols ? n_symbols : cfg.symbols_per_packet;
    k.symbol_energy = uwofdm::symbol_energy(cfg, k.sys.sel, k.sys.gs, k.pilots, k.x_u);
    return k;
}

inline ChannelRealization link_channel(const Link& k, std::uint64_t seed) {
    if (k.tau_rms <= 0.0) {
        ChannelRealization ch = flat_channel(k.sys.cfg, k.sys.sel);
        ch.seed = seed;
        return ch;
    }
    return draw_channel(k.tau_rms, k.sys.cfg, k.sys.sel, seed);
}

/// E_b = E_sym / (N_d log2|A| r), E_sym the expected transmitted energy of
/// one OFDM symbol including the CP or UW samples.
inline double energy_per_bit(const Link& k, unsigned bits_per_symbol, double code_rate) {
    return k.symbol_energy / (static_cast<double>(k.sys.cfg.n_data) * bits_per_symbol * code_rate);
}

/// Per-sample noise variance sigma_t^2 = N_0 = E_b 10^{-EbN0/10}; the
/// per-bin variance after the DFT is N sigma_t^2.
inline double ebn0_to_noise(const Link& k, unsigned bits_per_symbol, double code_rate, double ebn0_db) {
    return energy_per_bit(k, bits_per_symbol, code_rate) * std::pow(10.0, -ebn0_db / 10.0);
}

/// Multipath (preceded by one UW for UW-OFDM), CFO, then AWGN if sigma_t_sq > 0.
inline cvec propagate(const Link& k, const cvec& tx, const ChannelRealization& ch, const CfoModel& cfo,
                      double sigma_t_sq = 0.0, numerics::Rng* rng = nullptr) {
    cvec history;
    if (k.sys.cfg.variant == Variant::uw_ofdm && k.x_u.size() > 0) history = k.x_u;
    cvec y = apply_cfo_time(apply_multipath(tx, ch, history), cfo, k.sys.cfg.n_dft);
    if (sigma_t_sq > 0.0) {
        require(rng != nullptr, errc::invalid_argument, "noise requested without an RNG");
        y = add_awgn(y, sigma_t_sq, *rng);
    }
    return y;
}

struct CpeTrack {
    std::vector<double> phi_hat;
    double epsilon_hat = 0.0;
};

inline CpeTrack track_cpe(const Link& k, const std::vector<RxSymbol>& rx, const ChannelRealization& ch) {
    CpeTrack t;
    t.phi_hat.reserve(rx.size());
    for (const auto& s : rx) t.phi_hat.push_back(estimate_cpe(s.y_down, k.pilots, ch.h_pilot, k.sys.sel));
    t.epsilon_hat = estimate_epsilon(t.phi_hat, k.sys.cfg);
    return t;
}

/// Receiver quantities fixed by the channel and the noise level.
struct ReceiverContext {
    const ChannelRealization* ch = nullptr;
    double sigma_t_sq = 0.0;
    cmat e_lmmse;
    cvec x_off;
    OffsetCalibration cal;
};

inline bool needs_calibration(Tier t) { return t == Tier::cpe_offset || t == Tier::advanced_hermitian; }

inline ReceiverContext make_receiver(const Link& k, const ChannelRealization& ch, double sigma_t_sq,
                                     bool calibrate) {
    ReceiverContext rc;
    rc.ch = &ch;
    rc.sigma_t_sq = sigma_t_sq;
    rc.e_lmmse = lmmse_build(k.sys.gs.g_d, ch.h_used, sigma_t_sq, k.sys.cfg.n_dft);
    rc.x_off = offset_vector(ch.h_used, k.sys.gs, k.pilots, k.uw_used);
    if (calibrate)
        rc.cal = calibrate_offset_slopes(k.sys.cfg, k.sys.sel, k.sys.gs, ch.h_used, rc.e_lmmse, k.pilots, k.uw_used);
    return rc;
}

/// Model parameters for an equalizer, evaluated at `eps_model`.
inline ErrorModelParams model_params(const Link& k, const ReceiverContext& rc, const Equalizer& eq,
                                     double eps_model) {
    const auto& cfg = k.sys.cfg;
    const cmat lam = compute_lambda_stat(CfoModel{eps_model, 0}, cfg, k.sys.sel);
    ErrorModelParams mp;
    mp.pilot = compute_pilot_gain(k.sys.gs, rc.ch->h_used, lam, k.sys.sel, k.pilots, k.uw_used);
    const auto ici =
        compute_ici_decomposition(k.sys.gs, rc.ch->h_used, lam, k.sys.sel, k.pilots, rc.sigma_t_sq, cfg.n_dft);
    mp.theta = compute_sigma_theta(mp.pilot.a_eff, pilot_weights(rc.ch->h_pilot), k.pilots, ici);
    mp.an = compute_alpha_and_noise(eq, k.sys.gs, rc.ch->h_used, lam, mp.pilot.phi_p_eff, rc.sigma_t_sq, cfg.n_dft);
    mp.m_d = rc.cal.m_d;
    mp.m_p = rc.cal.m_p;
    return mp;
}

struct TierSetup {
    Equalizer eq;
    ErrorModelParams model;
};

/// Equalizer for one tier. advanced_exact is the genie bound: true epsilon
/// and the true pilot offset. The error model uses the receiver's epsilon^
/// except for the genie tier.
inline TierSetup setup_tier(const Link& k, const ReceiverContext& rc, Tier tier, double eps_hat, double eps_true,
                            bool with_model = true) {
    const auto& cfg = k.sys.cfg;
    CompensationInputs in;
    in.e_lmmse = rc.e_lmmse;
    in.x_off = rc.x_off;
    double eps_model = eps_hat;
    switch (tier) {
    case Tier::cpe: break;
    case Tier::cpe_offset: in.phi_off_hat = (rc.cal.m_d - rc.cal.m_p) * eps_hat; break;
    case Tier::advanced_hermitian:
        in.lambda_hat = compute_lambda_stat(CfoModel{eps_hat, 0}, cfg, k.sys.sel);
        in.phi_p_hat = rc.cal.m_p * eps_hat;
        break;
    case Tier::advanced_exact: {
        in.lambda_hat = compute_lambda_stat(CfoModel{eps_true, 0}, cfg, k.sys.sel);
        in.phi_p_hat =
            compute_pilot_gain(k.sys.gs, rc.ch->h_used, in.lambda_hat, k.sys.sel, k.pilots, k.uw_used).phi_p_eff;
        eps_model = eps_true;
        break;
    }
    }
    TierSetup ts;
    ts.eq = build_equalizer(tier, in);
    if (with_model) ts.model = model_params(k, rc, ts.eq, eps_model);
    return ts;
}

/// d^ for all symbols, N_d x L.
inline cmat equalize_packet(const Equalizer& eq, const std::vector<RxSymbol>& rx, const std::vector<double>& phi_hat) {
    cmat out(eq.a.rows(), static_cast<Eigen::Index>(rx.size()));
    for (std::size_t l = 0; l < rx.size(); ++l) out.col(static_cast<Eigen::Index>(l)) = eq.apply(rx[l].y_down, phi_hat[l]);
    return out;
}

/// Channel LLRs in PacketCoder order (symbol-major).
inline std::vector<double> packet_llrs(const cmat& d_hat, const ErrorModelParams& mp, const Constellation& c,
                                       std::size_t gh_nodes) {
    const auto nd = d_hat.rows();
    const unsigned m = c.bits_per_symbol();
    std::vector<double> llr(static_cast<std::size_t>(d_hat.size()) * m);
    std::vector<LlrParams> par(static_cast<std::size_t>(nd));
    for (Eigen::Index k = 0; k < nd; ++k)
        par[k] = LlrParams{mp.an.alpha_prime[k], mp.an.sigma_w_sq[k], mp.theta.sigma_theta_sq};
    for (Eigen::Index l = 0; l < d_hat.cols(); ++l)
        for (Eigen::Index k = 0; k < nd; ++k)
            demap_llr(d_hat(k, l), par[k], c, llr.data() + (static_cast<std::size_t>(l * nd + k)) * m, gh_nodes);
    return llr;
}

/// Uniform random constellation symbols, N_d x L.
inline cmat random_symbols(std::size_t n_data, std::size_t n_symbols, const Constellation& c, std::uint64_t seed) {
    numerics::Rng rng(seed);
    cmat d(static_cast<Eigen::Index>(n_data), static_cast<Eigen::Index>(n_symbols));
    for (Eigen::Index l = 0; l < d.cols(); ++l)
        for (Eigen::Index k = 0; k < d.rows(); ++k)
            d(k, l) = c.point(static_cast<unsigned>(rng.uniform_index(c.order())));
    return d;
}

inline fec::bitvec random_bits(std::size_t n, std::uint64_t seed) {
    numerics::Rng rng(seed);
    fec::bitvec b(n);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng.bit());
    return b;
}

} // namespace uwofdm::harness
