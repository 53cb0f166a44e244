#pragma once

// Multipath channel, CFO and AWGN impairments, plus the per-symbol
// frequency-domain CFO model used for compensation and analysis.
//
// A CFO of epsilon (in subcarrier spacings) multiplies sample n of the packet
// stream by exp(j 2 pi epsilon (n + N_x) / N). Seen through the DFT window of
// symbol l this becomes Y = exp(j phi_l) Lambda' X with
//   phi_l = 2 pi epsilon / N * (l S + W + (N - 1) / 2 + N_x)
//   [Lambda']_{k,m} = sin(pi x) / (N sin(pi x / N)) exp(j pi (m - k)(N - 1) / N),  x = m + epsilon - k
// where S is the number of samples per symbol and W the window offset
// (S = N, W = 0 for UW-OFDM; S = N + N_g, W = N_g for CP-OFDM).

#include <cmath>
#include <cstdint>
#include <string>

#include "uwofdm/numerics.hpp"
#include "uwofdm/sysconfig.hpp"

namespace uwofdm {

struct CfoModel {
    double epsilon = 0.0;
    long n_x = 0;
};

/// Common phase of symbol l.
inline double compute_phi_l(const CfoModel& cfo, const SystemConfig& cfg, std::size_t l) {
    const double n = static_cast<double>(cfg.n_dft);
    const double pos = static_cast<double>(l * cfg.samples_per_symbol() + cfg.window_offset()) + (n - 1.0) / 2.0 +
                       static_cast<double>(cfo.n_x);
    return 2.0 * numerics::pi * cfo.epsilon / n * pos;
}

/// Symbol-to-symbol phase advance, 2 pi epsilon S / N.
inline double phase_step(const CfoModel& cfo, const SystemConfig& cfg) {
    return 2.0 * numerics::pi * cfo.epsilon * static_cast<double>(cfg.samples_per_symbol()) /
           static_cast<double>(cfg.n_dft);
}

/// Dirichlet kernel sin(pi x) / (N sin(pi x / N)); exact 0 and +-1 at integers.
inline double dirichlet(double x, std::size_t n) {
    const double nn = static_cast<double>(n);
    const double xr = std::round(x);
    const double frac = x - xr;
    const auto ixr = static_cast<long long>(xr);
    const double sign_num = (ixr % 2 == 0) ? 1.0 : -1.0;
    if (frac == 0.0) {
        if (ixr % static_cast<long long>(n) != 0) return 0.0;
        // limit at x = qN: (-1)^{q (N - 1)}
        const long long q = ixr / static_cast<long long>(n);
        return ((q * static_cast<long long>(n - 1)) % 2 == 0) ? 1.0 : -1.0;
    }
    return sign_num * std::sin(numerics::pi * frac) / (nn * std::sin(numerics::pi * x / nn));
}

/// Full N x N matrix Lambda'.
inline cmat compute_lambda_prime(const CfoModel& cfo, std::size_t n) {
    cmat lam(n, n);
    const auto ln = static_cast<long long>(n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t m = 0; m < n; ++m) {
            const long long diff = static_cast<long long>(m) - static_cast<long long>(k);
            // phase pi (m - k)(N - 1) / N reduced modulo 2 pi
            const long long r = ((diff * (ln - 1)) % (2 * ln) + 2 * ln) % (2 * ln);
            const double ph = numerics::pi * static_cast<double>(r) / static_cast<double>(n);
            const double mag = dirichlet(static_cast<double>(diff) + cfo.epsilon, n);
            lam(k, m) = r == 0 ? cplx{mag, 0.0} : mag * std::polar(1.0, ph);
        }
    return lam;
}

/// Lambda_stat = B^T Lambda' B (used subcarriers only).
inline cmat compute_lambda_stat(const CfoModel& cfo, const SystemConfig& cfg, const SelectionMatrices& sel) {
    const cmat full = compute_lambda_prime(cfo, cfg.n_dft);
    const auto nu = static_cast<Eigen::Index>(sel.used_indices.size());
    cmat out(nu, nu);
    for (Eigen::Index i = 0; i < nu; ++i)
        for (Eigen::Index j = 0; j < nu; ++j) out(i, j) = full(sel.used_indices[i], sel.used_indices[j]);
    return out;
}

struct ChannelRealization {
    cvec taps;     // unit energy impulse response
    cvec h_full;   // N-point frequency response
    cvec h_used;   // response at the used bins
    cvec h_pilot;  // response at the pilot bins
    double tau_rms = 0.0;
    std::uint64_t seed = 0;
    bool taps_exceed_guard = false;
};

inline void fill_responses(ChannelRealization& ch, const SystemConfig& cfg, const SelectionMatrices& sel) {
    cvec padded = cvec::Zero(static_cast<Eigen::Index>(cfg.n_dft));
    require(static_cast<std::size_t>(ch.taps.size()) <= cfg.n_dft, errc::dimension_mismatch,
            "channel longer than the DFT");
    padded.head(ch.taps.size()) = ch.taps;
    ch.h_full = numerics::dft(padded);
    ch.h_used.resize(static_cast<Eigen::Index>(sel.used_indices.size()));
    for (std::size_t j = 0; j < sel.used_indices.size(); ++j) ch.h_used[j] = ch.h_full[sel.used_indices[j]];
    ch.h_pilot.resize(static_cast<Eigen::Index>(cfg.pilot_indices.size()));
    for (std::size_t m = 0; m < cfg.pilot_indices.size(); ++m) ch.h_pilot[m] = ch.h_full[cfg.pilot_indices[m]];
    ch.taps_exceed_guard = static_cast<std::size_t>(ch.taps.size()) > cfg.n_guard;
}

inline ChannelRealization channel_from_taps(const cvec& taps, const SystemConfig& cfg, const SelectionMatrices& sel) {
    ChannelRealization ch;
    ch.taps = taps;
    fill_responses(ch, cfg, sel);
    return ch;
}

inline ChannelRealization flat_channel(const SystemConfig& cfg, const SelectionMatrices& sel) {
    return channel_from_taps(cvec::Ones(1), cfg, sel);
}

/// Number of taps of the exponential profile: smallest K whose residual
/// energy fraction exp(-K T_s / tau) drops below 1e-4, at most `max_taps`.
inline std::size_t channel_tap_count(double tau_rms, double sample_period, std::size_t max_taps) {
    if (tau_rms <= 0.0) return 1;
    const double decay = sample_period / tau_rms;
    std::size_t k = 1;
    while (std::exp(-static_cast<double>(k) * decay) >= 1e-4 && k < max_taps) ++k;
    return k;
}

/// Rayleigh taps with power profile exp(-k T_s / tau), normalized to unit
/// energy per realization.
inline ChannelRealization draw_channel(double tau_rms, const SystemConfig& cfg, const SelectionMatrices& sel,
                                       std::uint64_t seed) {
    const double ts = cfg.sample_period();
    const std::size_t k = channel_tap_count(tau_rms, ts, cfg.n_guard);
    numerics::Rng rng(seed);
    cvec taps(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        const double pw = tau_rms > 0.0 ? std::exp(-static_cast<double>(i) * ts / tau_rms) : 1.0;
        taps[i] = rng.complex_normal(pw);
    }
    taps /= taps.norm();
    ChannelRealization ch = channel_from_taps(taps, cfg, sel);
    ch.tau_rms = tau_rms;
    ch.seed = seed;
    return ch;
}

/// Streaming FIR: y[n] = sum_k h[k] x[n - k], output truncated to the input
/// length. `history` holds the samples preceding x (most recent last).
inline cvec apply_multipath(const cvec& x, const ChannelRealization& ch, const cvec& history = {}) {
    const auto n = x.size();
    const auto k = ch.taps.size();
    cvec y = cvec::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        cplx acc{0.0, 0.0};
        for (Eigen::Index t = 0; t < k; ++t) {
            const Eigen::Index src = i - t;
            if (src >= 0)
                acc += ch.taps[t] * x[src];
            else if (history.size() + src >= 0)
                acc += ch.taps[t] * history[history.size() + src];
        }
        y[i] = acc;
    }
    return y;
}

/// Multiplies sample n by exp(j 2 pi epsilon (n + N_x) / N).
inline cvec apply_cfo_time(const cvec& x, const CfoModel& cfo, std::size_t n_dft) {
    if (cfo.epsilon == 0.0) return x;
    cvec y(x.size());
    const double w = 2.0 * numerics::pi * cfo.epsilon / static_cast<double>(n_dft);
    for (Eigen::Index i = 0; i < x.size(); ++i)
        y[i] = x[i] * std::polar(1.0, w * static_cast<double>(i + cfo.n_x));
    return y;
}

/// Adds CN(0, sigma_t_sq) noise per sample; the per-bin variance after the
/// unnormalized DFT is N sigma_t_sq.
inline cvec add_awgn(const cvec& x, double sigma_t_sq, numerics::Rng& rng) {
    require(sigma_t_sq >= 0.0, errc::invalid_argument, "noise variance must be >= 0");
    if (sigma_t_sq == 0.0) return x;
    cvec y = x;
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += rng.complex_normal(sigma_t_sq);
    return y;
}

inline cvec add_awgn(const cvec& x, double sigma_t_sq, std::uint64_t seed) {
    numerics::Rng rng(seed);
    return add_awgn(x, sigma_t_sq, rng);
}

inline void require_nonsingular(const cvec& h) {
    for (Eigen::Index i = 0; i < h.size(); ++i)
        require(std::abs(h[i]) > 1e-12, errc::singular_channel,
                "channel gain " + std::to_string(std::abs(h[i])) + " at used position " + std::to_string(i));
}

/// Lambda_h = H^{-1} Lambda H on the used bins.
inline cmat compute_lambda_h_stat(const cmat& lambda_stat, const cvec& h_used) {
    require(lambda_stat.rows() == h_used.size(), errc::dimension_mismatch, "Lambda/H size mismatch");
    require_nonsingular(h_used);
    return h_used.cwiseInverse().asDiagonal() * lambda_stat * h_used.asDiagonal();
}

} // namespace uwofdm
