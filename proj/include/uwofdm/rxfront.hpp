#pragma once

// Receiver front end: per-symbol DFT, pilot-based CPE and CFO estimation,
// LMMSE data estimation and the CFO compensation tiers.

#include <cmath>
#include <vector>

#include <Eigen/QR>

#include "uwofdm/channel.hpp"
#include "uwofdm/codebook.hpp"
#include "uwofdm/numerics.hpp"

namespace uwofdm {

enum class Tier { cpe, cpe_offset, advanced_hermitian, advanced_exact };

inline const char* to_string(Tier t) {
    switch (t) {
    case Tier::cpe: return "cpe";
    case Tier::cpe_offset: return "cpe_offset";
    case Tier::advanced_hermitian: return "advanced_hermitian";
    case Tier::advanced_exact: return "advanced_exact";
    }
    return "unknown";
}

inline Tier tier_from_string(const std::string& s) {
    if (s == "cpe") return Tier::cpe;
    if (s == "cpe_offset") return Tier::cpe_offset;
    if (s == "advanced_hermitian" || s == "advanced") return Tier::advanced_hermitian;
    if (s == "advanced_exact") return Tier::advanced_exact;
    throw error(errc::parse_error, "unknown compensation tier '" + s + "'");
}

inline bool is_advanced(Tier t) { return t == Tier::advanced_hermitian || t == Tier::advanced_exact; }

struct RxSymbol {
    cvec y_full;  // N-point spectrum of the DFT window
    cvec y_down;  // used bins
};

/// Splits the stream into symbols (dropping the CP for CP-OFDM), takes the
/// DFT and keeps the used bins.
inline std::vector<RxSymbol> rx_frontend(const cvec& stream, const SystemConfig& cfg, const SelectionMatrices& sel) {
    const auto sps = static_cast<Eigen::Index>(cfg.samples_per_symbol());
    require(stream.size() % sps == 0, errc::length_mismatch,
            "stream length " + std::to_string(stream.size()) + " is not a multiple of " + std::to_string(sps));
    const numerics::DftPlan plan(cfg.n_dft);
    const auto n = static_cast<Eigen::Index>(cfg.n_dft);
    const auto off = static_cast<Eigen::Index>(cfg.window_offset());
    std::vector<RxSymbol> out(static_cast<std::size_t>(stream.size() / sps));
    for (std::size_t l = 0; l < out.size(); ++l) {
        out[l].y_full = plan.forward(stream.segment(static_cast<Eigen::Index>(l) * sps + off, n));
        out[l].y_down.resize(static_cast<Eigen::Index>(sel.used_indices.size()));
        for (std::size_t j = 0; j < sel.used_indices.size(); ++j) out[l].y_down[j] = out[l].y_full[sel.used_indices[j]];
    }
    return out;
}

/// UW spectrum on the used bins, B^T F_N [0; x_u]. Empty x_u gives zeros.
inline cvec uw_spectrum_used(const SystemConfig& cfg, const SelectionMatrices& sel, const cvec& x_u) {
    cvec out = cvec::Zero(static_cast<Eigen::Index>(sel.used_indices.size()));
    if (x_u.size() == 0) return out;
    cvec t = cvec::Zero(static_cast<Eigen::Index>(cfg.n_dft));
    t.tail(x_u.size()) = x_u;
    const cvec f = numerics::dft(t);
    for (std::size_t j = 0; j < sel.used_indices.size(); ++j) out[j] = f[sel.used_indices[j]];
    return out;
}

/// x_off = H G_p p + H B^T x~_u.
inline cvec offset_vector(const cvec& h_used, const GeneratorSet& gs, const cvec& pilots, const cvec& uw_used) {
    return h_used.cwiseProduct(gs.g_p * pilots + uw_used);
}

/// arg(p^H W_p p^_l) with W_p = |H_p|^2 and p^_l = E_p H^{-1} y, written as
/// arg(sum_m conj(p_m) conj(H_pm) y_pm) so faded pilots simply drop out.
inline double estimate_cpe(const cvec& y_down, const cvec& pilots, const cvec& h_pilot, const SelectionMatrices& sel) {
    cplx acc{0.0, 0.0};
    for (std::size_t m = 0; m < sel.pilot_pos.size(); ++m)
        acc += std::conj(pilots[m]) * std::conj(h_pilot[m]) * y_down[sel.pilot_pos[m]];
    require(acc != cplx{0.0, 0.0}, errc::zero_pilot_energy, "pilot correlation is zero");
    return std::arg(acc);
}

/// Removes 2 pi jumps between consecutive phases.
inline std::vector<double> unwrap_phase(const std::vector<double>& phi) {
    std::vector<double> out(phi.size());
    if (phi.empty()) return out;
    out[0] = phi[0];
    for (std::size_t i = 1; i < phi.size(); ++i) out[i] = out[i - 1] + numerics::wrap_angle(phi[i] - phi[i - 1]);
    return out;
}

/// Largest |epsilon| whose symbol-to-symbol phase step stays below pi.
inline double epsilon_capture_range(const SystemConfig& cfg) {
    return 0.5 * static_cast<double>(cfg.n_dft) / static_cast<double>(cfg.samples_per_symbol());
}

/// CFO estimate from the slope of the unwrapped CPE sequence:
/// epsilon^ = slope N / (2 pi S).
inline double estimate_epsilon(const std::vector<double>& phi_hat, const SystemConfig& cfg) {
    require(phi_hat.size() >= 2, errc::invalid_argument, "need at least two symbols to estimate the CFO");
    const auto un = unwrap_phase(phi_hat);
    std::vector<double> x(un.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
    const double slope = numerics::fit_line(x, un).second;
    const double eps = slope * static_cast<double>(cfg.n_dft) /
                       (2.0 * numerics::pi * static_cast<double>(cfg.samples_per_symbol()));
    require(std::abs(eps) < 0.95 * epsilon_capture_range(cfg), errc::unwrap_ambiguity,
            "CFO estimate " + std::to_string(eps) + " is at the edge of the capture range");
    return eps;
}

/// E = (G^H H^H H G + (N sigma_t^2 / sigma_d^2) I)^{-1} G^H H^H, where
/// sigma_t_sq is the per-sample (time-domain) noise variance so N sigma_t_sq
/// is the per-bin variance. Noise-free: the least-squares left inverse.
inline cmat lmmse_build(const cmat& g_d, const cvec& h_used, double sigma_t_sq, std::size_t n_dft,
                        double sigma_d_sq = 1.0) {
    require(sigma_d_sq > 0.0, errc::invalid_argument, "sigma_d^2 must be positive");
    require(g_d.rows() == h_used.size(), errc::dimension_mismatch, "G_d / H size mismatch");
    const cmat hg = h_used.asDiagonal() * g_d;
    cmat a = hg.adjoint() * hg;
    const double reg = static_cast<double>(n_dft) * sigma_t_sq / sigma_d_sq;
    a.diagonal().array() += reg;
    const cmat rhs = hg.adjoint();
    Eigen::LLT<cmat> llt(a);
    if (llt.info() == Eigen::Success) return llt.solve(rhs);
    return hg.completeOrthogonalDecomposition().pseudoInverse();
}

/// Affine per-symbol estimator d^_l = A (exp(-j phi^_l) y_l) - b.
struct Equalizer {
    cmat a;
    cvec b;
    bool regularized = false;  // exact inverse fell back to a pseudo-inverse

    cvec apply(const cvec& y_down, double phi_hat_l) const { return a * (std::polar(1.0, -phi_hat_l) * y_down) - b; }
};

/// Inputs of the compensation tiers that are fixed for a packet.
struct CompensationInputs {
    cmat e_lmmse;
    cvec x_off;
    double phi_off_hat = 0.0;  // CPE tier with offset
    double phi_p_hat = 0.0;    // advanced tiers
    cmat lambda_hat;           // advanced tiers: Lambda_stat at the assumed epsilon
};

/// cpe:        d^ = E (e^{-j phi^} y - x_off)
/// cpe_offset: d^ = e^{-j phi^_off} E (e^{-j phi^} y - x_off)
/// advanced:   d^ = E (e^{j phi^_p} M e^{-j phi^} y - x_off), M = Lambda^{-1} or Lambda^H
inline Equalizer build_equalizer(Tier tier, const CompensationInputs& in) {
    Equalizer eq;
    switch (tier) {
    case Tier::cpe:
        eq.a = in.e_lmmse;
        eq.b = in.e_lmmse * in.x_off;
        break;
    case Tier::cpe_offset: {
        const cplx r = std::polar(1.0, -in.phi_off_hat);
        eq.a = r * in.e_lmmse;
        eq.b = r * (in.e_lmmse * in.x_off);
        break;
    }
    case Tier::advanced_hermitian:
    case Tier::advanced_exact: {
        require(in.lambda_hat.rows() == in.e_lmmse.cols(), errc::dimension_mismatch, "Lambda^ not built");
        cmat m;
        if (tier == Tier::advanced_hermitian) {
            m = in.lambda_hat.adjoint();
        } else {
            Eigen::PartialPivLU<cmat> lu(in.lambda_hat);
            const double rc = lu.rcond();
            if (rc > 1e-12) {
                m = lu.inverse();
            } else {
                m = in.lambda_hat.completeOrthogonalDecomposition().pseudoInverse();
                eq.regularized = true;
            }
        }
        eq.a = std::polar(1.0, in.phi_p_hat) * (in.e_lmmse * m);
        eq.b = in.e_lmmse * in.x_off;
        break;
    }
    }
    return eq;
}

/// Convenience form of the CPE tiers for one symbol.
inline cvec compensate_cpe(const cvec& y_down, double phi_hat_l, double phi_off_hat, const cvec& x_off,
                           const cmat& e_lmmse) {
    return std::polar(1.0, -phi_off_hat) * (e_lmmse * (std::polar(1.0, -phi_hat_l) * y_down - x_off));
}

/// Convenience form of the advanced tiers for one symbol.
inline cvec compensate_advanced(const cvec& y_down, double phi_hat_l, double phi_p_hat, const cmat& lambda_hat,
                                const cvec& x_off, const cmat& e_lmmse, bool exact_inverse) {
    CompensationInputs in{e_lmmse, x_off, 0.0, phi_p_hat, lambda_hat};
    return build_equalizer(exact_inverse ? Tier::advanced_exact : Tier::advanced_hermitian, in).apply(y_down, phi_hat_l);
}

/// theta_d = mean over symbols of ||d^_l - d_l||^2 / N_d.
inline double bmse(const cmat& d_hat, const cmat& d) {
    require(d_hat.rows() == d.rows() && d_hat.cols() == d.cols(), errc::dimension_mismatch, "bmse: shape mismatch");
    if (d.size() == 0) return 0.0;
    return (d_hat - d).squaredNorm() / static_cast<double>(d.size());
}

} // namespace uwofdm
