#pragma once

// Analytical model of the residual error after CFO compensation:
//   d^_k = alpha'_k d_k e^{j theta} + w_k,  theta ~ N(0, sigma_theta^2),  w_k ~ CN(0, sigma_w,k^2)
// plus the numerical calibration of the phase-offset slopes m_d, m_p.

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "uwofdm/channel.hpp"
#include "uwofdm/codebook.hpp"
#include "uwofdm/rxfront.hpp"

namespace uwofdm {

/// Deterministic part of the pilot correlation p^H W_p p^_l (CPE removed).
struct PilotGain {
    double a_p = 0.0;      // |sum_m w_m e_m^T Lambda_h (g_m |p_m|^2 + u p_m^*)|
    double phi_p = 0.0;    // its argument
    cplx mu{0.0, 0.0};     // cross-pilot ICI term divided by a_p
    double a_eff = 0.0;    // |a_p e^{j phi_p} + a_p mu|
    double phi_p_eff = 0.0;  // arg(a_p e^{j phi_p} + a_p mu): the constant offset of phi^_l - phi_l
};

/// W_p = |H_p|^2.
inline rvec pilot_weights(const cvec& h_pilot) { return h_pilot.cwiseAbs2(); }

inline PilotGain compute_pilot_gain(const GeneratorSet& gs, const cvec& h_used, const cmat& lambda_stat,
                                    const SelectionMatrices& sel, const cvec& pilots, const cvec& uw_used) {
    const cmat lam_h = compute_lambda_h_stat(lambda_stat, h_used);
    cvec h_pilot(static_cast<Eigen::Index>(sel.pilot_pos.size()));
    for (std::size_t m = 0; m < sel.pilot_pos.size(); ++m) h_pilot[m] = h_used[sel.pilot_pos[m]];
    const rvec w = pilot_weights(h_pilot);
    cplx self{0.0, 0.0}, cross{0.0, 0.0};
    const cvec gp_p = gs.g_p * pilots;
    for (std::size_t m = 0; m < sel.pilot_pos.size(); ++m) {
        const auto row = lam_h.row(sel.pilot_pos[m]);
        const cvec own = gs.g_p.col(m) * std::norm(pilots[m]) + uw_used * std::conj(pilots[m]);
        self += w[m] * (row * own)(0);
        const cvec others = gp_p - gs.g_p.col(m) * pilots[m];
        cross += w[m] * std::conj(pilots[m]) * (row * others)(0);
    }
    PilotGain pg;
    pg.a_p = std::abs(self);
    require(pg.a_p > 0.0, errc::zero_pilot_energy, "pilot gain a_p is zero");
    pg.phi_p = std::arg(self);
    pg.mu = cross / pg.a_p;
    pg.a_eff = std::abs(self + cross);
    pg.phi_p_eff = std::arg(self + cross);
    return pg;
}

struct IciDecomposition {
    cvec p_ici;            // E_p H^{-1} Lambda H G_p p - p
    rvec sigma_dici_sq;    // sigma_d^2 ||row_m(E_p H^{-1} Lambda H G_d)||^2
    rvec sigma_v_sq;       // N sigma_t^2 / |H_pm|^2 (per-bin noise after zero forcing)
    cmat data_ici_rows;    // E_p H^{-1} Lambda H G_d, N_p x N_d
    double sigma_d_sq = 1.0;
};

inline IciDecomposition compute_ici_decomposition(const GeneratorSet& gs, const cvec& h_used, const cmat& lambda_stat,
                                                  const SelectionMatrices& sel, const cvec& pilots, double sigma_t_sq,
                                                  std::size_t n_dft, double sigma_d_sq = 1.0) {
    const cmat lam_h = compute_lambda_h_stat(lambda_stat, h_used);
    const auto np = static_cast<Eigen::Index>(sel.pilot_pos.size());
    IciDecomposition ici;
    ici.p_ici.resize(np);
    ici.sigma_dici_sq.resize(np);
    ici.sigma_v_sq.resize(np);
    ici.data_ici_rows.resize(np, gs.g_d.cols());
    ici.sigma_d_sq = sigma_d_sq;
    const cmat lg_d = lam_h * gs.g_d;
    const cvec lg_p = lam_h * (gs.g_p * pilots);
    for (Eigen::Index m = 0; m < np; ++m) {
        const auto pos = static_cast<Eigen::Index>(sel.pilot_pos[m]);
        ici.p_ici[m] = lg_p[pos] - pilots[m];
        ici.data_ici_rows.row(m) = lg_d.row(pos);
        ici.sigma_dici_sq[m] = sigma_d_sq * lg_d.row(pos).squaredNorm();
        ici.sigma_v_sq[m] = static_cast<double>(n_dft) * sigma_t_sq / std::norm(h_used[pos]);
    }
    return ici;
}

struct SigmaTheta {
    double sigma_theta_sq = 0.0;  // independent-pilot form
    double perturbation = 0.0;    // sum_m w_m^2 |p_m|^2 (sigma_dici + sigma_v)
    double validity_ratio = 0.0;  // a^2 / perturbation; the linearization needs this >> 1
    bool valid = true;            // validity_ratio >= 10
    double sigma_theta_sq_full = 0.0;  // same, keeping the correlation of the data ICI across pilots
};

/// sigma_theta^2 = 1 / (2 a^2) sum_m w_m^2 |p_m|^2 (sigma_dici,m^2 + sigma_v,m^2).
/// `a` is the magnitude of the deterministic pilot correlation (a_eff).
inline SigmaTheta compute_sigma_theta(double a, const rvec& weights, const cvec& pilots, const IciDecomposition& ici) {
    require(a > 0.0, errc::invalid_argument, "a_p must be positive");
    SigmaTheta st;
    for (Eigen::Index m = 0; m < weights.size(); ++m)
        st.perturbation += weights[m] * weights[m] * std::norm(pilots[m]) * (ici.sigma_dici_sq[m] + ici.sigma_v_sq[m]);
    st.sigma_theta_sq = st.perturbation / (2.0 * a * a);
    if (ici.data_ici_rows.rows() == weights.size()) {
        cvec comb = cvec::Zero(ici.data_ici_rows.cols());
        double noise = 0.0;
        for (Eigen::Index m = 0; m < weights.size(); ++m) {
            comb += weights[m] * std::conj(pilots[m]) * ici.data_ici_rows.row(m).transpose();
            noise += weights[m] * weights[m] * std::norm(pilots[m]) * ici.sigma_v_sq[m];
        }
        st.sigma_theta_sq_full = (ici.sigma_d_sq * comb.squaredNorm() + noise) / (2.0 * a * a);
    }
    st.validity_ratio = st.perturbation > 0.0 ? a * a / st.perturbation : std::numeric_limits<double>::infinity();
    st.valid = st.validity_ratio >= 10.0;
    return st;
}

struct AlphaNoise {
    cvec alpha_prime;  // effective complex gain per data index
    rvec sigma_w_sq;   // interference + noise variance per data index
    rvec interference_sq;
    rvec noise_sq;
};

/// Gains and variances for d^ = A (e^{-j phi^_l} y) - b with
/// phi^_l = phi_l + phi_p + delta_l:
///   alpha'_k   = e^{-j phi_p} [A Lambda H G_d]_{k,k}
///   sigma_w,k^2 = sigma_d^2 sum_{m != k} |[A Lambda H G_d]_{k,m}|^2 + N sigma_t^2 ||row_k(A)||^2
/// For the CPE tiers A = e^{-j phi^_off} E; for the advanced tiers
/// A = e^{j phi^_p} E M, where M Lambda ~ I leaves only the intrinsic LMMSE
/// interference in the first term.
inline AlphaNoise compute_alpha_and_noise(const Equalizer& eq, const GeneratorSet& gs, const cvec& h_used,
                                          const cmat& lambda_stat, double phi_p, double sigma_t_sq,
                                          std::size_t n_dft, double sigma_d_sq = 1.0) {
    const cmat t = eq.a * lambda_stat * h_used.asDiagonal() * gs.g_d;
    const auto nd = t.rows();
    AlphaNoise an;
    an.alpha_prime.resize(nd);
    an.sigma_w_sq.resize(nd);
    an.interference_sq.resize(nd);
    an.noise_sq.resize(nd);
    const cplx rot = std::polar(1.0, -phi_p);
    for (Eigen::Index k = 0; k < nd; ++k) {
        an.alpha_prime[k] = rot * t(k, k);
        an.interference_sq[k] = sigma_d_sq * (t.row(k).squaredNorm() - std::norm(t(k, k)));
        an.noise_sq[k] = static_cast<double>(n_dft) * sigma_t_sq * eq.a.row(k).squaredNorm();
        an.sigma_w_sq[k] = an.interference_sq[k] + an.noise_sq[k];
    }
    return an;
}

/// Per-subcarrier self-rotation a_d,k e^{j phi_d,k} = e_k^T Lambda H g_k.
inline cvec data_self_gain(const cmat& e_lmmse, const GeneratorSet& gs, const cvec& h_used, const cmat& lambda_stat) {
    const cmat t = e_lmmse * lambda_stat * h_used.asDiagonal() * gs.g_d;
    return t.diagonal();
}

struct OffsetCalibration {
    double m_d = 0.0;
    double m_p = 0.0;
    double residual_d = 0.0;  // max |phi - m eps| / max |phi| over the grid
    double residual_p = 0.0;
    bool linear = true;       // both residuals <= 5 %
    std::vector<double> grid, phi_d, phi_p;
};

inline std::vector<double> default_calibration_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 10; ++i) g.push_back(0.01 * i);
    return g;
}

/// Noise-free phi_d(eps) = mean_k arg(e_k^T Lambda H g_k) and phi_p(eps)
/// over the grid, then least-squares slopes through the origin.
inline OffsetCalibration calibrate_offset_slopes(const SystemConfig& cfg, const SelectionMatrices& sel,
                                                 const GeneratorSet& gs, const cvec& h_used, const cmat& e_lmmse,
                                                 const cvec& pilots, const cvec& uw_used,
                                                 const std::vector<double>& grid = default_calibration_grid()) {
    OffsetCalibration cal;
    cal.grid = grid;
    double sdd = 0, spd = 0, see = 0;
    for (double eps : grid) {
        const cmat lam = compute_lambda_stat(CfoModel{eps, 0}, cfg, sel);
        const cvec sg = data_self_gain(e_lmmse, gs, h_used, lam);
        double pd = 0.0;
        for (Eigen::Index k = 0; k < sg.size(); ++k) pd += std::arg(sg[k]);
        pd /= static_cast<double>(sg.size());
        const double pp = compute_pilot_gain(gs, h_used, lam, sel, pilots, uw_used).phi_p_eff;
        cal.phi_d.push_back(pd);
        cal.phi_p.push_back(pp);
        sdd += eps * pd;
        spd += eps * pp;
        see += eps * eps;
    }
    if (see > 0.0) {
        cal.m_d = sdd / see;
        cal.m_p = spd / see;
    }
    auto residual = [&](const std::vector<double>& phi, double m) {
        double mx = 0.0, err = 0.0;
        for (std::size_t i = 0; i < phi.size(); ++i) {
            mx = std::max(mx, std::abs(phi[i]));
            err = std::max(err, std::abs(phi[i] - m * grid[i]));
        }
        // rounding-level phases (CP-OFDM data) are linear by definition
        return mx > 1e-9 ? err / mx : 0.0;
    };
    cal.residual_d = residual(cal.phi_d, cal.m_d);
    cal.residual_p = residual(cal.phi_p, cal.m_p);
    cal.linear = cal.residual_d <= 0.05 && cal.residual_p <= 0.05;
    return cal;
}

/// Everything the soft demapper needs for one packet.
struct ErrorModelParams {
    PilotGain pilot;
    SigmaTheta theta;
    AlphaNoise an;
    double m_d = 0.0, m_p = 0.0;
};

} // namespace uwofdm
