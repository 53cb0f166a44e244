#pragma once

// Gray-labelled QPSK / 16-QAM with unit average energy, and soft demappers.
//
// Labelling (b0 first):
//   QPSK   (b0,b1)      -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)
//   16-QAM (b0,b1,b2,b3): I from (b0,b1), Q from (b2,b3), each axis
//                        00 -> +3, 01 -> +1, 11 -> -1, 10 -> -3, scaled by 1/sqrt(10)
//
// LLRs are log P(b=0)/P(b=1), clipped to +-llr_cap.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "uwofdm/numerics.hpp"

namespace uwofdm {

inline constexpr double llr_cap = 50.0;

class Constellation {
public:
    static Constellation qpsk() { return Constellation(4); }
    static Constellation qam16() { return Constellation(16); }

    explicit Constellation(unsigned order) : order_(order) {
        require(order == 4 || order == 16, errc::invalid_argument, "constellation order must be 4 or 16");
        bits_ = order == 4 ? 2 : 4;
        points_.resize(order);
        for (unsigned label = 0; label < order; ++label) points_[label] = point_for(label);
    }

    unsigned order() const noexcept { return order_; }
    unsigned bits_per_symbol() const noexcept { return bits_; }
    const std::vector<cplx>& points() const noexcept { return points_; }

    /// Bit i of a label (i = 0 is the first bit of the group).
    unsigned bit(unsigned label, unsigned i) const { return (label >> (bits_ - 1 - i)) & 1u; }

    cplx point(unsigned label) const { return points_[label]; }

    /// Nearest constellation label.
    unsigned slice(cplx r) const {
        unsigned best = 0;
        double bd = std::norm(r - points_[0]);
        for (unsigned s = 1; s < order_; ++s) {
            const double d = std::norm(r - points_[s]);
            if (d < bd) {
                bd = d;
                best = s;
            }
        }
        return best;
    }

    const char* name() const { return order_ == 4 ? "qpsk" : "qam16"; }

private:
    cplx point_for(unsigned label) const {
        if (order_ == 4) {
            const double s = 1.0 / std::sqrt(2.0);
            return {s * (1.0 - 2.0 * bit(label, 0)), s * (1.0 - 2.0 * bit(label, 1))};
        }
        auto level = [](unsigned hi, unsigned lo) {
            static constexpr double lv[4] = {3.0, 1.0, -3.0, -1.0};  // 00, 01, 10, 11
            return lv[hi * 2 + lo];
        };
        const double s = 1.0 / std::sqrt(10.0);
        return {s * level(bit(label, 0), bit(label, 1)), s * level(bit(label, 2), bit(label, 3))};
    }

    unsigned order_;
    unsigned bits_;
    std::vector<cplx> points_;
};

inline std::vector<cplx> map_bits(const std::vector<std::uint8_t>& bits, const Constellation& c) {
    const unsigned m = c.bits_per_symbol();
    require(bits.size() % m == 0, errc::length_mismatch,
            std::to_string(bits.size()) + " bits do not fill whole symbols of " + std::to_string(m));
    std::vector<cplx> out(bits.size() / m);
    for (std::size_t i = 0; i < out.size(); ++i) {
        unsigned label = 0;
        for (unsigned b = 0; b < m; ++b) label = (label << 1) | (bits[i * m + b] & 1u);
        out[i] = c.point(label);
    }
    return out;
}

inline std::vector<std::uint8_t> hard_demap(const std::vector<cplx>& syms, const Constellation& c) {
    const unsigned m = c.bits_per_symbol();
    std::vector<std::uint8_t> out;
    out.reserve(syms.size() * m);
    for (auto r : syms) {
        const unsigned label = c.slice(r);
        for (unsigned b = 0; b < m; ++b) out.push_back(static_cast<std::uint8_t>(c.bit(label, b)));
    }
    return out;
}

/// Per-subcarrier parameters of r = alpha' s e^{j theta} + w,
/// theta ~ N(0, sigma_theta_sq), w ~ CN(0, sigma_w_sq).
struct LlrParams {
    cplx alpha_prime{1.0, 0.0};
    double sigma_w_sq = 1.0;
    double sigma_theta_sq = 0.0;
};

namespace detail {

inline double log_sum_exp(const double* v, std::size_t n) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, v[i]);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - mx);
    return mx + std::log(s);
}

inline void llrs_from_loglik(const Constellation& c, const double* loglik, double* out) {
    const unsigned m = c.bits_per_symbol();
    std::array<double, 16> l0{}, l1{};
    for (unsigned b = 0; b < m; ++b) {
        std::size_t n0 = 0, n1 = 0;
        for (unsigned s = 0; s < c.order(); ++s) (c.bit(s, b) ? l1[n1++] : l0[n0++]) = loglik[s];
        const double v = log_sum_exp(l0.data(), n0) - log_sum_exp(l1.data(), n1);
        out[b] = std::isnan(v) ? 0.0 : std::clamp(v, -llr_cap, llr_cap);
    }
}

struct LogRule {
    numerics::QuadratureRule rule;
    std::vector<double> log_weights;
};

inline const LogRule& gh_rule(std::size_t n) {
    static thread_local std::size_t cached_n = 0;
    static thread_local LogRule r;
    if (cached_n != n) {
        r.rule = numerics::gauss_hermite(n);
        r.log_weights.resize(n);
        for (std::size_t i = 0; i < n; ++i) r.log_weights[i] = std::log(r.rule.weights[i]);
        cached_n = n;
    }
    return r;
}

/// log of int N(theta; 0, st2) exp(kappa cos(theta - beta)) dtheta, by
/// Gauss-Hermite quadrature centred on the integrand's mode.
inline double log_phase_integral(double kappa, double beta, double st2, std::size_t nodes) {
    beta = numerics::wrap_angle(beta);
    auto f = [&](double t) { return -t * t / (2.0 * st2) + kappa * std::cos(t - beta); };
    // mode: root of -t/st2 - kappa sin(t - beta), bracketed by 0 and beta
    double t = beta * kappa * st2 / (1.0 + kappa * st2);
    double lo = std::min(0.0, beta), hi = std::max(0.0, beta);
    for (int it = 0; it < 30; ++it) {
        const double g = -t / st2 - kappa * std::sin(t - beta);
        const double h = -1.0 / st2 - kappa * std::cos(t - beta);
        if (g > 0) lo = std::max(lo, t); else hi = std::min(hi, t);
        double tn = h < 0 ? t - g / h : 0.5 * (lo + hi);
        if (!(tn >= lo && tn <= hi)) tn = 0.5 * (lo + hi);
        const bool done = std::abs(tn - t) < 1e-13 * (1.0 + std::abs(t));
        t = tn;
        if (done) break;
    }
    const double h = -1.0 / st2 - kappa * std::cos(t - beta);
    const double s = h < 0 ? std::sqrt(-1.0 / h) : std::sqrt(st2);
    const auto& lr = gh_rule(nodes);
    std::array<double, 64> terms{};
    const double scale = std::sqrt(2.0) * s;
    const double f0 = f(t);
    for (std::size_t i = 0; i < lr.rule.nodes.size(); ++i) {
        const double x = lr.rule.nodes[i];
        terms[i] = lr.log_weights[i] + f(t + scale * x) - f0 + x * x;
    }
    return f0 + log_sum_exp(terms.data(), lr.rule.nodes.size()) + std::log(scale / std::sqrt(2.0 * numerics::pi * st2));
}

} // namespace detail

/// Exact AWGN LLRs for r = alpha s + w.
inline void demap_llr_awgn(cplx r, cplx alpha, double sigma_w_sq, const Constellation& c, double* out) {
    require(std::isfinite(r.real()) && std::isfinite(r.imag()), errc::nonfinite_input, "non-finite sample");
    std::array<double, 16> ll{};
    if (sigma_w_sq <= 0.0) {
        // noiseless limit: hard decision at the cap (no information at r = 0)
        if (r == cplx{0.0, 0.0}) {
            std::fill(out, out + c.bits_per_symbol(), 0.0);
            return;
        }
        const unsigned lab = c.slice(r / alpha);
        for (unsigned b = 0; b < c.bits_per_symbol(); ++b) out[b] = c.bit(lab, b) ? -llr_cap : llr_cap;
        return;
    }
    for (unsigned s = 0; s < c.order(); ++s) ll[s] = -std::norm(r - alpha * c.point(s)) / sigma_w_sq;
    detail::llrs_from_loglik(c, ll.data(), out);
}

inline std::vector<double> demap_llr_awgn(cplx r, cplx alpha, double sigma_w_sq, const Constellation& c) {
    std::vector<double> out(c.bits_per_symbol());
    demap_llr_awgn(r, alpha, sigma_w_sq, c, out.data());
    return out;
}

/// LLRs with the Gaussian phase error marginalized (mode-centred
/// Gauss-Hermite, `nodes` points). Falls back to the AWGN form for
/// sigma_theta_sq == 0.
inline void demap_llr(cplx r, const LlrParams& p, const Constellation& c, double* out, std::size_t nodes = 16) {
    require(p.sigma_w_sq >= 0.0 && p.sigma_theta_sq >= 0.0, errc::invalid_argument, "negative variance");
    if (p.sigma_theta_sq <= 0.0 || p.sigma_w_sq <= 0.0) {
        demap_llr_awgn(r, p.alpha_prime, p.sigma_w_sq, c, out);
        return;
    }
    require(std::isfinite(r.real()) && std::isfinite(r.imag()), errc::nonfinite_input, "non-finite sample");
    std::array<double, 16> ll{};
    const double ar = std::abs(r);
    const double argr = std::arg(r);
    auto exact = [&](unsigned s) {
        const cplx cs = p.alpha_prime * c.point(s);
        const double ac = std::abs(cs);
        const double kappa = 2.0 * ar * ac / p.sigma_w_sq;
        return -(ar * ar + ac * ac) / p.sigma_w_sq +
               detail::log_phase_integral(kappa, argr - std::arg(cs), p.sigma_theta_sq, nodes);
    };
    // Since cos <= 1, -(|r| - |c|)^2 / sigma_w^2 bounds each loglikelihood from
    // above. Points more than `prune` below the nearest one keep the bound,
    // which moves the LLRs by less than order * exp(-prune).
    constexpr double prune = 30.0;
    const unsigned near = p.alpha_prime == cplx{0.0, 0.0} ? 0u : c.slice(r / p.alpha_prime);
    const double ref = exact(near);
    for (unsigned s = 0; s < c.order(); ++s) {
        if (s == near) {
            ll[s] = ref;
            continue;
        }
        const double gap = ar - std::abs(p.alpha_prime * c.point(s));
        const double ub = -gap * gap / p.sigma_w_sq;
        ll[s] = ub < ref - prune ? ub : exact(s);
    }
    detail::llrs_from_loglik(c, ll.data(), out);
}

inline std::vector<double> demap_llr(cplx r, const LlrParams& p, const Constellation& c, std::size_t nodes = 16) {
    std::vector<double> out(c.bits_per_symbol());
    demap_llr(r, p, c, out.data(), nodes);
    return out;
}

} // namespace uwofdm
