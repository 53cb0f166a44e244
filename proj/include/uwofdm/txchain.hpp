#pragma once

// Transmit side: symbol assembly (UW-OFDM and CP-OFDM), packet streams and
// the bit-level coding chain.

#include <array>
#include <cmath>
#include <vector>

#include "uwofdm/codebook.hpp"
#include "uwofdm/fec.hpp"
#include "uwofdm/mapping.hpp"

namespace uwofdm {

/// Fixed pilot symbols, unit magnitude, repeated over all OFDM symbols.
inline cvec default_pilots(std::size_t n_pilot) {
    static const std::array<cplx, 4> base{cplx{1, 1}, cplx{1, -1}, cplx{-1, 1}, cplx{1, 1}};
    cvec p(static_cast<Eigen::Index>(n_pilot));
    for (std::size_t i = 0; i < n_pilot; ++i) p[i] = base[i % base.size()] / std::sqrt(2.0);
    return p;
}

struct TxSymbol {
    cvec data;  // d_l
    cvec freq;  // N-point spectrum of the DFT window
    cvec time;  // N samples (UW) or N + N_g samples (CP)
};

struct TxPacket {
    std::vector<TxSymbol> symbols;
    cvec stream;
    cvec pilots;
};

/// UW-OFDM symbol: x = F^{-1} B (G_d d + G_p p) has a zero tail, the UW x_u
/// is written into it. `x_u` may be empty (zero UW).
inline TxSymbol assemble_symbol(const cvec& d, const cvec& p, const GeneratorSet& gs, const SystemConfig& cfg,
                                const SelectionMatrices& sel, const cvec& x_u, const numerics::DftPlan& plan) {
    require(d.size() == gs.g_d.cols() && p.size() == gs.g_p.cols(), errc::dimension_mismatch,
            "data/pilot length does not match the generators");
    require(x_u.size() == 0 || static_cast<std::size_t>(x_u.size()) == cfg.n_guard, errc::dimension_mismatch,
            "UW length must be N_u");
    TxSymbol s;
    s.data = d;
    const cvec used = gs.g_d * d + gs.g_p * p;
    cvec full = cvec::Zero(static_cast<Eigen::Index>(cfg.n_dft));
    for (std::size_t j = 0; j < sel.used_indices.size(); ++j) full[sel.used_indices[j]] = used[j];
    s.time = plan.inverse(full);
    if (x_u.size() > 0) s.time.tail(x_u.size()) = x_u;  // the zero-word tail is replaced by the UW
    s.freq = plan.forward(s.time);
    return s;
}

/// CP-OFDM symbol: IDFT of B (G_d d + G_p p) with its last N_g samples prepended.
inline TxSymbol assemble_cp_symbol(const cvec& d, const cvec& p, const GeneratorSet& gs, const SystemConfig& cfg,
                                   const SelectionMatrices& sel, const numerics::DftPlan& plan) {
    require(d.size() == gs.g_d.cols() && p.size() == gs.g_p.cols(), errc::dimension_mismatch,
            "data/pilot length does not match the generators");
    TxSymbol s;
    s.data = d;
    const cvec used = gs.g_d * d + gs.g_p * p;
    s.freq = cvec::Zero(static_cast<Eigen::Index>(cfg.n_dft));
    for (std::size_t j = 0; j < sel.used_indices.size(); ++j) s.freq[sel.used_indices[j]] = used[j];
    const cvec x = plan.inverse(s.freq);
    const auto ng = static_cast<Eigen::Index>(cfg.n_guard);
    s.time.resize(x.size() + ng);
    s.time << x.tail(ng), x;
    return s;
}

/// Mean transmit power over the first N - N_u samples of a UW-OFDM symbol
/// (data with unit-energy symbols plus pilots), i.e. the payload part.
inline double payload_sample_power(const SystemConfig& cfg, const GeneratorSet& gs, const cvec& pilots) {
    const double n = static_cast<double>(cfg.n_dft);
    const double energy = (gs.g_d.squaredNorm() + (gs.g_p * pilots).squaredNorm()) / n;
    return energy / static_cast<double>(cfg.n_dft - cfg.n_guard);
}

/// Barker-13 (+ + + + + - - + + - + - +) zero-padded to N_u samples and
/// scaled so its mean power over N_u samples equals `target_power`.
inline cvec barker_uw(std::size_t n_u, double target_power) {
    static constexpr int barker13[13] = {1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1};
    cvec x = cvec::Zero(static_cast<Eigen::Index>(n_u));
    for (std::size_t i = 0; i < std::min<std::size_t>(n_u, 13); ++i) x[i] = barker13[i];
    const double pw = x.squaredNorm() / static_cast<double>(n_u);
    if (pw > 0) x *= std::sqrt(target_power / pw);
    return x;
}

/// Expected energy of one transmitted symbol (all N or N + N_g samples),
/// data symbols with unit energy.
inline double symbol_energy(const SystemConfig& cfg, const SelectionMatrices& sel, const GeneratorSet& gs,
                            const cvec& pilots, const cvec& x_u) {
    const cmat fb = numerics::idft_matrix(cfg.n_dft) * sel.b.cast<cplx>();
    const cmat td = fb * gs.g_d;    // time response of the data
    cvec tp = fb * (gs.g_p * pilots);  // deterministic pilot part
    if (cfg.variant == Variant::uw_ofdm && x_u.size() > 0) tp.tail(x_u.size()) += x_u;
    double e = td.squaredNorm() + tp.squaredNorm();
    if (cfg.variant == Variant::cp_ofdm) {
        const auto ng = static_cast<Eigen::Index>(cfg.n_guard);
        e += td.bottomRows(ng).squaredNorm() + tp.tail(ng).squaredNorm();
    }
    return e;
}

/// Assembles L symbols from the columns of `data` (N_d x L).
inline TxPacket build_packet(const cmat& data, const cvec& pilots, const SystemConfig& cfg,
                             const SelectionMatrices& sel, const GeneratorSet& gs, const cvec& x_u = {}) {
    const numerics::DftPlan plan(cfg.n_dft);
    TxPacket pk;
    pk.pilots = pilots;
    const auto sps = static_cast<Eigen::Index>(cfg.samples_per_symbol());
    pk.stream.resize(sps * data.cols());
    pk.symbols.reserve(static_cast<std::size_t>(data.cols()));
    for (Eigen::Index l = 0; l < data.cols(); ++l) {
        TxSymbol s = cfg.variant == Variant::uw_ofdm ? assemble_symbol(data.col(l), pilots, gs, cfg, sel, x_u, plan)
                                                     : assemble_cp_symbol(data.col(l), pilots, gs, cfg, sel, plan);
        pk.stream.segment(l * sps, sps) = s.time;
        pk.symbols.push_back(std::move(s));
    }
    return pk;
}

/// Bit-level chain shared by transmitter and receiver: encode, optional
/// 3/4 puncturing, packet interleaving and Gray mapping. Sized so the coded
/// bits fill L N_d log2(M) channel bits exactly.
class PacketCoder {
public:
    PacketCoder(std::size_t n_data, std::size_t n_symbols, Constellation c, fec::Rate rate, bool coded,
                std::uint64_t interleaver_seed)
        : n_data_(n_data), n_symbols_(n_symbols), const_(std::move(c)), rate_(rate), coded_(coded) {
        capacity_ = n_data * n_symbols * const_.bits_per_symbol();
        payload_ = fec::payload_bits(capacity_, rate, coded);
        if (coded) il_ = fec::Interleaver(capacity_, interleaver_seed);
    }

    std::size_t payload_bits() const noexcept { return payload_; }
    std::size_t channel_bits() const noexcept { return capacity_; }
    const Constellation& constellation() const noexcept { return const_; }
    bool coded() const noexcept { return coded_; }
    fec::Rate rate() const noexcept { return rate_; }

    /// Payload bits -> N_d x L symbol matrix.
    cmat encode(const fec::bitvec& payload) const {
        require(payload.size() == payload_, errc::length_mismatch,
                "payload has " + std::to_string(payload.size()) + " bits, expected " + std::to_string(payload_));
        fec::bitvec chan = payload;
        if (coded_) {
            chan = fec::conv_encode(payload);
            if (rate_ == fec::Rate::r3_4) chan = fec::puncture(chan);
            chan = il_.interleave(chan);
        }
        const auto syms = map_bits(chan, const_);
        cmat d(static_cast<Eigen::Index>(n_data_), static_cast<Eigen::Index>(n_symbols_));
        for (std::size_t l = 0; l < n_symbols_; ++l)
            for (std::size_t k = 0; k < n_data_; ++k) d(k, l) = syms[l * n_data_ + k];
        return d;
    }

    /// Channel LLRs (symbol-major, same order as encode) -> payload decisions.
    fec::bitvec decode(const std::vector<double>& llrs) const {
        require(llrs.size() == capacity_, errc::length_mismatch, "LLR count != channel bits");
        if (!coded_) {
            fec::bitvec out(llrs.size());
            for (std::size_t i = 0; i < llrs.size(); ++i) out[i] = llrs[i] < 0.0 ? 1 : 0;
            return out;
        }
        std::vector<double> soft = il_.deinterleave(llrs);
        if (rate_ == fec::Rate::r3_4) soft = fec::depuncture(soft);
        return fec::viterbi_decode_soft(soft);
    }

private:
    std::size_t n_data_, n_symbols_;
    Constellation const_;
    fec::Rate rate_;
    bool coded_;
    std::size_t capacity_ = 0, payload_ = 0;
    fec::Interleaver il_;
};

} // namespace uwofdm
