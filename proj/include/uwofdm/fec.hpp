#pragma once

// K = 7 convolutional code (133, 171 octal), 3/4 puncturing, packet
// interleaver and a soft-input Viterbi decoder.
//
// LLR convention: positive means bit 0 is more likely.

#include <array>
#include <bit>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "uwofdm/numerics.hpp"

namespace uwofdm::fec {

using bitvec = std::vector<std::uint8_t>;

inline constexpr unsigned constraint_length = 7;
inline constexpr unsigned memory = constraint_length - 1;
inline constexpr unsigned n_states = 1u << memory;
inline constexpr unsigned gen0 = 0133;
inline constexpr unsigned gen1 = 0171;

enum class Rate { r1_2, r3_4 };

inline double rate_value(Rate r) { return r == Rate::r1_2 ? 0.5 : 0.75; }

// Kept positions of the 2x3 pattern [[1,1,0],[1,0,1]] over (a1 b1 a2 b2 a3 b3).
inline constexpr std::array<bool, 6> puncture_keep{true, true, true, false, false, true};

namespace detail {
// Output pair for a 7-bit register whose MSB (bit 6) is the current input.
inline std::array<std::uint8_t, 2> branch_output(unsigned reg) {
    return {static_cast<std::uint8_t>(std::popcount(reg & gen0) & 1u),
            static_cast<std::uint8_t>(std::popcount(reg & gen1) & 1u)};
}
} // namespace detail

/// Rate-1/2 encoding with 6 tail zeros: output length 2 (len + 6).
inline bitvec conv_encode(const bitvec& bits) {
    bitvec out;
    out.reserve(2 * (bits.size() + memory));
    unsigned state = 0;  // previous 6 inputs, most recent in bit 5
    auto push = [&](unsigned b) {
        const unsigned reg = (b << memory) | state;
        const auto o = detail::branch_output(reg);
        out.push_back(o[0]);
        out.push_back(o[1]);
        state = reg >> 1;
    };
    for (auto b : bits) push(b & 1u);
    for (unsigned i = 0; i < memory; ++i) push(0);
    return out;
}

template <typename T>
std::vector<T> puncture(const std::vector<T>& coded) {
    require(coded.size() % 6 == 0, errc::length_mismatch,
            "punctured stream must be a multiple of 6, got " + std::to_string(coded.size()));
    std::vector<T> out;
    out.reserve(coded.size() / 6 * 4);
    for (std::size_t i = 0; i < coded.size(); ++i)
        if (puncture_keep[i % 6]) out.push_back(coded[i]);
    return out;
}

/// Inserts zero-LLR erasures at the punctured positions.
inline std::vector<double> depuncture(const std::vector<double>& soft) {
    require(soft.size() % 4 == 0, errc::length_mismatch,
            "depuncture input must be a multiple of 4, got " + std::to_string(soft.size()));
    std::vector<double> out;
    out.reserve(soft.size() / 4 * 6);
    std::size_t j = 0;
    for (std::size_t blk = 0; blk < soft.size() / 4; ++blk)
        for (std::size_t i = 0; i < 6; ++i) out.push_back(puncture_keep[i] ? soft[j++] : 0.0);
    return out;
}

/// Uniform random permutation of a whole packet's coded bits; interleave
/// sends input i to output perm[i].
struct Interleaver {
    std::size_t length = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> perm;

    Interleaver() = default;
    Interleaver(std::size_t n, std::uint64_t s) : length(n), seed(s), perm(n) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        numerics::Rng rng(s);
        for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
    }

    template <typename T>
    std::vector<T> interleave(const std::vector<T>& x) const {
        require(x.size() == length, errc::length_mismatch, "interleave: length mismatch");
        std::vector<T> y(length);
        for (std::size_t i = 0; i < length; ++i) y[perm[i]] = x[i];
        return y;
    }

    template <typename T>
    std::vector<T> deinterleave(const std::vector<T>& y) const {
        require(y.size() == length, errc::length_mismatch, "deinterleave: length mismatch");
        std::vector<T> x(length);
        for (std::size_t i = 0; i < length; ++i) x[i] = y[perm[i]];
        return x;
    }
};

/// Maximum-likelihood path for a terminated rate-1/2 stream (erasures as 0).
/// Branch metric: sum of llr * (1 - 2 bit) / 2. Returns len/2 - 6 bits.
inline bitvec viterbi_decode_soft(const std::vector<double>& llrs) {
    require(llrs.size() % 2 == 0 && llrs.size() >= 2 * memory, errc::length_mismatch,
            "viterbi: stream length " + std::to_string(llrs.size()) + " is not a terminated rate-1/2 length");
    const std::size_t steps = llrs.size() / 2;
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();

    static const auto outputs = [] {
        std::array<std::array<std::uint8_t, 2>, 2 * n_states> t{};
        for (unsigned reg = 0; reg < 2 * n_states; ++reg) t[reg] = detail::branch_output(reg);
        return t;
    }();

    std::vector<double> metric(n_states, neg_inf), next(n_states);
    metric[0] = 0.0;
    // survivor: predecessor state's dropped bit (bit 0 of prev state) per step/state
    std::vector<std::uint8_t> decision(steps * n_states);
    for (std::size_t t = 0; t < steps; ++t) {
        const double l0 = llrs[2 * t] * 0.5, l1 = llrs[2 * t + 1] * 0.5;
        const double bm[4] = {l0 + l1, l0 - l1, -l0 + l1, -l0 - l1};  // index o0*2+o1
        for (unsigned ns = 0; ns < n_states; ++ns) {
            // ns = reg >> 1 with reg = (b << 6) | s; so b = ns >> 5, s = ((ns << 1) & 63) | x
            const unsigned b = ns >> (memory - 1);
            double best = neg_inf;
            std::uint8_t arg = 0;
            for (unsigned x = 0; x < 2; ++x) {
                const unsigned s = ((ns << 1) & (n_states - 1)) | x;
                if (metric[s] == neg_inf) continue;
                const unsigned reg = (b << memory) | s;
                const auto& o = outputs[reg];
                const double v = metric[s] + bm[o[0] * 2 + o[1]];
                if (v > best) {
                    best = v;
                    arg = static_cast<std::uint8_t>(x);
                }
            }
            next[ns] = best;
            decision[t * n_states + ns] = arg;
        }
        metric.swap(next);
    }
    bitvec path(steps);
    unsigned s = 0;  // terminated in state 0
    for (std::size_t t = steps; t-- > 0;) {
        path[t] = static_cast<std::uint8_t>(s >> (memory - 1));
        s = ((s << 1) & (n_states - 1)) | decision[t * n_states + s];
    }
    path.resize(steps - memory);
    return path;
}

/// Information bits that fill `coded_capacity` channel bits exactly
/// (uncoded when `coded` is false).
inline std::size_t payload_bits(std::size_t coded_capacity, Rate rate, bool coded = true) {
    if (!coded) return coded_capacity;
    if (rate == Rate::r1_2) {
        require(coded_capacity % 2 == 0, errc::length_mismatch, "capacity must be even at rate 1/2");
        return coded_capacity / 2 - memory;
    }
    require(coded_capacity % 4 == 0, errc::length_mismatch, "capacity must be a multiple of 4 at rate 3/4");
    return coded_capacity / 4 * 3 - memory;
}

} // namespace uwofdm::fec
