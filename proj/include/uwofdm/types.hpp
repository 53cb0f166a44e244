#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace uwofdm {

using cplx = std::complex<double>;
using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;
using rvec = Eigen::VectorXd;
using rmat = Eigen::MatrixXd;
using index_set = std::vector<std::size_t>;

inline constexpr cplx j_unit{0.0, 1.0};

enum class errc {
    dimension_mismatch,
    overlapping_indices,
    index_out_of_range,
    singular_redundancy,
    non_unitary,
    parse_error,
    zero_word_violation,
    length_mismatch,
    nonfinite_input,
    singular_channel,
    not_hpd,
    zero_pilot_energy,
    unwrap_ambiguity,
    io_error,
    invalid_argument,
};

inline const char* to_string(errc code) {
    switch (code) {
    case errc::dimension_mismatch: return "dimension-mismatch";
    case errc::overlapping_indices: return "overlapping-indices";
    case errc::index_out_of_range: return "index-out-of-range";
    case errc::singular_redundancy: return "singular-redundancy";
    case errc::non_unitary: return "non-unitary";
    case errc::parse_error: return "parse-error";
    case errc::zero_word_violation: return "zero-word-violation";
    case errc::length_mismatch: return "length-mismatch";
    case errc::nonfinite_input: return "nonfinite-input";
    case errc::singular_channel: return "singular-channel";
    case errc::not_hpd: return "not-hpd";
    case errc::zero_pilot_energy: return "zero-pilot-energy";
    case errc::unwrap_ambiguity: return "unwrap-ambiguity";
    case errc::io_error: return "io-error";
    case errc::invalid_argument: return "invalid-argument";
    }
    return "unknown";
}

/// Exception carrying a machine-checkable error kind.
class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

inline void require(bool cond, errc code, const std::string& what) {
    if (!cond) throw error(code, what);
}

} // namespace uwofdm
