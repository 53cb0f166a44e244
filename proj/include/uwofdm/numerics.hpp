#pragma once

// Shared numerical kernels: DFT, Hermitian solves, Gauss-Hermite rules and
// reproducible random streams.
//
// DFT convention used throughout the library:
//   [F_N]_{k,l} = exp(-j 2 pi k l / N)   (forward, unnormalized)
//   F_N^{-1}    = (1/N) F_N^H            (inverse)

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "uwofdm/types.hpp"

namespace uwofdm::numerics {

inline constexpr double pi = std::numbers::pi;

/// Dense DFT matrix [F_N]_{k,l} = exp(-j 2 pi k l / N).
inline cmat dft_matrix(std::size_t n) {
    cmat f(n, n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l) {
            // reduce k*l mod n first so the angle stays accurate
            const auto kl = static_cast<double>((k * l) % n);
            f(k, l) = std::polar(1.0, -2.0 * pi * kl / static_cast<double>(n));
        }
    return f;
}

/// Inverse DFT matrix (1/N) F_N^H.
inline cmat idft_matrix(std::size_t n) {
    return dft_matrix(n).adjoint() / static_cast<double>(n);
}

/// Precomputed twiddles for a radix-2 transform; falls back to the direct
/// O(N^2) sum when N is not a power of two.
class DftPlan {
public:
    explicit DftPlan(std::size_t n) : n_(n) {
        require(n > 0, errc::invalid_argument, "DFT size must be positive");
        radix2_ = (n & (n - 1)) == 0;
        twiddle_.resize(n);
        for (std::size_t k = 0; k < n; ++k)
            twiddle_[k] = std::polar(1.0, -2.0 * pi * static_cast<double>(k) / static_cast<double>(n));
        if (radix2_) {
            std::size_t bits = 0;
            while ((std::size_t{1} << bits) < n) ++bits;
            bitrev_.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t r = 0;
                for (std::size_t b = 0; b < bits; ++b)
                    if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
                bitrev_[i] = r;
            }
        }
    }

    std::size_t size() const noexcept { return n_; }
    bool is_radix2() const noexcept { return radix2_; }

    cvec forward(const cvec& x) const { return transform(x, false); }

    cvec inverse(const cvec& x) const {
        cvec y = transform(x, true);
        y /= static_cast<double>(n_);
        return y;
    }

private:
    cvec transform(const cvec& x, bool conj_twiddle) const {
        require(static_cast<std::size_t>(x.size()) == n_, errc::dimension_mismatch,
                "DFT input length " + std::to_string(x.size()) + " != plan size " + std::to_string(n_));
        auto tw = [&](std::size_t k) { return conj_twiddle ? std::conj(twiddle_[k]) : twiddle_[k]; };
        cvec y(n_);
        if (!radix2_) {
            for (std::size_t k = 0; k < n_; ++k) {
                cplx acc{0.0, 0.0};
                for (std::size_t l = 0; l < n_; ++l) acc += x[l] * tw((k * l) % n_);
                y[k] = acc;
            }
            return y;
        }
        for (std::size_t i = 0; i < n_; ++i) y[bitrev_[i]] = x[i];
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t half = len / 2;
            const std::size_t step = n_ / len;
            for (std::size_t start = 0; start < n_; start += len)
                for (std::size_t j = 0; j < half; ++j) {
                    const cplx t = tw(j * step) * y[start + j + half];
                    const cplx u = y[start + j];
                    y[start + j] = u + t;
                    y[start + j + half] = u - t;
                }
        }
        return y;
    }

    std::size_t n_;
    bool radix2_ = false;
    std::vector<cplx> twiddle_;
    std::vector<std::size_t> bitrev_;
};

inline cvec dft(const cvec& x, const DftPlan& plan) { return plan.forward(x); }
inline cvec idft(const cvec& x, const DftPlan& plan) { return plan.inverse(x); }
inline cvec dft(const cvec& x) { return DftPlan(static_cast<std::size_t>(x.size())).forward(x); }
inline cvec idft(const cvec& x) { return DftPlan(static_cast<std::size_t>(x.size())).inverse(x); }

/// Solves A x = b for Hermitian positive definite A via Cholesky.
/// Throws errc::not_hpd when the factorization breaks down.
template <typename Rhs>
cmat solve_hpd(const cmat& a, const Rhs& b) {
    require(a.rows() == a.cols() && a.rows() == b.rows(), errc::dimension_mismatch,
            "solve_hpd: incompatible shapes");
    Eigen::LLT<cmat> llt(a);
    require(llt.info() == Eigen::Success, errc::not_hpd, "matrix is not Hermitian positive definite");
    return llt.solve(cmat(b));
}

inline cvec solve_hpd(const cmat& a, const cvec& b) {
    cmat x = solve_hpd<cmat>(a, cmat(b));
    return x.col(0);
}

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Hermite rule for the weight exp(-t^2) (Golub-Welsch).
/// Exact for polynomials up to degree 2n-1.
inline QuadratureRule gauss_hermite(std::size_t n) {
    require(n >= 1 && n <= 64, errc::invalid_argument, "gauss_hermite: n must lie in [1, 64]");
    rmat jacobi = rmat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t k = 1; k < n; ++k) {
        const double b = std::sqrt(static_cast<double>(k) / 2.0);
        jacobi(k - 1, k) = b;
        jacobi(k, k - 1) = b;
    }
    Eigen::SelfAdjointEigenSolver<rmat> es(jacobi);
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double sqrt_pi = std::sqrt(pi);
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double t = es.eigenvalues()(ii);
        rule.nodes[i] = t;
        const double v0 = es.eigenvectors()(0, ii);
        rule.weights[i] = sqrt_pi * v0 * v0;
    }
    return rule;
}

/// SplitMix64 finalizer; used to derive independent per-trial seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Seed for stream `stream` of trial `trial` under `base`.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial, std::uint64_t stream = 0) {
    return mix64(mix64(mix64(base) ^ trial) + stream * 0xD1B54A32D192ED03ull);
}

/// Reproducible random source. The generator is std::mt19937_64; uniform
/// and Gaussian variates are derived here (not via <random> distributions)
/// so streams are identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Unbiased integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        require(n > 0, errc::invalid_argument, "uniform_index: empty range");
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v;
        do { v = engine_(); } while (v >= limit);
        return v % n;
    }

    /// Standard normal via the Box-Muller transform.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * pi * u2);
    }

    /// Circular complex Gaussian CN(0, variance).
    cplx complex_normal(double variance) {
        const double s = std::sqrt(variance / 2.0);
        const double re = normal();
        const double im = normal();
        return {s * re, s * im};
    }

    int bit() { return static_cast<int>(engine_() >> 63); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * pi);
    if (a <= -pi) a += 2.0 * pi;
    return a;
}

/// Least-squares line fit y = intercept + slope * x.
inline std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, errc::invalid_argument, "fit_line needs >= 2 points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) { sx += x[i]; sy += y[i]; }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    require(sxx > 0, errc::invalid_argument, "fit_line: degenerate abscissae");
    const double slope = sxy / sxx;
    return {my - slope * mx, slope};
}

} // namespace uwofdm::numerics
