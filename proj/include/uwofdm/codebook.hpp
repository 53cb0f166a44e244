#pragma once

// Generator matrices for UW-OFDM (zero-word constrained) and the CP-OFDM
// reference mapping.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "uwofdm/numerics.hpp"
#include "uwofdm/sysconfig.hpp"

namespace uwofdm {

enum class GeneratorKind { systematic, spread, cp_ofdm, imported };

inline const char* to_string(GeneratorKind k) {
    switch (k) {
    case GeneratorKind::systematic: return "systematic";
    case GeneratorKind::spread: return "spread";
    case GeneratorKind::cp_ofdm: return "cp_ofdm";
    case GeneratorKind::imported: return "imported";
    }
    return "unknown";
}

struct GeneratorSet {
    cmat g_d;  // (N - N_z) x N_d
    cmat g_p;  // (N - N_z) x N_p
    double scaling_alpha = 1.0;
    GeneratorKind kind = GeneratorKind::systematic;
    double cond_m_r = 1.0;          // condition number of the redundant block of M
    double gram_offdiag_rel = 0.0;  // ||offdiag(G_d^H G_d)||_F / ||alpha I||_F
};

/// Last N_u rows of F_N^{-1} B. Row r corresponds to time sample N - N_u + r.
inline cmat compute_constraint_matrix(const SystemConfig& cfg, const SelectionMatrices& sel) {
    const auto n = cfg.n_dft;
    const auto nu = cfg.n_guard;
    const auto cols = sel.used_indices.size();
    cmat m(nu, cols);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < nu; ++r)
        for (std::size_t j = 0; j < cols; ++j) {
            const auto kl = ((n - nu + r) * sel.used_indices[j]) % n;
            m(r, j) = inv_n * std::polar(1.0, 2.0 * numerics::pi * static_cast<double>(kl) / static_cast<double>(n));
        }
    return m;
}

namespace detail {

inline cmat take_cols(const cmat& m, const index_set& idx) {
    cmat out(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(j) = m.col(idx[j]);
    return out;
}

inline double condition_number(const cmat& a) {
    if (a.size() == 0) return 1.0;
    Eigen::JacobiSVD<cmat> svd(a);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

/// Positions (within a used vector) of the redundant bins in cfg.red_indices.
inline index_set red_positions(const SystemConfig& cfg, const SelectionMatrices& sel) {
    index_set pos;
    for (auto bin : cfg.red_indices) {
        auto it = std::find(sel.used_indices.begin(), sel.used_indices.end(), bin);
        require(it != sel.used_indices.end(), errc::index_out_of_range, "redundant bin not in use");
        pos.push_back(static_cast<std::size_t>(it - sel.used_indices.begin()));
    }
    return pos;
}

/// T = -M_r^{-1} M_x for the given redundant positions; throws on singular M_r.
inline cmat redundancy_map(const cmat& m, const index_set& red_pos, const cmat& m_x, double* cond = nullptr) {
    const cmat m_r = take_cols(m, red_pos);
    const double c = condition_number(m_r);
    if (cond) *cond = c;
    require(std::isfinite(c) && c < 1e12, errc::singular_redundancy,
            "redundant block of the constraint matrix is singular (cond " + std::to_string(c) + ")");
    return -m_r.partialPivLu().solve(m_x);
}

inline void check_uw(const SystemConfig& cfg, const char* what) {
    require(cfg.variant == Variant::uw_ofdm, errc::invalid_argument, std::string(what) + " needs a UW-OFDM config");
    require(cfg.red_indices.size() == cfg.n_red, errc::dimension_mismatch,
            std::string(what) + ": redundant subcarriers not placed");
}

} // namespace detail

/// Systematic data generator: identity on the data positions, T = -M_r^{-1} M_d
/// on the redundant positions, zero rows at the pilots.
inline GeneratorSet build_systematic_gd(const SystemConfig& cfg, const SelectionMatrices& sel, const cmat& m) {
    detail::check_uw(cfg, "build_systematic_gd");
    const index_set red = detail::red_positions(cfg, sel);
    index_set data;
    for (auto p : sel.nonpilot_pos)
        if (std::find(red.begin(), red.end(), p) == red.end()) data.push_back(p);
    require(data.size() == cfg.n_data, errc::dimension_mismatch, "data position count != N_d");

    GeneratorSet gs;
    gs.kind = GeneratorKind::systematic;
    const cmat t = detail::redundancy_map(m, red, detail::take_cols(m, data), &gs.cond_m_r);
    gs.g_d = cmat::Zero(static_cast<Eigen::Index>(sel.used_indices.size()), static_cast<Eigen::Index>(cfg.n_data));
    for (std::size_t j = 0; j < data.size(); ++j) gs.g_d(data[j], j) = 1.0;
    for (std::size_t r = 0; r < red.size(); ++r) gs.g_d.row(red[r]) = t.row(r);
    return gs;
}

/// Pilot generator: identity on the pilot positions, T_p = -M_r^{-1} M_p on
/// the redundant positions.
inline cmat build_gp(const SystemConfig& cfg, const SelectionMatrices& sel, const cmat& m) {
    detail::check_uw(cfg, "build_gp");
    const index_set red = detail::red_positions(cfg, sel);
    const cmat t_p = detail::redundancy_map(m, red, detail::take_cols(m, sel.pilot_pos));
    cmat g_p = cmat::Zero(static_cast<Eigen::Index>(sel.used_indices.size()), static_cast<Eigen::Index>(cfg.n_pilot));
    for (std::size_t j = 0; j < sel.pilot_pos.size(); ++j) g_p(sel.pilot_pos[j], j) = 1.0;
    for (std::size_t r = 0; r < red.size(); ++r) g_p.row(red[r]) = t_p.row(r);
    return g_p;
}

/// Unitary n-point DFT matrix F_n / sqrt(n); the default spreading matrix.
inline cmat unitary_dft(std::size_t n) {
    return numerics::dft_matrix(n) / std::sqrt(static_cast<double>(n));
}

/// G''_d = G'_d U for unitary U.
inline GeneratorSet build_spread_gd(const GeneratorSet& base, const cmat& u) {
    require(u.rows() == base.g_d.cols() && u.cols() == base.g_d.cols(), errc::dimension_mismatch,
            "spreading matrix must be N_d x N_d");
    const double dev = (u.adjoint() * u - cmat::Identity(u.rows(), u.cols())).norm();
    require(dev <= 1e-9, errc::non_unitary, "||U^H U - I||_F = " + std::to_string(dev));
    GeneratorSet gs = base;
    gs.g_d = base.g_d * u;
    gs.kind = GeneratorKind::spread;
    return gs;
}

/// CP-OFDM: G_{d,cp} = B_p, G_{p,cp} = P_p [0; I].
inline GeneratorSet build_cpofdm_generators(const SystemConfig& cfg, const SelectionMatrices& sel) {
    require(cfg.variant == Variant::cp_ofdm, errc::invalid_argument, "build_cpofdm_generators needs a CP-OFDM config");
    GeneratorSet gs;
    gs.kind = GeneratorKind::cp_ofdm;
    gs.g_d = sel.b_p.cast<cplx>();
    gs.g_p = sel.p_p.rightCols(static_cast<Eigen::Index>(cfg.n_pilot)).cast<cplx>();
    return gs;
}

struct PlacementResult {
    index_set red_indices;  // subcarrier bins, ascending
    double start_trace = 0.0;
    double final_trace = 0.0;
    std::size_t swaps = 0;
};

/// trace(T^H T) with T = -M_r^{-1} M_d for redundant bins `red`; +inf if M_r is singular.
inline double redundancy_trace(const SystemConfig& cfg, const SelectionMatrices& sel, const cmat& m,
                               const index_set& red_bins) {
    SystemConfig c = cfg;
    c.red_indices = red_bins;
    index_set red = detail::red_positions(c, sel);
    index_set data;
    for (auto p : sel.nonpilot_pos)
        if (std::find(red.begin(), red.end(), p) == red.end()) data.push_back(p);
    const cmat m_r = detail::take_cols(m, red);
    if (m_r.size() == 0) return 0.0;
    const Eigen::PartialPivLU<cmat> lu(m_r);
    if (!(lu.rcond() > 1e-12)) return std::numeric_limits<double>::infinity();
    const cmat t = lu.solve(detail::take_cols(m, data));
    return t.squaredNorm();
}

/// Greedy single-swap descent on trace(T^H T) starting from `start` (bins) or,
/// if empty, from equidistant picks among the non-zero non-pilot carriers.
/// Each pass applies the best strictly improving swap; ties go to the lowest
/// (redundant, candidate) bin pair.
inline PlacementResult optimize_redundant_placement(const SystemConfig& cfg, const SelectionMatrices& sel,
                                                    const index_set& start = {}) {
    require(cfg.variant == Variant::uw_ofdm, errc::invalid_argument, "placement needs a UW-OFDM config");
    const cmat m = compute_constraint_matrix(cfg, sel);
    index_set cand;
    for (auto p : sel.nonpilot_pos) cand.push_back(sel.used_indices[p]);
    const std::size_t nr = cfg.n_red;
    require(nr <= cand.size(), errc::dimension_mismatch, "more redundant carriers than candidates");

    index_set cur = start;
    if (cur.empty())
        for (std::size_t i = 0; i < nr; ++i) cur.push_back(cand[(i * cand.size()) / std::max<std::size_t>(nr, 1)]);
    std::sort(cur.begin(), cur.end());
    require(cur.size() == nr, errc::dimension_mismatch, "start set size != N_r");

    PlacementResult res;
    double best = redundancy_trace(cfg, sel, m, cur);
    res.start_trace = best;
    for (;;) {
        double pass_best = best;
        std::size_t bi = 0, bc = 0;
        bool found = false;
        for (std::size_t i = 0; i < cur.size(); ++i)
            for (auto c : cand) {
                if (std::binary_search(cur.begin(), cur.end(), c)) continue;
                index_set trial = cur;
                trial[i] = c;
                std::sort(trial.begin(), trial.end());
                const double v = redundancy_trace(cfg, sel, m, trial);
                // relative margin keeps round-off from producing endless swaps
                if (v < pass_best * (1.0 - 1e-12) || (std::isinf(pass_best) && std::isfinite(v))) {
                    pass_best = v;
                    bi = i;
                    bc = c;
                    found = true;
                }
            }
        if (!found) break;
        cur[bi] = bc;
        std::sort(cur.begin(), cur.end());
        best = pass_best;
        ++res.swaps;
    }
    res.red_indices = cur;
    res.final_trace = best;
    return res;
}

enum class ScaleMethod { orthonormalize, column_normalize };

inline double gram_offdiag_rel(const cmat& g, double alpha) {
    cmat gram = g.adjoint() * g;
    gram.diagonal().setZero();
    return gram.norm() / (alpha * std::sqrt(static_cast<double>(g.cols())));
}

/// Rescales G_d so that the data-induced mean power matches CP-OFDM,
/// alpha = N'_d / N_d. `orthonormalize` maps G_d to sqrt(alpha) G_d (G_d^H G_d)^{-1/2},
/// giving G_d^H G_d = alpha I with the column space (and so the zero word)
/// unchanged; `column_normalize` only fixes each column's squared norm to alpha.
inline GeneratorSet scale_generators(const GeneratorSet& gs, const SystemConfig& cfg_uw, const SystemConfig& cfg_cp,
                                     ScaleMethod method = ScaleMethod::orthonormalize) {
    GeneratorSet out = gs;
    if (gs.kind == GeneratorKind::cp_ofdm) {
        out.scaling_alpha = 1.0;
        out.gram_offdiag_rel = gram_offdiag_rel(out.g_d, 1.0);
        return out;
    }
    const double alpha = static_cast<double>(cfg_cp.n_data) / static_cast<double>(cfg_uw.n_data);
    if (method == ScaleMethod::orthonormalize) {
        Eigen::SelfAdjointEigenSolver<cmat> es(gs.g_d.adjoint() * gs.g_d);
        require(es.eigenvalues().minCoeff() > 0.0, errc::singular_redundancy, "G_d is rank deficient");
        const cmat inv_sqrt = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                              es.eigenvectors().adjoint();
        out.g_d = std::sqrt(alpha) * gs.g_d * inv_sqrt;
        // polish column norms to alpha (the remaining error is round-off)
        for (Eigen::Index j = 0; j < out.g_d.cols(); ++j) out.g_d.col(j) *= std::sqrt(alpha) / out.g_d.col(j).norm();
    } else {
        for (Eigen::Index j = 0; j < out.g_d.cols(); ++j)
            out.g_d.col(j) = gs.g_d.col(j) * (std::sqrt(alpha) / gs.g_d.col(j).norm());
    }
    out.scaling_alpha = alpha;
    out.gram_offdiag_rel = gram_offdiag_rel(out.g_d, alpha);
    return out;
}

/// max |F_N^{-1} B g|_tail over the columns of g (i.e. max |M g|).
inline double zero_word_residual(const cmat& m, const cmat& g) {
    if (m.size() == 0 || g.size() == 0) return 0.0;
    return (m * g).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Matrix text format: a `rows cols` header line, then one row per line of
// space-separated `re:im` pairs printed with 17 significant digits.

inline void write_matrix(std::ostream& os, const cmat& a) {
    os << a.rows() << ' ' << a.cols() << '\n';
    char buf[96];
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g:%.17g", a(r, c).real(), a(r, c).imag());
            if (c) os << ' ';
            os << buf;
        }
        os << '\n';
    }
}

inline cmat read_matrix(std::istream& is) {
    std::string line;
    auto next_line = [&](const char* what) {
        while (std::getline(is, line))
            if (line.find_first_not_of(" \t\r") != std::string::npos) return;
        throw error(errc::parse_error, std::string("unexpected end of input reading ") + what);
    };
    next_line("header");
    std::istringstream hs(line);
    long rows = -1, cols = -1;
    require(static_cast<bool>(hs >> rows >> cols) && rows >= 0 && cols >= 0, errc::parse_error,
            "bad matrix header '" + line + "'");
    cmat a(rows, cols);
    for (long r = 0; r < rows; ++r) {
        next_line("row");
        std::istringstream ls(line);
        std::string tok;
        long c = 0;
        while (ls >> tok) {
            require(c < cols, errc::parse_error, "row " + std::to_string(r) + " has too many entries");
            const auto colon = tok.find(':');
            require(colon != std::string::npos, errc::parse_error, "entry '" + tok + "' is not re:im");
            char* end = nullptr;
            const double re = std::strtod(tok.c_str(), &end);
            require(end == tok.c_str() + colon, errc::parse_error, "bad real part in '" + tok + "'");
            const char* im_start = tok.c_str() + colon + 1;
            const double im = std::strtod(im_start, &end);
            require(end != im_start && *end == '\0', errc::parse_error, "bad imaginary part in '" + tok + "'");
            a(r, c++) = {re, im};
        }
        require(c == cols, errc::parse_error,
                "row " + std::to_string(r) + " has " + std::to_string(c) + " entries, expected " + std::to_string(cols));
    }
    return a;
}

/// Writes G_d then G_p as two consecutive matrix blocks.
inline void export_matrices(const GeneratorSet& gs, const std::string& path) {
    std::ofstream os(path);
    require(os.good(), errc::io_error, "cannot write " + path);
    write_matrix(os, gs.g_d);
    write_matrix(os, gs.g_p);
    require(os.good(), errc::io_error, "write failed for " + path);
}

/// Reads a G_d/G_p pair and re-checks shapes and (UW-OFDM) the zero word.
inline GeneratorSet import_matrices(const std::string& path, const SystemConfig& cfg, const SelectionMatrices& sel) {
    std::ifstream is(path);
    require(is.good(), errc::io_error, "cannot open " + path);
    GeneratorSet gs;
    gs.kind = GeneratorKind::imported;
    gs.g_d = read_matrix(is);
    gs.g_p = read_matrix(is);
    const auto nu = static_cast<Eigen::Index>(sel.used_indices.size());
    require(gs.g_d.rows() == nu && gs.g_d.cols() == static_cast<Eigen::Index>(cfg.n_data), errc::dimension_mismatch,
            "G_d must be " + std::to_string(nu) + "x" + std::to_string(cfg.n_data));
    require(gs.g_p.rows() == nu && gs.g_p.cols() == static_cast<Eigen::Index>(cfg.n_pilot), errc::dimension_mismatch,
            "G_p must be " + std::to_string(nu) + "x" + std::to_string(cfg.n_pilot));
    if (cfg.variant == Variant::uw_ofdm) {
        const cmat m = compute_constraint_matrix(cfg, sel);
        const double res = std::max(zero_word_residual(m, gs.g_d), zero_word_residual(m, gs.g_p));
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3e", res);
        require(res <= 1e-8, errc::zero_word_violation, std::string("zero-word residual ") + buf);
    }
    gs.scaling_alpha = (gs.g_d.adjoint() * gs.g_d).real().diagonal().mean();
    gs.gram_offdiag_rel = gram_offdiag_rel(gs.g_d, gs.scaling_alpha);
    return gs;
}

// ---------------------------------------------------------------------------

/// A ready-to-use system: config with redundant placement, selection
/// matrices and scaled generators.
struct System {
    SystemConfig cfg;
    SelectionMatrices sel;
    GeneratorSet gs;
    cmat m;  // constraint matrix (empty for CP-OFDM)
};

/// Builds the default system for `variant`. For UW-OFDM `kind` picks the
/// systematic G'_d or the DFT-spread G''_d; the redundant placement comes
/// from optimize_redundant_placement unless cfg already carries one.
inline System make_system(SystemConfig cfg, GeneratorKind kind = GeneratorKind::spread,
                          ScaleMethod method = ScaleMethod::orthonormalize) {
    System sys;
    if (cfg.variant == Variant::cp_ofdm) {
        sys.cfg = cfg;
        sys.sel = build_selection_matrices(cfg);
        sys.gs = scale_generators(build_cpofdm_generators(cfg, sys.sel), cfg, cfg);
        return sys;
    }
    if (cfg.red_indices.empty()) {
        const auto sel0 = build_selection_matrices(cfg);
        cfg.red_indices = optimize_redundant_placement(cfg, sel0).red_indices;
    }
    sys.cfg = cfg;
    sys.sel = build_selection_matrices(cfg);
    sys.m = compute_constraint_matrix(cfg, sys.sel);
    GeneratorSet gs = build_systematic_gd(cfg, sys.sel, sys.m);
    gs.g_p = build_gp(cfg, sys.sel, sys.m);
    SystemConfig cp = build_preset(Variant::cp_ofdm);
    cp.n_data = cfg.n_data + cfg.n_red;  // N'_d for the matching CP-OFDM setup
    gs = scale_generators(gs, cfg, cp, method);
    if (kind == GeneratorKind::spread) gs = build_spread_gd(gs, unitary_dft(cfg.n_data));
    sys.gs = gs;
    return sys;
}

/// Preset systems are memoized per (variant, kind).
inline System make_system(Variant variant, GeneratorKind kind = GeneratorKind::spread) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, System> cache;
    const std::pair<int, int> key{static_cast<int>(variant), static_cast<int>(kind)};
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, make_system(build_preset(variant), kind)).first;
    return it->second;
}

} // namespace uwofdm
