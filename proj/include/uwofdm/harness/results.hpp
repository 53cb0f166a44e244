#pragma once

// Result tables, CSV I/O and curve post-processing (dB gains, floor test).

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "uwofdm/harness/experiment.hpp"

namespace uwofdm::harness {

struct ResultRow {
    std::string system;
    std::string tier;
    double epsilon = 0.0;
    double ebn0_db = std::numeric_limits<double>::quiet_NaN();  // BER sweeps only
    double value = 0.0;    // bmse or ber
    double std_err = 0.0;  // standard error over trials
    std::size_t n = 0;     // trials
    std::size_t n_bits = 0;
};

struct ResultTable {
    ExperimentKind kind = ExperimentKind::mse_sweep;
    std::vector<ResultRow> rows;
    std::vector<std::string> warnings;
    double wall_time_s = 0.0;  // reported on the console, never written to CSV
};

/// Fixed-format number so identical runs give identical bytes.
inline std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10e", v);
    return buf;
}

inline std::string to_csv(const ResultTable& t) {
    std::ostringstream os;
    if (t.kind == ExperimentKind::ber_sweep) {
        os << "ebn0_db,system,tier,epsilon,ber,stderr,n_bits\n";
        for (const auto& r : t.rows)
            os << fmt_num(r.ebn0_db) << ',' << r.system << ',' << r.tier << ',' << fmt_num(r.epsilon) << ','
               << fmt_num(r.value) << ',' << fmt_num(r.std_err) << ',' << r.n_bits << '\n';
    } else {
        os << "epsilon,system,tier,bmse,stderr,n\n";
        for (const auto& r : t.rows)
            os << fmt_num(r.epsilon) << ',' << r.system << ',' << r.tier << ',' << fmt_num(r.value) << ','
               << fmt_num(r.std_err) << ',' << r.n << '\n';
    }
    return os.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), errc::io_error, "cannot write " + path);
    os << text;
    require(static_cast<bool>(os), errc::io_error, "write failed for " + path);
}

inline void write_csv(const ResultTable& t, const std::string& path) { write_text(path, to_csv(t)); }

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        require(pos == s.size(), errc::parse_error, "trailing characters in " + what);
        return v;
    } catch (const std::logic_error&) {
        throw error(errc::parse_error, "bad number '" + s + "' in " + what);
    }
}

} // namespace detail

/// Reads a table written by write_csv; the kind follows from the header.
inline ResultTable read_csv(const std::string& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), errc::io_error, "cannot open " + path);
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), errc::parse_error, path + ": empty file");
    ResultTable t;
    if (line == "ebn0_db,system,tier,epsilon,ber,stderr,n_bits") {
        t.kind = ExperimentKind::ber_sweep;
    } else if (line == "epsilon,system,tier,bmse,stderr,n") {
        t.kind = ExperimentKind::mse_sweep;
    } else {
        throw error(errc::parse_error, path + ": unrecognized header '" + line + "'");
    }
    std::size_t ln = 1;
    while (std::getline(is, line)) {
        ++ln;
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        const std::string where = path + ":" + std::to_string(ln);
        ResultRow r;
        if (t.kind == ExperimentKind::ber_sweep) {
            require(f.size() == 7, errc::parse_error, where + ": expected 7 fields");
            r.ebn0_db = detail::parse_double(f[0], where);
            r.system = f[1];
            r.tier = f[2];
            r.epsilon = detail::parse_double(f[3], where);
            r.value = detail::parse_double(f[4], where);
            r.std_err = detail::parse_double(f[5], where);
            r.n_bits = static_cast<std::size_t>(detail::parse_double(f[6], where));
        } else {
            require(f.size() == 6, errc::parse_error, where + ": expected 6 fields");
            r.epsilon = detail::parse_double(f[0], where);
            r.system = f[1];
            r.tier = f[2];
            r.value = detail::parse_double(f[3], where);
            r.std_err = detail::parse_double(f[4], where);
            r.n = static_cast<std::size_t>(detail::parse_double(f[5], where));
        }
        t.rows.push_back(r);
    }
    return t;
}

/// Mean and standard error of per-trial values.
inline std::pair<double, double> mean_stderr(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double s = 0.0;
    for (double x : v) s += x;
    const double m = s / static_cast<double>(v.size());
    if (v.size() < 2) return {m, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()))};
}

struct Curve {
    std::vector<double> x, y;
};

/// Rows of one (system, tier, epsilon) BER curve ordered by Eb/N0.
inline Curve ber_curve(const ResultTable& t, const std::string& system, const std::string& tier, double epsilon) {
    Curve c;
    for (const auto& r : t.rows)
        if (r.system == system && r.tier == tier && std::abs(r.epsilon - epsilon) < 1e-12) {
            c.x.push_back(r.ebn0_db);
            c.y.push_back(r.value);
        }
    return c;
}

/// Eb/N0 where a decreasing BER curve first crosses `target`, by linear
/// interpolation of log10(BER). NaN if it never crosses.
inline double ebn0_at_ber(const Curve& c, double target) {
    for (std::size_t i = 0; i + 1 < c.x.size(); ++i) {
        const double a = c.y[i], b = c.y[i + 1];
        if (a >= target && b < target) {
            // a zero-error point has no log value
            if (b <= 0.0) return a == target ? c.x[i] : std::numeric_limits<double>::quiet_NaN();
            const double la = std::log10(a), lb = std::log10(b), lt = std::log10(target);
            return c.x[i] + (c.x[i + 1] - c.x[i]) * (la - lt) / (la - lb);
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

/// Gain in dB of `better` over `base` at BER `target` (positive: better needs less Eb/N0).
inline double db_gain(const Curve& base, const Curve& better, double target) {
    return ebn0_at_ber(base, target) - ebn0_at_ber(better, target);
}

enum class FloorVerdict { floor, no_floor, inconclusive };

inline const char* to_string(FloorVerdict v) {
    switch (v) {
    case FloorVerdict::floor: return "floor";
    case FloorVerdict::no_floor: return "no_floor";
    case FloorVerdict::inconclusive: return "inconclusive";
    }
    return "unknown";
}

struct FloorTest {
    FloorVerdict verdict = FloorVerdict::inconclusive;
    double drop = 0.0;  // BER(x_max - span) / BER(x_max); +inf if BER(x_max) = 0
};

/// Floor test over the last `span_db` of the curve: a drop below 2x is a
/// floor, above 5x is none.
inline FloorTest classify_floor(const Curve& c, double span_db = 10.0) {
    FloorTest f;
    require(c.x.size() >= 2, errc::invalid_argument, "floor test needs at least two points");
    const double xe = c.x.back();
    const double xs = xe - span_db;
    require(xs >= c.x.front() - 1e-9, errc::invalid_argument, "curve shorter than the floor span");
    double ys = c.y.front();
    for (std::size_t i = 0; i + 1 < c.x.size(); ++i)
        if (c.x[i] <= xs + 1e-12 && xs <= c.x[i + 1] + 1e-12) {
            const double w = (xs - c.x[i]) / (c.x[i + 1] - c.x[i]);
            if (c.y[i] > 0.0 && c.y[i + 1] > 0.0)
                ys = std::pow(10.0, std::log10(c.y[i]) + w * (std::log10(c.y[i + 1]) - std::log10(c.y[i])));
            else
                ys = w < 0.5 ? c.y[i] : c.y[i + 1];
            break;
        }
    const double ye = c.y.back();
    f.drop = ye > 0.0 ? ys / ye : std::numeric_limits<double>::infinity();
    if (ys <= 0.0) f.drop = std::numeric_limits<double>::infinity();
    f.verdict = f.drop < 2.0 ? FloorVerdict::floor : (f.drop > 5.0 ? FloorVerdict::no_floor : FloorVerdict::inconclusive);
    return f;
}

} // namespace uwofdm::harness
