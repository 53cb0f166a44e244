#pragma once

// Monte-Carlo sweeps. Trial t owns one channel realization; every random
// stream is derived from (base_seed, t), and results are reduced in trial
// order, so the output does not depend on the worker count.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "uwofdm/harness/experiment.hpp"
#include "uwofdm/harness/link.hpp"
#include "uwofdm/harness/parallel.hpp"
#include "uwofdm/harness/results.hpp"

namespace uwofdm::harness {

/// Stream identifiers for derive_seed.
namespace stream {
inline constexpr std::uint64_t channel = 1;
inline constexpr std::uint64_t data = 2;
inline constexpr std::uint64_t noise = 3;
inline constexpr std::uint64_t interleaver = 4;
} // namespace stream

inline std::uint64_t packet_seed(std::uint64_t base, std::size_t trial, std::size_t packet, std::uint64_t s) {
    return numerics::derive_seed(numerics::derive_seed(base, trial, s), packet);
}

inline std::vector<Link> make_links(const ExperimentSpec& spec) {
    std::vector<Link> links;
    for (const auto& c : spec.systems) {
        const SystemConfig* cfg = nullptr;
        for (const auto& o : spec.config_overrides)
            if (o.variant == c.variant) cfg = &o;
        links.push_back(make_link(c, spec.uw, spec.tau_rms, spec.symbols_per_packet, cfg));
    }
    return links;
}

inline bool any_needs_calibration(const std::vector<Tier>& tiers) {
    for (auto t : tiers)
        if (needs_calibration(t)) return true;
    return false;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Noise-free BMSE per data symbol versus epsilon.
inline ResultTable run_mse_sweep(const ExperimentSpec& spec) {
    validate(spec);
    const auto t0 = std::chrono::steady_clock::now();
    const auto links = make_links(spec);
    const Constellation cons(spec.constellation);
    const std::size_t ns = links.size(), ne = spec.epsilon_list.size(), nt = spec.tiers.size();
    const bool cal = any_needs_calibration(spec.tiers);

    auto trial = [&](std::size_t t) {
        std::vector<double> theta(ns * ne * nt, 0.0);
        for (std::size_t s = 0; s < ns; ++s) {
            const Link& k = links[s];
            const auto ch = link_channel(k, numerics::derive_seed(spec.base_seed, t, stream::channel));
            const auto rc = make_receiver(k, ch, 0.0, cal);
            for (std::size_t p = 0; p < spec.n_packets; ++p) {
                const cmat d = random_symbols(k.sys.cfg.n_data, k.n_symbols, cons,
                                              packet_seed(spec.base_seed, t, p, stream::data));
                const auto pkt = build_packet(d, k.pilots, k.sys.cfg, k.sys.sel, k.sys.gs, k.x_u);
                for (std::size_t e = 0; e < ne; ++e) {
                    const double eps = spec.epsilon_list[e];
                    const auto rx = rx_frontend(propagate(k, pkt.stream, ch, CfoModel{eps, 0}), k.sys.cfg, k.sys.sel);
                    const auto track = track_cpe(k, rx, ch);
                    for (std::size_t q = 0; q < nt; ++q) {
                        const auto ts = setup_tier(k, rc, spec.tiers[q], track.epsilon_hat, eps, false);
                        theta[(s * ne + e) * nt + q] +=
                            bmse(equalize_packet(ts.eq, rx, track.phi_hat), d) / static_cast<double>(spec.n_packets);
                    }
                }
            }
        }
        return theta;
    };
    const auto per_trial = parallel_map(spec.n_channels, spec.workers, trial);

    ResultTable table;
    table.kind = ExperimentKind::mse_sweep;
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t q = 0; q < nt; ++q)
            for (std::size_t e = 0; e < ne; ++e) {
                std::vector<double> v;
                v.reserve(per_trial.size());
                for (const auto& tr : per_trial) v.push_back(tr[(s * ne + e) * nt + q]);
                const auto [m, se] = mean_stderr(v);
                ResultRow r;
                r.system = links[s].choice.name();
                r.tier = to_string(spec.tiers[q]);
                r.epsilon = spec.epsilon_list[e];
                r.value = m;
                r.std_err = se;
                r.n = v.size();
                table.rows.push_back(r);
            }
    table.wall_time_s = seconds_since(t0);
    return table;
}

/// BER versus Eb/N0 per system, tier and epsilon.
inline ResultTable run_ber_sweep(const ExperimentSpec& spec) {
    validate(spec);
    const auto t0 = std::chrono::steady_clock::now();
    const auto links = make_links(spec);
    const Constellation cons(spec.constellation);
    const double r = spec.coded ? fec::rate_value(spec.rate) : 1.0;
    const std::size_t ns = links.size(), ne = spec.epsilon_list.size(), nq = spec.ebn0_list_db.size(),
                      nt = spec.tiers.size();
    const bool cal = any_needs_calibration(spec.tiers);
    std::vector<PacketCoder> coders;
    for (const auto& k : links)
        coders.emplace_back(k.sys.cfg.n_data, k.n_symbols, cons, spec.rate, spec.coded,
                            numerics::derive_seed(spec.base_seed, 0, stream::interleaver));
    auto idx = [&](std::size_t s, std::size_t e, std::size_t q, std::size_t t) {
        return ((s * ne + e) * nq + q) * nt + t;
    };

    struct Counts {
        std::vector<std::uint64_t> errors;
        std::size_t bits = 0;
    };
    auto trial = [&](std::size_t t) {
        Counts c;
        c.errors.assign(ns * ne * nq * nt, 0);
        std::vector<std::size_t> bits(ns, 0);
        for (std::size_t s = 0; s < ns; ++s) {
            const Link& k = links[s];
            const auto& coder = coders[s];
            const auto ch = link_channel(k, numerics::derive_seed(spec.base_seed, t, stream::channel));
            for (std::size_t p = 0; p < spec.n_packets; ++p) {
                const auto payload = random_bits(coder.payload_bits(), packet_seed(spec.base_seed, t, p, stream::data));
                const auto pkt = build_packet(coder.encode(payload), k.pilots, k.sys.cfg, k.sys.sel, k.sys.gs, k.x_u);
                std::vector<cvec> clean;
                for (double eps : spec.epsilon_list) clean.push_back(propagate(k, pkt.stream, ch, CfoModel{eps, 0}));
                for (std::size_t q = 0; q < nq; ++q) {
                    const double sig = ebn0_to_noise(k, cons.bits_per_symbol(), r, spec.ebn0_list_db[q]);
                    const auto rc = make_receiver(k, ch, sig, cal);
                    for (std::size_t e = 0; e < ne; ++e) {
                        // same noise draw at every (Eb/N0, epsilon) point of this packet
                        numerics::Rng nr(packet_seed(spec.base_seed, t, p, stream::noise));
                        const auto rx = rx_frontend(add_awgn(clean[e], sig, nr), k.sys.cfg, k.sys.sel);
                        const auto track = track_cpe(k, rx, ch);
                        for (std::size_t ti = 0; ti < nt; ++ti) {
                            const auto ts = setup_tier(k, rc, spec.tiers[ti], track.epsilon_hat, spec.epsilon_list[e]);
                            const cmat dh = equalize_packet(ts.eq, rx, track.phi_hat);
                            const auto dec = coder.decode(packet_llrs(dh, ts.model, cons, spec.gh_nodes));
                            std::uint64_t err = 0;
                            for (std::size_t i = 0; i < payload.size(); ++i) err += dec[i] != payload[i];
                            c.errors[idx(s, e, q, ti)] += err;
                        }
                    }
                }
                bits[s] += payload.size();
            }
        }
        // bits per trial differ between systems; store them after the counts
        for (auto b : bits) c.errors.push_back(b);
        return c;
    };
    const auto per_trial = parallel_map(spec.n_channels, spec.workers, trial);

    ResultTable table;
    table.kind = ExperimentKind::ber_sweep;
    const std::size_t base = ns * ne * nq * nt;
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t ti = 0; ti < nt; ++ti)
            for (std::size_t e = 0; e < ne; ++e)
                for (std::size_t q = 0; q < nq; ++q) {
                    std::vector<double> v;
                    std::size_t nbits = 0;
                    for (const auto& tr : per_trial) {
                        const auto b = tr.errors[base + s];
                        nbits += b;
                        v.push_back(static_cast<double>(tr.errors[idx(s, e, q, ti)]) / static_cast<double>(b));
                    }
                    const auto [m, se] = mean_stderr(v);
                    ResultRow row;
                    row.system = links[s].choice.name();
                    row.tier = to_string(spec.tiers[ti]);
                    row.epsilon = spec.epsilon_list[e];
                    row.ebn0_db = spec.ebn0_list_db[q];
                    row.value = m;
                    row.std_err = se;
                    row.n = v.size();
                    row.n_bits = nbits;
                    table.rows.push_back(row);
                    const std::string where = row.system + "/" + row.tier + " eps=" + fmt_num(row.epsilon) +
                                              " EbN0=" + fmt_num(row.ebn0_db);
                    if (m == 0.0)
                        table.warnings.push_back(where + ": no errors, BER below " + fmt_num(3.0 / nbits));
                    else if (se > m / 3.0)
                        table.warnings.push_back(where + ": insufficient trials (stderr " + fmt_num(se) +
                                                 " > BER/3)");
                }
    table.wall_time_s = seconds_since(t0);
    return table;
}

struct ModelCheckRow {
    std::string system;
    std::string channel;  // "flat" or "rand<i>"
    double epsilon = 0.0;
    std::string quantity;  // sigma_theta_sq or sigma_w_sq
    double model = 0.0;
    double empirical = 0.0;
    double ratio = 0.0;
    double lo = 0.0, hi = 0.0;
    bool pass = false;
};

struct ModelCheckTable {
    std::vector<ModelCheckRow> rows;
    std::vector<std::string> warnings;
    bool all_pass = true;
    double wall_time_s = 0.0;
};

inline std::string to_csv(const ModelCheckTable& t) {
    std::ostringstream os;
    os << "system,channel,epsilon,quantity,model,empirical,ratio,lo,hi,pass\n";
    for (const auto& r : t.rows)
        os << r.system << ',' << r.channel << ',' << fmt_num(r.epsilon) << ',' << r.quantity << ','
           << fmt_num(r.model) << ',' << fmt_num(r.empirical) << ',' << fmt_num(r.ratio) << ',' << fmt_num(r.lo)
           << ',' << fmt_num(r.hi) << ',' << (r.pass ? "pass" : "fail") << '\n';
    return os.str();
}

/// Empirical statistics of one (system, channel, epsilon) cell.
struct ModelCheckCell {
    double theta_model = 0.0, theta_emp = 0.0, theta_full = 0.0;
    double w_model = 0.0, w_emp = 0.0;
    double mu_rel = 0.0, validity = 0.0;
};

/// Monte-Carlo check of sigma_theta^2 and sigma_w,k^2 for one channel. The
/// equalizer uses the true epsilon so only the model is under test.
/// Both empirical variances are taken about the sample mean.
inline ModelCheckCell model_check_cell(const Link& k, const ChannelRealization& ch, double eps, Tier tier,
                                       double sigma_t_sq, std::size_t n_packets, std::uint64_t seed) {
    const auto& cfg = k.sys.cfg;
    const auto rc = make_receiver(k, ch, sigma_t_sq, true);
    const auto ts = setup_tier(k, rc, tier, eps, eps);
    const auto& mp = ts.model;
    const Constellation cons = Constellation::qpsk();
    const CfoModel cfo{eps, 0};
    const auto nd = static_cast<Eigen::Index>(cfg.n_data);

    std::vector<double> deltas;
    cvec w_sum = cvec::Zero(nd);
    rvec w_sq = rvec::Zero(nd);
    std::size_t nsym = 0;
    for (std::size_t p = 0; p < n_packets; ++p) {
        const cmat d = random_symbols(cfg.n_data, k.n_symbols, cons, numerics::derive_seed(seed, p, stream::data));
        const auto pkt = build_packet(d, k.pilots, cfg, k.sys.sel, k.sys.gs, k.x_u);
        numerics::Rng nr(numerics::derive_seed(seed, p, stream::noise));
        const auto rx = rx_frontend(propagate(k, pkt.stream, ch, cfo, sigma_t_sq, &nr), cfg, k.sys.sel);
        for (std::size_t l = 0; l < rx.size(); ++l) {
            const double phi_hat = estimate_cpe(rx[l].y_down, k.pilots, ch.h_pilot, k.sys.sel);
            const double delta =
                numerics::wrap_angle(phi_hat - compute_phi_l(cfo, cfg, l) - mp.pilot.phi_p_eff);
            deltas.push_back(delta);
            const cvec dh = ts.eq.apply(rx[l].y_down, phi_hat);
            const cplx rot = std::polar(1.0, -delta);
            for (Eigen::Index i = 0; i < nd; ++i) {
                const cplx w = dh[i] - mp.an.alpha_prime[i] * d(i, static_cast<Eigen::Index>(l)) * rot;
                w_sum[i] += w;
                w_sq[i] += std::norm(w);
            }
            ++nsym;
        }
    }
    ModelCheckCell c;
    double dm = 0.0;
    for (double x : deltas) dm += x;
    dm /= static_cast<double>(deltas.size());
    for (double x : deltas) c.theta_emp += (x - dm) * (x - dm);
    c.theta_emp /= static_cast<double>(deltas.size() - 1);
    for (Eigen::Index i = 0; i < nd; ++i) {
        const double n = static_cast<double>(nsym);
        c.w_emp += (w_sq[i] - std::norm(w_sum[i]) / n) / (n - 1.0);
    }
    c.w_emp /= static_cast<double>(nd);
    c.theta_model = mp.theta.sigma_theta_sq;
    c.theta_full = mp.theta.sigma_theta_sq_full;
    c.w_model = mp.an.sigma_w_sq.mean();
    c.mu_rel = std::abs(mp.pilot.mu);
    c.validity = mp.theta.validity_ratio;
    return c;
}

/// Ratio with the 0/0 case (both below `tiny`) counted as agreement.
inline double safe_ratio(double emp, double model, double tiny = 1e-20) {
    if (std::abs(emp) < tiny && std::abs(model) < tiny) return 1.0;
    if (model == 0.0) return std::numeric_limits<double>::infinity();
    return emp / model;
}

/// Channels: flat, then n_channels - 1 random realizations. Noise-free
/// unless an Eb/N0 is given (first list entry).
inline ModelCheckTable run_model_check(const ExperimentSpec& spec, double theta_tol = 0.2, double w_tol = 0.1) {
    validate(spec);
    const auto t0 = std::chrono::steady_clock::now();
    const auto links = make_links(spec);
    const Tier tier = spec.tiers.front();
    struct Job {
        std::size_t s, c, e;
    };
    std::vector<Job> jobs;
    for (std::size_t s = 0; s < links.size(); ++s)
        for (std::size_t c = 0; c < spec.n_channels; ++c)
            for (std::size_t e = 0; e < spec.epsilon_list.size(); ++e) jobs.push_back({s, c, e});
    const auto cells = parallel_map(jobs.size(), spec.workers, [&](std::size_t i) {
        const auto& j = jobs[i];
        const Link& k = links[j.s];
        Link kk = k;
        if (j.c == 0) kk.tau_rms = 0.0;
        const auto ch = link_channel(kk, numerics::derive_seed(spec.base_seed, j.c, stream::channel));
        double sig = 0.0;
        if (!spec.ebn0_list_db.empty())
            sig = ebn0_to_noise(k, 2, spec.coded ? fec::rate_value(spec.rate) : 1.0, spec.ebn0_list_db.front());
        return model_check_cell(kk, ch, spec.epsilon_list[j.e], tier, sig, spec.n_packets,
                                numerics::derive_seed(spec.base_seed, j.c, 100 + j.e));
    });
    ModelCheckTable t;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto& j = jobs[i];
        const auto& c = cells[i];
        const std::string chname = j.c == 0 ? "flat" : "rand" + std::to_string(j.c);
        ModelCheckRow a;
        a.system = links[j.s].choice.name();
        a.channel = chname;
        a.epsilon = spec.epsilon_list[j.e];
        a.quantity = "sigma_theta_sq";
        a.model = c.theta_model;
        a.empirical = c.theta_emp;
        a.ratio = safe_ratio(c.theta_emp, c.theta_model);
        a.lo = 1.0 - theta_tol;
        a.hi = 1.0 + theta_tol;
        a.pass = a.ratio >= a.lo && a.ratio <= a.hi;
        ModelCheckRow b = a;
        b.quantity = "sigma_w_sq";
        b.model = c.w_model;
        b.empirical = c.w_emp;
        b.ratio = safe_ratio(c.w_emp, c.w_model);
        b.lo = 1.0 - w_tol;
        b.hi = 1.0 + w_tol;
        b.pass = b.ratio >= b.lo && b.ratio <= b.hi;
        t.all_pass = t.all_pass && a.pass && b.pass;
        t.rows.push_back(a);
        t.rows.push_back(b);
        const std::string where = a.system + "/" + chname + " eps=" + fmt_num(a.epsilon);
        if (c.mu_rel >= 0.05) t.warnings.push_back(where + ": |mu| = " + fmt_num(c.mu_rel) + " >= 0.05");
        if (c.validity < 10.0)
            t.warnings.push_back(where + ": linearization validity ratio " + fmt_num(c.validity) + " < 10");
    }
    t.wall_time_s = seconds_since(t0);
    return t;
}

struct CalibrationRow {
    std::string system;
    std::string channel;
    OffsetCalibration cal;
};

struct CalibrationTable {
    std::vector<CalibrationRow> rows;
    std::vector<std::string> warnings;
};

inline std::string to_csv(const CalibrationTable& t) {
    std::ostringstream os;
    os << "system,channel,m_d,m_p,residual_d,residual_p,linear\n";
    for (const auto& r : t.rows)
        os << r.system << ',' << r.channel << ',' << fmt_num(r.cal.m_d) << ',' << fmt_num(r.cal.m_p) << ','
           << fmt_num(r.cal.residual_d) << ',' << fmt_num(r.cal.residual_p) << ',' << (r.cal.linear ? 1 : 0)
           << '\n';
    return os.str();
}

/// Offset-slope calibration (noise-free estimator) on the flat channel and
/// n_channels - 1 random channels.
inline CalibrationTable run_calibration(const ExperimentSpec& spec) {
    validate(spec);
    const auto links = make_links(spec);
    CalibrationTable t;
    for (const auto& k0 : links)
        for (std::size_t c = 0; c < spec.n_channels; ++c) {
            Link k = k0;
            if (c == 0) k.tau_rms = 0.0;
            const auto ch = link_channel(k, numerics::derive_seed(spec.base_seed, c, stream::channel));
            const auto rc = make_receiver(k, ch, 0.0, true);
            CalibrationRow r{k.choice.name(), c == 0 ? "flat" : "rand" + std::to_string(c), rc.cal};
            if (!rc.cal.linear)
                t.warnings.push_back(r.system + "/" + r.channel + ": offset model residual above 5 %");
            t.rows.push_back(std::move(r));
        }
    return t;
}

/// Empirical check of the Eb/N0 convention: per-used-bin signal energy and
/// noise variance measured over `n_symbols` random symbols on a flat channel.
struct SnrCalibration {
    double expected_signal = 0.0, measured_signal = 0.0;  // per used bin
    double expected_noise = 0.0, measured_noise = 0.0;    // per bin, N sigma_t^2
    double expected_snr() const { return expected_signal / expected_noise; }
    double measured_snr() const { return measured_signal / measured_noise; }
};

inline SnrCalibration snr_calibration(const Link& k, unsigned bits_per_symbol, double code_rate, double ebn0_db,
                                      std::size_t n_symbols, std::uint64_t seed) {
    const auto& cfg = k.sys.cfg;
    const double sig = ebn0_to_noise(k, bits_per_symbol, code_rate, ebn0_db);
    const auto nu = static_cast<double>(k.sys.sel.used_indices.size());
    SnrCalibration c;
    c.expected_signal = (k.sys.gs.g_d.squaredNorm() + (k.sys.gs.g_p * k.pilots + k.uw_used).squaredNorm()) / nu;
    c.expected_noise = static_cast<double>(cfg.n_dft) * sig;
    const Constellation cons = bits_per_symbol == 2 ? Constellation::qpsk() : Constellation::qam16();
    const auto flat = flat_channel(cfg, k.sys.sel);
    const cmat d = random_symbols(cfg.n_data, n_symbols, cons, numerics::derive_seed(seed, 0, stream::data));
    const auto pkt = build_packet(d, k.pilots, cfg, k.sys.sel, k.sys.gs, k.x_u);
    const cvec clean = propagate(k, pkt.stream, flat, CfoModel{0.0, 0});
    numerics::Rng nr(numerics::derive_seed(seed, 0, stream::noise));
    const cvec noisy = add_awgn(clean, sig, nr);
    const auto rs = rx_frontend(clean, cfg, k.sys.sel);
    const auto rn = rx_frontend(noisy, cfg, k.sys.sel);
    double es = 0.0, en = 0.0;
    for (std::size_t l = 0; l < rs.size(); ++l) {
        es += rs[l].y_down.squaredNorm();
        en += (rn[l].y_down - rs[l].y_down).squaredNorm();
    }
    const double cnt = nu * static_cast<double>(rs.size());
    c.measured_signal = es / cnt;
    c.measured_noise = en / cnt;
    return c;
}

} // namespace uwofdm::harness
