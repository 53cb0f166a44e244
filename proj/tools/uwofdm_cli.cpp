// uwofdm_cli: MSE and BER sweeps, offset calibration, model checks and plots.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uwofdm/uwofdm.hpp"

namespace fs = std::filesystem;
using namespace uwofdm;
using namespace uwofdm::harness;

namespace {

struct Common {
    std::string spec_path;
    std::vector<std::string> config_paths;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t trials = 0;
    std::size_t packets = 0;
    std::size_t workers = 0;
    std::string out = ".";
    bool full_scale = false;
    std::vector<std::string> systems;
    std::vector<std::string> tiers;
    std::vector<double> eps;
    std::vector<double> ebn0;
    std::string rate;
    std::string constellation;
    std::string uw;
    double tau = -1.0;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--spec", c.spec_path, "experiment description (JSON)")->check(CLI::ExistingFile);
    app->add_option("--config", c.config_paths, "system configuration (JSON) replacing the preset of its variant")
        ->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "base seed")->each([&](const std::string&) { c.seed_set = true; });
    app->add_option("--trials", c.trials, "channel realizations");
    app->add_option("--packets", c.packets, "packets per channel realization");
    app->add_option("--workers", c.workers, "worker threads");
    app->add_option("--out", c.out, "output directory");
    app->add_flag("--full-scale", c.full_scale, "10^4 channel realizations");
    app->add_option("--system", c.systems, "uw_spread, uw_systematic, cp");
    app->add_option("--tier", c.tiers, "cpe, cpe_offset, advanced_hermitian, advanced_exact");
    app->add_option("--eps", c.eps, "normalized CFO values");
    app->add_option("--ebn0", c.ebn0, "Eb/N0 values in dB");
    app->add_option("--rate", c.rate, "1/2, 3/4 or uncoded");
    app->add_option("--constellation", c.constellation, "qpsk or qam16");
    app->add_option("--uw", c.uw, "zero or barker13");
    app->add_option("--tau-rms", c.tau, "RMS delay spread in seconds, 0 for a flat channel");
}

ExperimentSpec build_spec(const Common& c, ExperimentSpec s) {
    if (!c.spec_path.empty()) {
        const auto kind = s.kind;
        s = load_spec(c.spec_path);
        s.kind = kind;
    }
    for (const auto& p : c.config_paths) s.config_overrides.push_back(load_config(p));
    if (c.seed_set) s.base_seed = c.seed;
    if (c.trials) s.n_channels = c.trials;
    if (c.packets) s.n_packets = c.packets;
    if (c.workers) s.workers = c.workers;
    if (!c.systems.empty()) {
        s.systems.clear();
        for (const auto& x : c.systems) s.systems.push_back(system_from_string(x));
    }
    if (!c.tiers.empty()) {
        s.tiers.clear();
        for (const auto& x : c.tiers) s.tiers.push_back(tier_from_string(x));
    }
    if (!c.eps.empty()) s.epsilon_list = c.eps;
    if (!c.ebn0.empty()) s.ebn0_list_db = c.ebn0;
    if (!c.rate.empty()) {
        s.coded = c.rate != "uncoded";
        if (c.rate == "1/2")
            s.rate = fec::Rate::r1_2;
        else if (c.rate == "3/4")
            s.rate = fec::Rate::r3_4;
        else
            require(c.rate == "uncoded", errc::parse_error, "rate must be 1/2, 3/4 or uncoded");
    }
    if (!c.constellation.empty()) {
        require(c.constellation == "qpsk" || c.constellation == "qam16", errc::parse_error,
                "constellation must be qpsk or qam16");
        s.constellation = c.constellation == "qpsk" ? 4 : 16;
    }
    if (!c.uw.empty()) s.uw = uw_from_string(c.uw);
    if (c.tau >= 0.0) s.tau_rms = c.tau;
    if (c.full_scale) apply_full_scale(s);
    validate(s);
    return s;
}

std::vector<double> range(double lo, double hi, double step) {
    std::vector<double> v;
    for (int i = 0; lo + i * step <= hi + 1e-9; ++i) v.push_back(lo + i * step);
    return v;
}

std::string out_path(const Common& c, const std::string& name) {
    fs::create_directories(c.out);
    return (fs::path(c.out) / name).string();
}

void report(const std::vector<std::string>& warnings, double wall) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    if (wall >= 0.0) std::fprintf(stderr, "wall time %.2f s\n", wall);
}

int run_mse(const Common& c) {
    ExperimentSpec s;
    s.kind = ExperimentKind::mse_sweep;
    s.systems = {system_from_string("uw_spread"), system_from_string("uw_systematic"), system_from_string("cp")};
    s.epsilon_list = range(0.0, 0.2, 0.02);
    s.tiers = {Tier::cpe, Tier::cpe_offset, Tier::advanced_hermitian, Tier::advanced_exact};
    s.n_channels = 200;
    s = build_spec(c, s);
    const auto t = run_mse_sweep(s);
    write_csv(t, out_path(c, "mse.csv"));
    emit_plots(t, out_path(c, "mse.svg"), "BMSE vs epsilon");
    report(t.warnings, t.wall_time_s);
    return 0;
}

int run_ber(const Common& c) {
    ExperimentSpec s;
    s.kind = ExperimentKind::ber_sweep;
    s.systems = {system_from_string("uw_spread"), system_from_string("cp")};
    s.epsilon_list = {0.0, 0.1};
    s.ebn0_list_db = range(0.0, 30.0, 2.0);
    s.tiers = {Tier::cpe_offset};
    s = build_spec(c, s);
    const auto t = run_ber_sweep(s);
    write_csv(t, out_path(c, "ber.csv"));
    emit_plots(t, out_path(c, "ber.svg"), "BER, rate " + rate_name(s.rate, s.coded));
    report(t.warnings, t.wall_time_s);
    return 0;
}

int run_cal(const Common& c) {
    ExperimentSpec s;
    s.kind = ExperimentKind::calibrate;
    s.systems = {system_from_string("uw_spread"), system_from_string("uw_systematic"), system_from_string("cp")};
    s.n_channels = 11;
    s = build_spec(c, s);
    const auto t = run_calibration(s);
    write_text(out_path(c, "calibration.csv"), to_csv(t));
    std::ostringstream os;
    os << "system,ebn0_db,expected_signal,measured_signal,expected_noise,measured_noise\n";
    const double ebn0 = s.ebn0_list_db.empty() ? 10.0 : s.ebn0_list_db.front();
    const unsigned bps = s.constellation == 4 ? 2 : 4;
    for (const auto& k : make_links(s)) {
        const auto r = snr_calibration(k, bps, s.coded ? fec::rate_value(s.rate) : 1.0, ebn0, 2000, s.base_seed);
        os << k.choice.name() << ',' << fmt_num(ebn0) << ',' << fmt_num(r.expected_signal) << ','
           << fmt_num(r.measured_signal) << ',' << fmt_num(r.expected_noise) << ',' << fmt_num(r.measured_noise)
           << '\n';
    }
    write_text(out_path(c, "snr_calibration.csv"), os.str());
    report(t.warnings, -1.0);
    return 0;
}

int run_check(const Common& c) {
    ExperimentSpec s;
    s.kind = ExperimentKind::model_check;
    s.systems = {system_from_string("uw_spread"), system_from_string("uw_systematic"), system_from_string("cp")};
    s.epsilon_list = {0.02, 0.05, 0.1};
    s.tiers = {Tier::cpe_offset};
    s.n_channels = 11;
    s.n_packets = 50;
    s = build_spec(c, s);
    const auto t = run_model_check(s);
    write_text(out_path(c, "model_check.csv"), to_csv(t));
    std::size_t failed = 0;
    for (const auto& r : t.rows)
        if (!r.pass) {
            ++failed;
            std::fprintf(stderr, "FAIL %s %s eps=%g %s ratio %.4f not in [%.2f, %.2f]\n", r.system.c_str(),
                         r.channel.c_str(), r.epsilon, r.quantity.c_str(), r.ratio, r.lo, r.hi);
        }
    report(t.warnings, t.wall_time_s);
    std::fprintf(stderr, "%zu of %zu checks failed\n", failed, t.rows.size());
    return t.all_pass ? 0 : 1;
}

int run_plot(const std::string& in, const std::string& out, const std::string& title,
             const std::vector<std::string>& systems, const std::vector<std::string>& tiers) {
    const auto t = read_csv(in);
    auto contains = [](const std::vector<std::string>& v, const std::string& x) {
        return v.empty() || std::find(v.begin(), v.end(), x) != v.end();
    };
    emit_plots(t, out, title, [&](const ResultRow& r) { return contains(systems, r.system) && contains(tiers, r.tier); });
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"UW-OFDM / CP-OFDM link simulator under carrier frequency offset"};
    app.require_subcommand(1);
    Common c;
    auto* mse = app.add_subcommand("mse-sweep", "noise-free BMSE versus epsilon");
    auto* ber = app.add_subcommand("ber-sweep", "coded or uncoded BER versus Eb/N0");
    auto* cal = app.add_subcommand("calibrate", "offset slopes and the Eb/N0 convention");
    auto* chk = app.add_subcommand("model-check", "Monte-Carlo check of the error model");
    for (auto* s : {mse, ber, cal, chk}) add_common(s, c);

    std::string plot_in, plot_out, plot_title;
    std::vector<std::string> plot_sys, plot_tier;
    auto* plot = app.add_subcommand("plot", "SVG plot of a result CSV");
    plot->add_option("--in", plot_in, "result CSV")->required()->check(CLI::ExistingFile);
    plot->add_option("--out", plot_out, "SVG path")->required();
    plot->add_option("--title", plot_title);
    plot->add_option("--system", plot_sys);
    plot->add_option("--tier", plot_tier);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*mse) return run_mse(c);
        if (*ber) return run_ber(c);
        if (*cal) return run_cal(c);
        if (*chk) return run_check(c);
        if (*plot) return run_plot(plot_in, plot_out, plot_title, plot_sys, plot_tier);
    } catch (const uwofdm::error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
