#include <gtest/gtest.h>

#include "uwofdm/channel.hpp"
#include "uwofdm/codebook.hpp"
#include "uwofdm/errmodel.hpp"
#include "uwofdm/rxfront.hpp"
#include "uwofdm/txchain.hpp"

using namespace uwofdm;

namespace {

cmat qpsk_data(std::size_t nd, std::size_t l, std::uint64_t seed) {
    const auto c = Constellation::qpsk();
    numerics::Rng rng(seed);
    cmat d(static_cast<Eigen::Index>(nd), static_cast<Eigen::Index>(l));
    for (auto& x : d.reshaped()) x = c.point(static_cast<unsigned>(rng.uniform_index(4)));
    return d;
}

struct Scenario {
    System s;
    cvec pilots = default_pilots(4);
    cvec xu;
    ChannelRealization ch;
};

Scenario scenario(Variant v, GeneratorKind k, bool barker, std::uint64_t ch_seed) {
    Scenario sc;
    sc.s = make_system(v, k);
    if (barker) sc.xu = barker_uw(16, payload_sample_power(sc.s.cfg, sc.s.gs, sc.pilots));
    sc.ch = ch_seed ? draw_channel(100e-9, sc.s.cfg, sc.s.sel, ch_seed) : flat_channel(sc.s.cfg, sc.s.sel);
    return sc;
}

std::vector<RxSymbol> receive(const Scenario& sc, const cmat& d, double eps) {
    const auto pkt = build_packet(d, sc.pilots, sc.s.cfg, sc.s.sel, sc.s.gs, sc.xu);
    const cvec y = apply_cfo_time(apply_multipath(pkt.stream, sc.ch, sc.xu), CfoModel{eps, 0}, 64);
    return rx_frontend(y, sc.s.cfg, sc.s.sel);
}

// theta_d for one tier with CPE tracking from the pilots.
double tier_bmse(const Scenario& sc, Tier tier, double eps, std::size_t l = 60) {
    const auto& s = sc.s;
    const cmat d = qpsk_data(s.cfg.n_data, l, 17);
    const auto rx = receive(sc, d, eps);
    std::vector<double> phi;
    for (const auto& r : rx) phi.push_back(estimate_cpe(r.y_down, sc.pilots, sc.ch.h_pilot, s.sel));
    const double eh = estimate_epsilon(phi, s.cfg);
    const cvec uw_used = uw_spectrum_used(s.cfg, s.sel, sc.xu);
    CompensationInputs in;
    in.e_lmmse = lmmse_build(s.gs.g_d, sc.ch.h_used, 0.0, 64);
    in.x_off = offset_vector(sc.ch.h_used, s.gs, sc.pilots, uw_used);
    const auto cal = calibrate_offset_slopes(s.cfg, s.sel, s.gs, sc.ch.h_used, in.e_lmmse, sc.pilots, uw_used);
    const cmat lam = compute_lambda_stat(CfoModel{eh, 0}, s.cfg, s.sel);
    if (tier == Tier::cpe_offset) in.phi_off_hat = (cal.m_d - cal.m_p) * eh;
    if (is_advanced(tier)) {
        in.lambda_hat = lam;
        in.phi_p_hat = cal.m_p * eh;
    }
    const auto eq = build_equalizer(tier, in);
    cmat dh(d.rows(), d.cols());
    for (std::size_t i = 0; i < rx.size(); ++i) dh.col(static_cast<Eigen::Index>(i)) = eq.apply(rx[i].y_down, phi[i]);
    return bmse(dh, d);
}

} // namespace

TEST(Frontend, UwLoopback) {
    const auto sc = scenario(Variant::uw_ofdm, GeneratorKind::spread, true, 0);
    const cmat d = qpsk_data(32, 5, 1);
    const auto rx = receive(sc, d, 0.0);
    ASSERT_EQ(rx.size(), 5u);
    const cvec uw = uw_spectrum_used(sc.s.cfg, sc.s.sel, sc.xu);
    for (std::size_t l = 0; l < rx.size(); ++l) {
        const cvec expect = sc.s.gs.g_d * d.col(static_cast<Eigen::Index>(l)) + sc.s.gs.g_p * sc.pilots + uw;
        EXPECT_LT((rx[l].y_down - expect).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Frontend, CpLoopback) {
    const auto sc = scenario(Variant::cp_ofdm, GeneratorKind::cp_ofdm, false, 0);
    const cmat d = qpsk_data(48, 4, 2);
    const auto rx = receive(sc, d, 0.0);
    for (std::size_t l = 0; l < rx.size(); ++l) {
        const cvec expect = sc.s.gs.g_d * d.col(static_cast<Eigen::Index>(l)) + sc.s.gs.g_p * sc.pilots;
        EXPECT_LT((rx[l].y_down - expect).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Frontend, SymbolCount) {
    const auto sc = scenario(Variant::uw_ofdm, GeneratorKind::spread, false, 0);
    EXPECT_EQ(receive(sc, qpsk_data(32, 200, 3), 0.0).size(), 200u);
    EXPECT_THROW(rx_frontend(cvec::Zero(100), sc.s.cfg, sc.s.sel), error);
}

TEST(Cpe, ZeroWithoutCfo) {
    const auto sc = scenario(Variant::uw_ofdm, GeneratorKind::spread, false, 0);
    for (const auto& r : receive(sc, qpsk_data(32, 10, 4), 0.0))
        EXPECT_NEAR(estimate_cpe(r.y_down, sc.pilots, sc.ch.h_pilot, sc.s.sel), 0.0, 1e-9);
}

// With the same data in every symbol the pilot disturbance is the same, so
// phi^_l - phi_l is constant.
TEST(Cpe, ConstantOffsetForRepeatedData) {
    const auto sc = scenario(Variant::uw_ofdm, GeneratorKind::spread, false, 0);
    const cmat d = qpsk_data(32, 1, 5).replicate(1, 50);
    const auto rx = receive(sc, d, 0.1);
    std::vector<double> off;
    for (std::size_t l = 0; l < rx.size(); ++l)
        off.push_back(numerics::wrap_angle(estimate_cpe(rx[l].y_down, sc.pilots, sc.ch.h_pilot, sc.s.sel) -
                                           compute_phi_l(CfoModel{0.1, 0}, sc.s.cfg, l)));
    double m = 0.0, v = 0.0;
    for (double x : off) m += x;
    m /= off.size();
    for (double x : off) v += (x - m) * (x - m);
    EXPECT_LT(std::sqrt(v / off.size()), 1e-6);
}

TEST(Cpe, FadedPilotHasNoWeight) {
    const auto sc = scenario(Variant::uw_ofdm, GeneratorKind::spread, false, 0);
    const auto rx = receive(sc, qpsk_data(32, 1, 6), 0.05);
    cvec h = sc.ch.h_pilot;
    double prev = estimate_cpe(rx[0].y_down, sc.pilots, h, sc.s.sel);
    for (double g : {0.5, 0.1, 1e-3, 0.0}) {
        h[2] = g;
        const double cur = estimate_cpe(rx[0].y_down, sc.pilots, h, sc.s.sel);
        EXPECT_TRUE(std::isfinite(cur));
        EXPECT_LT(std::abs(cur - prev), 0.1);
        prev = cur;
    }
}

TEST(Epsilon, NoiseFreeEstimate) {
    const auto sc = scenario(Variant::uw_ofdm, GeneratorKind::spread, false, 0);
    const cmat d = qpsk_data(32, 1, 7).replicate(1, 200);
    const auto rx = receive(sc, d, 0.1);
    std::vector<double> phi;
    for (const auto& r : rx) phi.push_back(estimate_cpe(r.y_down, sc.pilots, sc.ch.h_pilot, sc.s.sel));
    EXPECT_NEAR(estimate_epsilon(phi, sc.s.cfg), 0.1, 1e-6);
}

TEST(Epsilon, TwoPointSlope) {
    const auto cfg = build_preset(Variant::uw_ofdm);
    const double step = 2.0 * numerics::pi * 0.07;
    EXPECT_NEAR(estimate_epsilon({0.3, 0.3 + step}, cfg), 0.07, 1e-12);
    EXPECT_THROW(estimate_epsilon({0.3}, cfg), error);
}

TEST(Epsilon, UnwrapsAcrossPi) {
    const auto cfg = build_preset(Variant::uw_ofdm);
    std::vector<double> phi;
    for (int l = 0; l < 40; ++l) phi.push_back(numerics::wrap_angle(0.2 + 2.0 * numerics::pi * 0.3 * l));
    EXPECT_NEAR(estimate_epsilon(phi, cfg), 0.3, 1e-12);
}

TEST(Lmmse, NoiseFreeLeftInverse) {
    const auto sc = scenario(Variant::uw_ofdm, GeneratorKind::spread, false, 0);
    const cmat e = lmmse_build(sc.s.gs.g_d, sc.ch.h_used, 0.0, 64);
    EXPECT_LT((e * sc.ch.h_used.asDiagonal() * sc.s.gs.g_d - cmat::Identity(32, 32)).cwiseAbs().maxCoeff(), 1e-8);
    const auto cp = scenario(Variant::cp_ofdm, GeneratorKind::cp_ofdm, false, 0);
    const cmat ecp = lmmse_build(cp.s.gs.g_d, cp.ch.h_used, 0.0, 64);
    EXPECT_LT((ecp - cp.s.gs.g_d.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Lmmse, LargeNoiseShrinks) {
    const auto sc = scenario(Variant::uw_ofdm, GeneratorKind::spread, false, 3);
    const double n1 = lmmse_build(sc.s.gs.g_d, sc.ch.h_used, 1.0, 64).norm();
    const double n2 = lmmse_build(sc.s.gs.g_d, sc.ch.h_used, 1e6, 64).norm();
    EXPECT_LT(n2, n1);
    EXPECT_LT(n2, 1e-5);
}

TEST(Compensation, ExactWithoutCfo) {
    const auto sc = scenario(Variant::uw_ofdm, GeneratorKind::spread, false, 0);
    EXPECT_LT(tier_bmse(sc, Tier::cpe, 0.0), 1e-16);
}

TEST(Compensation, CpeFormsAgree) {
    const auto sc = scenario(Variant::uw_ofdm, GeneratorKind::spread, true, 8);
    const cvec uw = uw_spectrum_used(sc.s.cfg, sc.s.sel, sc.xu);
    CompensationInputs in;
    in.e_lmmse = lmmse_build(sc.s.gs.g_d, sc.ch.h_used, 0.01, 64);
    in.x_off = offset_vector(sc.ch.h_used, sc.s.gs, sc.pilots, uw);
    in.phi_off_hat = 0.05;
    in.phi_p_hat = 0.02;
    in.lambda_hat = compute_lambda_stat(CfoModel{0.1, 0}, sc.s.cfg, sc.s.sel);
    const auto rx = receive(sc, qpsk_data(32, 1, 9), 0.1);
    const cvec a = build_equalizer(Tier::cpe_offset, in).apply(rx[0].y_down, 0.4);
    const cvec b = compensate_cpe(rx[0].y_down, 0.4, 0.05, in.x_off, in.e_lmmse);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
    const cvec c = build_equalizer(Tier::advanced_hermitian, in).apply(rx[0].y_down, 0.4);
    const cvec c2 =
        compensate_advanced(rx[0].y_down, 0.4, 0.02, in.lambda_hat, in.x_off, in.e_lmmse, false);
    EXPECT_LT((c - c2).cwiseAbs().maxCoeff(), 1e-12);
}

// Perfect knowledge of epsilon, phi_l and the pilot offset inverts the model.
TEST(Compensation, ExactInverseWithPerfectPhase) {
    const auto sc = scenario(Variant::uw_ofdm, GeneratorKind::spread, false, 12);
    const auto& s = sc.s;
    const double eps = 0.1;
    const cmat d = qpsk_data(32, 20, 10);
    const auto rx = receive(sc, d, eps);
    const cmat lam = compute_lambda_stat(CfoModel{eps, 0}, s.cfg, s.sel);
    CompensationInputs in;
    in.e_lmmse = lmmse_build(s.gs.g_d, sc.ch.h_used, 0.0, 64);
    in.x_off = offset_vector(sc.ch.h_used, s.gs, sc.pilots, cvec::Zero(52));
    in.lambda_hat = lam;
    const auto eq = build_equalizer(Tier::advanced_exact, in);
    cmat dh(d.rows(), d.cols());
    for (std::size_t l = 0; l < rx.size(); ++l)
        dh.col(static_cast<Eigen::Index>(l)) = eq.apply(rx[l].y_down, compute_phi_l(CfoModel{eps, 0}, s.cfg, l));
    EXPECT_LT(bmse(dh, d), 1e-10);
}

TEST(Compensation, AdvancedBeatsCpe) {
    for (auto v : {Variant::uw_ofdm, Variant::cp_ofdm}) {
        const auto sc = scenario(v, v == Variant::uw_ofdm ? GeneratorKind::spread : GeneratorKind::cp_ofdm, false, 31);
        EXPECT_LT(tier_bmse(sc, Tier::advanced_hermitian, 0.1), tier_bmse(sc, Tier::cpe, 0.1)) << to_string(v);
    }
}

TEST(Compensation, OffsetTierHelpsWithUw) {
    const auto sc = scenario(Variant::uw_ofdm, GeneratorKind::spread, true, 41);
    EXPECT_LE(tier_bmse(sc, Tier::cpe_offset, 0.1), tier_bmse(sc, Tier::cpe, 0.1));
}

TEST(Compensation, UwBeatsCpUnderCpe) {
    const auto uw = scenario(Variant::uw_ofdm, GeneratorKind::spread, false, 0);
    const auto cp = scenario(Variant::cp_ofdm, GeneratorKind::cp_ofdm, false, 0);
    EXPECT_LT(tier_bmse(uw, Tier::cpe, 0.1), tier_bmse(cp, Tier::cpe, 0.1));
}

TEST(Bmse, Arithmetic) {
    const cmat d = qpsk_data(32, 1, 1);
    EXPECT_EQ(bmse(d, d), 0.0);
    cmat e = d;
    e(5, 0) += 1.0;
    EXPECT_NEAR(bmse(e, d), 1.0 / 32.0, 1e-15);
    EXPECT_THROW(bmse(cmat(d.topRows(3)), d), error);
}
