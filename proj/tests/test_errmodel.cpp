#include <gtest/gtest.h>

#include "uwofdm/channel.hpp"
#include "uwofdm/codebook.hpp"
#include "uwofdm/errmodel.hpp"
#include "uwofdm/rxfront.hpp"
#include "uwofdm/txchain.hpp"

using namespace uwofdm;

namespace {

struct Setup {
    System s;
    cvec pilots = default_pilots(4);
    cvec uw_used;
    ChannelRealization ch;
};

Setup setup(Variant v, GeneratorKind k, std::uint64_t ch_seed, bool barker = false) {
    Setup st;
    st.s = make_system(v, k);
    cvec xu;
    if (barker) xu = barker_uw(16, payload_sample_power(st.s.cfg, st.s.gs, st.pilots));
    st.uw_used = uw_spectrum_used(st.s.cfg, st.s.sel, xu);
    st.ch = ch_seed ? draw_channel(100e-9, st.s.cfg, st.s.sel, ch_seed) : flat_channel(st.s.cfg, st.s.sel);
    return st;
}

cvec random_qpsk(std::size_t n, numerics::Rng& rng) {
    const auto c = Constellation::qpsk();
    cvec d(static_cast<Eigen::Index>(n));
    for (auto& x : d) x = c.point(static_cast<unsigned>(rng.uniform_index(4)));
    return d;
}

} // namespace

TEST(PilotGain, IdentityAtZeroCfo) {
    const auto st = setup(Variant::uw_ofdm, GeneratorKind::spread, 5);
    const cmat lam = compute_lambda_stat(CfoModel{0.0, 0}, st.s.cfg, st.s.sel);
    const auto pg = compute_pilot_gain(st.s.gs, st.ch.h_used, lam, st.s.sel, st.pilots, st.uw_used);
    EXPECT_NEAR(pg.phi_p, 0.0, 1e-12);
    const rvec w = pilot_weights(st.ch.h_pilot);
    double expect = 0.0;
    for (Eigen::Index m = 0; m < 4; ++m) expect += w[m] * std::norm(st.pilots[m]);
    EXPECT_NEAR(pg.a_p, expect, 1e-12 * expect);
    EXPECT_NEAR(std::abs(pg.mu), 0.0, 1e-12);
}

// With d = 0 the CPE estimate is exactly the deterministic pilot correlation.
TEST(PilotGain, MatchesCpeEstimatorOffset) {
    for (bool barker : {false, true}) {
        const auto st = setup(Variant::uw_ofdm, GeneratorKind::spread, 0, barker);
        const auto& s = st.s;
        const double eps = 0.1;
        const cmat lam = compute_lambda_stat(CfoModel{eps, 0}, s.cfg, s.sel);
        const auto pg = compute_pilot_gain(s.gs, st.ch.h_used, lam, s.sel, st.pilots, st.uw_used);
        const cvec y = lam * st.ch.h_used.cwiseProduct(s.gs.g_p * st.pilots + st.uw_used);
        EXPECT_NEAR(estimate_cpe(y, st.pilots, st.ch.h_pilot, s.sel), pg.phi_p_eff, 1e-9);
        // and the offset seen over random data is centred on it
        numerics::Rng rng(3);
        const int n = 4000;
        double sum = 0.0, sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const cvec yd = y + lam * st.ch.h_used.cwiseProduct(s.gs.g_d * random_qpsk(32, rng));
            const double e = numerics::wrap_angle(estimate_cpe(yd, st.pilots, st.ch.h_pilot, s.sel) - pg.phi_p_eff);
            sum += e;
            sq += e * e;
        }
        const double mean = sum / n, sd = std::sqrt(sq / n - mean * mean);
        EXPECT_LT(std::abs(mean), 4.0 * sd / std::sqrt(double(n)));
    }
}

TEST(PilotGain, UwShiftsOffset) {
    const auto a = setup(Variant::uw_ofdm, GeneratorKind::spread, 0, false);
    const auto b = setup(Variant::uw_ofdm, GeneratorKind::spread, 0, true);
    const cmat lam = compute_lambda_stat(CfoModel{0.1, 0}, a.s.cfg, a.s.sel);
    const double pa = compute_pilot_gain(a.s.gs, a.ch.h_used, lam, a.s.sel, a.pilots, a.uw_used).phi_p_eff;
    const double pb = compute_pilot_gain(b.s.gs, b.ch.h_used, lam, b.s.sel, b.pilots, b.uw_used).phi_p_eff;
    EXPECT_GT(std::abs(pa - pb), 1e-4);
}

TEST(Ici, VanishesWithoutCfo) {
    const auto st = setup(Variant::uw_ofdm, GeneratorKind::spread, 7);
    const cmat lam = compute_lambda_stat(CfoModel{0.0, 0}, st.s.cfg, st.s.sel);
    const auto ici = compute_ici_decomposition(st.s.gs, st.ch.h_used, lam, st.s.sel, st.pilots, 0.0, 64);
    EXPECT_LT(ici.p_ici.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(ici.sigma_dici_sq.maxCoeff(), 1e-24);
    const auto th = compute_sigma_theta(1.0, pilot_weights(st.ch.h_pilot), st.pilots, ici);
    EXPECT_EQ(th.sigma_theta_sq, 0.0);
}

TEST(Ici, DataInterferenceMatchesMonteCarlo) {
    const auto st = setup(Variant::uw_ofdm, GeneratorKind::spread, 9);
    const auto& s = st.s;
    const cmat lam = compute_lambda_stat(CfoModel{0.1, 0}, s.cfg, s.sel);
    const auto ici = compute_ici_decomposition(s.gs, st.ch.h_used, lam, s.sel, st.pilots, 0.0, 64);
    const cmat lam_h = compute_lambda_h_stat(lam, st.ch.h_used);
    numerics::Rng rng(1);
    rvec acc = rvec::Zero(4);
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const cvec z = lam_h * (s.gs.g_d * random_qpsk(32, rng));
        for (Eigen::Index m = 0; m < 4; ++m) acc[m] += std::norm(z[s.sel.pilot_pos[m]]);
    }
    for (Eigen::Index m = 0; m < 4; ++m) EXPECT_NEAR(acc[m] / n / ici.sigma_dici_sq[m], 1.0, 0.03) << m;
}

TEST(SigmaTheta, LinearInNoise) {
    const auto st = setup(Variant::uw_ofdm, GeneratorKind::spread, 11);
    const auto& s = st.s;
    const cmat lam = compute_lambda_stat(CfoModel{0.1, 0}, s.cfg, s.sel);
    const rvec w = pilot_weights(st.ch.h_pilot);
    auto theta = [&](double sig) {
        return compute_sigma_theta(2.0, w, st.pilots,
                                   compute_ici_decomposition(s.gs, st.ch.h_used, lam, s.sel, st.pilots, sig, 64))
            .sigma_theta_sq;
    };
    const double t0 = theta(0.0), t1 = theta(0.01), t2 = theta(0.02);
    EXPECT_NEAR(t2 - t0, 2.0 * (t1 - t0), 1e-12 * t2);
    EXPECT_GT(t1, t0);
}

TEST(AlphaNoise, IdentityWithoutImpairments) {
    const auto st = setup(Variant::uw_ofdm, GeneratorKind::spread, 0);
    const auto& s = st.s;
    const cmat lam = compute_lambda_stat(CfoModel{0.0, 0}, s.cfg, s.sel);
    CompensationInputs in;
    in.e_lmmse = lmmse_build(s.gs.g_d, st.ch.h_used, 0.0, 64);
    in.x_off = offset_vector(st.ch.h_used, s.gs, st.pilots, st.uw_used);
    const auto an = compute_alpha_and_noise(build_equalizer(Tier::cpe, in), s.gs, st.ch.h_used, lam, 0.0, 0.0, 64);
    EXPECT_LT((an.alpha_prime - cvec::Ones(32)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(an.sigma_w_sq.maxCoeff(), 1e-20);
}

// d^ - alpha' d over random data with the CPE and the pilot offset known.
TEST(AlphaNoise, MatchesMonteCarlo) {
    for (auto tier : {Tier::cpe, Tier::advanced_hermitian}) {
        const auto st = setup(Variant::uw_ofdm, GeneratorKind::spread, 13);
        const auto& s = st.s;
        const double eps = 0.1, sig = 0.002;
        const cmat lam = compute_lambda_stat(CfoModel{eps, 0}, s.cfg, s.sel);
        const auto pg = compute_pilot_gain(s.gs, st.ch.h_used, lam, s.sel, st.pilots, st.uw_used);
        CompensationInputs in;
        in.e_lmmse = lmmse_build(s.gs.g_d, st.ch.h_used, sig, 64);
        in.x_off = offset_vector(st.ch.h_used, s.gs, st.pilots, st.uw_used);
        in.lambda_hat = lam;
        in.phi_p_hat = pg.phi_p_eff;
        const auto eq = build_equalizer(tier, in);
        const auto an = compute_alpha_and_noise(eq, s.gs, st.ch.h_used, lam, pg.phi_p_eff, sig, 64);
        numerics::Rng rng(4);
        cvec sum = cvec::Zero(32);
        rvec acc = rvec::Zero(32);
        const int n = 10000;
        const cvec ypil = lam * st.ch.h_used.cwiseProduct(s.gs.g_p * st.pilots);
        for (int i = 0; i < n; ++i) {
            const cvec d = random_qpsk(32, rng);
            cvec y = ypil + lam * st.ch.h_used.cwiseProduct(s.gs.g_d * d);
            for (auto& v : y) v += rng.complex_normal(64.0 * sig);
            const cvec err = eq.apply(y, pg.phi_p_eff) - an.alpha_prime.cwiseProduct(d);
            sum += err;
            acc += err.cwiseAbs2();
        }
        // variance about the mean: the residual pilot term is deterministic
        const rvec var = acc / n - (sum / n).cwiseAbs2();
        EXPECT_NEAR(var.mean() / an.sigma_w_sq.mean(), 1.0, 0.05) << to_string(tier);
        for (Eigen::Index k = 0; k < 32; ++k) EXPECT_NEAR(var[k] / an.sigma_w_sq[k], 1.0, 0.1) << k;
    }
}

TEST(AlphaNoise, SelfRotationOnlyForUw) {
    for (auto v : {Variant::uw_ofdm, Variant::cp_ofdm}) {
        const auto st = setup(v, v == Variant::uw_ofdm ? GeneratorKind::spread : GeneratorKind::cp_ofdm, 17);
        const auto& s = st.s;
        const cmat lam = compute_lambda_stat(CfoModel{0.1, 0}, s.cfg, s.sel);
        const cvec g = data_self_gain(lmmse_build(s.gs.g_d, st.ch.h_used, 0.0, 64), s.gs, st.ch.h_used, lam);
        double mx = 0.0;
        for (auto x : g) mx = std::max(mx, std::abs(std::arg(x)));
        if (v == Variant::uw_ofdm)
            EXPECT_GT(mx, 1e-3);
        else
            EXPECT_LT(mx, 1e-12);
    }
}

TEST(Calibration, ZeroGrid) {
    const auto st = setup(Variant::uw_ofdm, GeneratorKind::systematic, 0);
    const auto& s = st.s;
    const auto cal = calibrate_offset_slopes(s.cfg, s.sel, s.gs, st.ch.h_used,
                                             lmmse_build(s.gs.g_d, st.ch.h_used, 0.0, 64), st.pilots, st.uw_used,
                                             {0.0, 0.0, 0.0});
    EXPECT_EQ(cal.m_d, 0.0);
    EXPECT_EQ(cal.m_p, 0.0);
}

TEST(Calibration, OffsetMatchesDirectPhases) {
    const auto st = setup(Variant::uw_ofdm, GeneratorKind::systematic, 0);
    const auto& s = st.s;
    const cmat e = lmmse_build(s.gs.g_d, st.ch.h_used, 0.0, 64);
    const auto cal = calibrate_offset_slopes(s.cfg, s.sel, s.gs, st.ch.h_used, e, st.pilots, st.uw_used);
    EXPECT_TRUE(std::isfinite(cal.m_d));
    EXPECT_TRUE(std::isfinite(cal.m_p));
    const cmat lam = compute_lambda_stat(CfoModel{0.1, 0}, s.cfg, s.sel);
    const cvec sg = data_self_gain(e, s.gs, st.ch.h_used, lam);
    double phi_d = 0.0;
    for (auto x : sg) phi_d += std::arg(x);
    phi_d /= 32.0;
    const double phi_p = compute_pilot_gain(s.gs, st.ch.h_used, lam, s.sel, st.pilots, st.uw_used).phi_p_eff;
    const double direct = phi_d - phi_p;
    EXPECT_NEAR((cal.m_d - cal.m_p) * 0.1, direct, 0.1 * std::abs(direct));
}

TEST(Calibration, CpHasNoSelfRotation) {
    const auto st = setup(Variant::cp_ofdm, GeneratorKind::cp_ofdm, 19);
    const auto& s = st.s;
    const auto cal = calibrate_offset_slopes(s.cfg, s.sel, s.gs, st.ch.h_used,
                                             lmmse_build(s.gs.g_d, st.ch.h_used, 0.0, 64), st.pilots, st.uw_used);
    EXPECT_NEAR(cal.m_d, 0.0, 1e-12);
    EXPECT_EQ(cal.residual_d, 0.0);
    EXPECT_TRUE(cal.linear);
}
