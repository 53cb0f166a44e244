#include <gtest/gtest.h>

#include "uwofdm/codebook.hpp"
#include "uwofdm/txchain.hpp"

using namespace uwofdm;

namespace {

cvec random_cvec(std::size_t n, std::uint64_t seed) {
    numerics::Rng rng(seed);
    cvec x(static_cast<Eigen::Index>(n));
    for (auto& v : x) v = rng.complex_normal(1.0);
    return x;
}

} // namespace

TEST(AssembleUw, ZeroInputZeroSymbol) {
    const System s = make_system(Variant::uw_ofdm);
    const numerics::DftPlan plan(64);
    const auto sym = assemble_symbol(cvec::Zero(32), cvec::Zero(4), s.gs, s.cfg, s.sel, {}, plan);
    EXPECT_EQ(sym.time.size(), 64);
    EXPECT_EQ(sym.time.cwiseAbs().maxCoeff(), 0.0);
}

TEST(AssembleUw, ZeroTailForRandomInput) {
    const System s = make_system(Variant::uw_ofdm);
    const numerics::DftPlan plan(64);
    for (int i = 0; i < 50; ++i) {
        const auto sym = assemble_symbol(random_cvec(32, i), random_cvec(4, 100 + i), s.gs, s.cfg, s.sel, {}, plan);
        EXPECT_LT(sym.time.tail(16).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(AssembleUw, BarkerTailExact) {
    const System s = make_system(Variant::uw_ofdm);
    const numerics::DftPlan plan(64);
    const cvec pilots = default_pilots(4);
    const cvec xu = barker_uw(16, payload_sample_power(s.cfg, s.gs, pilots));
    const auto sym = assemble_symbol(random_cvec(32, 1), pilots, s.gs, s.cfg, s.sel, xu, plan);
    EXPECT_EQ((sym.time.tail(16) - xu).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(xu[13], cplx(0.0, 0.0));
    EXPECT_NEAR(xu.squaredNorm() / 16.0, payload_sample_power(s.cfg, s.gs, pilots), 1e-12);
}

TEST(AssembleCp, PrefixIsCyclic) {
    const System s = make_system(Variant::cp_ofdm);
    const numerics::DftPlan plan(64);
    const auto sym = assemble_cp_symbol(random_cvec(48, 2), default_pilots(4), s.gs, s.cfg, s.sel, plan);
    ASSERT_EQ(sym.time.size(), 80);
    EXPECT_EQ((sym.time.head(16) - sym.time.tail(16)).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(s.cfg.samples_per_symbol(), 80u);
}

TEST(AssembleCp, UnitDataLandsOnFirstDataCarrier) {
    const System s = make_system(Variant::cp_ofdm);
    const numerics::DftPlan plan(64);
    cvec d = cvec::Zero(48);
    d[0] = 1.0;
    const auto sym = assemble_cp_symbol(d, cvec::Zero(4), s.gs, s.cfg, s.sel, plan);
    Eigen::Index k;
    sym.freq.cwiseAbs().maxCoeff(&k);
    EXPECT_EQ(k, 1);  // bin 0 is a zero carrier
    EXPECT_EQ(sym.freq.cwiseAbs().sum(), 1.0);
}

TEST(Packet, PayloadBitsAndLength) {
    const System s = make_system(Variant::uw_ofdm);
    const PacketCoder coder(32, 200, Constellation::qpsk(), fec::Rate::r1_2, true, 5);
    EXPECT_EQ(coder.payload_bits(), 6394u);
    const auto pkt = build_packet(coder.encode(fec::bitvec(6394, 0)), default_pilots(4), s.cfg, s.sel, s.gs);
    EXPECT_EQ(pkt.stream.size(), 12800);
    EXPECT_GT(pkt.stream.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(pkt.symbols.size(), 200u);
}

TEST(Packet, CpLength) {
    const System s = make_system(Variant::cp_ofdm);
    const auto pkt = build_packet(cmat::Zero(48, 10), default_pilots(4), s.cfg, s.sel, s.gs);
    EXPECT_EQ(pkt.stream.size(), 800);
}

TEST(Packet, CoderNoiselessRoundTrip) {
    for (auto order : {4u, 16u})
        for (auto rate : {fec::Rate::r1_2, fec::Rate::r3_4}) {
            const Constellation c(order);
            const PacketCoder coder(32, 20, c, rate, true, 9);
            numerics::Rng rng(order * 10 + static_cast<int>(rate));
            fec::bitvec u(coder.payload_bits());
            for (auto& b : u) b = static_cast<std::uint8_t>(rng.bit());
            const cmat d = coder.encode(u);
            std::vector<double> llr;
            for (Eigen::Index l = 0; l < d.cols(); ++l)
                for (Eigen::Index k = 0; k < d.rows(); ++k) {
                    const auto v = demap_llr_awgn(d(k, l), 1.0, 0.1, c);
                    llr.insert(llr.end(), v.begin(), v.end());
                }
            EXPECT_EQ(coder.decode(llr), u);
        }
}

TEST(SymbolEnergy, MatchesEmpiricalAverage) {
    for (auto v : {Variant::uw_ofdm, Variant::cp_ofdm}) {
        const System s = make_system(v);
        const cvec pilots = default_pilots(4);
        const Constellation c = Constellation::qpsk();
        numerics::Rng rng(3);
        const std::size_t n = 4000;
        cmat d(static_cast<Eigen::Index>(s.cfg.n_data), static_cast<Eigen::Index>(n));
        for (auto& x : d.reshaped()) x = c.point(static_cast<unsigned>(rng.uniform_index(4)));
        const auto pkt = build_packet(d, pilots, s.cfg, s.sel, s.gs);
        const double emp = pkt.stream.squaredNorm() / static_cast<double>(n);
        EXPECT_NEAR(emp / symbol_energy(s.cfg, s.sel, s.gs, pilots, {}), 1.0, 0.02) << to_string(v);
    }
}

// The data generators are scaled so UW-OFDM and CP-OFDM carry the same mean
// data energy per symbol.
TEST(SymbolEnergy, DataEnergyMatchesCp) {
    const System uw = make_system(Variant::uw_ofdm);
    const System cp = make_system(Variant::cp_ofdm);
    EXPECT_NEAR(uw.gs.g_d.squaredNorm(), cp.gs.g_d.squaredNorm(), 1e-9);
}
