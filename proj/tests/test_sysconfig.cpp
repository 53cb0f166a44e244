#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "uwofdm/sysconfig.hpp"

using namespace uwofdm;

namespace {

errc code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no exception";
    return errc::invalid_argument;
}

} // namespace

TEST(Preset, UwTableValues) {
    const auto c = build_preset(Variant::uw_ofdm);
    EXPECT_EQ(c.n_dft, 64u);
    EXPECT_EQ(c.n_data, 32u);
    EXPECT_EQ(c.n_zero, 12u);
    EXPECT_EQ(c.n_pilot, 4u);
    EXPECT_EQ(c.n_red, 16u);
    EXPECT_EQ(c.n_guard, 16u);
    EXPECT_EQ(c.zero_indices, (index_set{0, 27, 28, 29, 30, 31, 32, 33, 34, 35, 36, 37}));
    EXPECT_EQ(c.pilot_indices, (index_set{7, 21, 43, 57}));
    EXPECT_DOUBLE_EQ(c.subcarrier_spacing, 312.5e3);
    EXPECT_NEAR(c.dft_duration(), 3.2e-6, 1e-18);
    EXPECT_NEAR(c.sample_period(), 50e-9, 1e-20);
    EXPECT_EQ(c.samples_per_symbol(), 64u);
}

TEST(Preset, CpTableValues) {
    const auto c = build_preset(Variant::cp_ofdm);
    EXPECT_EQ(c.n_data, 48u);
    EXPECT_EQ(c.n_red, 0u);
    EXPECT_EQ(c.n_guard, 16u);
    EXPECT_EQ(c.samples_per_symbol(), 80u);
    EXPECT_NEAR(c.symbol_duration(), 4e-6, 1e-18);
    EXPECT_EQ(c.pilot_indices, build_preset(Variant::uw_ofdm).pilot_indices);
    EXPECT_NO_THROW(validate(c));
}

TEST(Validate, AcceptsPreset) { EXPECT_NO_THROW(validate(build_preset(Variant::uw_ofdm))); }

TEST(Validate, CountMismatch) {
    auto c = build_preset(Variant::uw_ofdm);
    c.n_data = 33;
    EXPECT_EQ(code_of([&] { validate(c); }), errc::dimension_mismatch);
}

TEST(Validate, PilotOutOfRange) {
    auto c = build_preset(Variant::uw_ofdm);
    c.pilot_indices[3] = 70;
    EXPECT_EQ(code_of([&] { validate(c); }), errc::index_out_of_range);
}

TEST(Validate, OverlappingIndices) {
    auto c = build_preset(Variant::uw_ofdm);
    c.pilot_indices[0] = 27;
    EXPECT_EQ(code_of([&] { validate(c); }), errc::overlapping_indices);
}

TEST(Validate, UwNeedsRedEqualGuard) {
    auto c = build_preset(Variant::uw_ofdm);
    c.n_guard = 15;
    EXPECT_EQ(code_of([&] { validate(c); }), errc::dimension_mismatch);
}

TEST(Selection, BShapeAndZeroRows) {
    const auto cfg = build_preset(Variant::uw_ofdm);
    const auto sel = build_selection_matrices(cfg);
    ASSERT_EQ(sel.b.rows(), 64);
    ASSERT_EQ(sel.b.cols(), 52);
    for (Eigen::Index j = 0; j < sel.b.cols(); ++j) EXPECT_DOUBLE_EQ(sel.b.col(j).sum(), 1.0);
    for (auto z : cfg.zero_indices) EXPECT_DOUBLE_EQ(sel.b.row(z).cwiseAbs().sum(), 0.0);
    EXPECT_TRUE((sel.b.transpose() * sel.b).isApprox(rmat::Identity(52, 52)));
}

TEST(Selection, NoZeroCarriersGivesIdentity) {
    SystemConfig c;
    c.variant = Variant::cp_ofdm;
    c.n_dft = 8;
    c.n_data = 6;
    c.n_pilot = 2;
    c.pilot_indices = {1, 5};
    c.subcarrier_spacing = 1.0;
    const auto sel = build_selection_matrices(c);
    EXPECT_TRUE(sel.b.isApprox(rmat::Identity(8, 8)));
}

TEST(Selection, PilotSelectorPicksPilotBins) {
    const auto cfg = build_preset(Variant::uw_ofdm);
    const auto sel = build_selection_matrices(cfg);
    for (std::size_t k = 0; k < cfg.n_dft; ++k) {
        rvec ind = rvec::Zero(64);
        ind[static_cast<Eigen::Index>(k)] = 1.0;
        const rvec got = sel.e_p * sel.b.transpose() * ind;
        const bool is_pilot =
            std::find(cfg.pilot_indices.begin(), cfg.pilot_indices.end(), k) != cfg.pilot_indices.end();
        EXPECT_DOUBLE_EQ(got.sum(), is_pilot ? 1.0 : 0.0) << "bin " << k;
    }
}

TEST(Selection, PermutationOrdersNonPilotThenPilot) {
    const auto sel = build_selection_matrices(build_preset(Variant::cp_ofdm));
    EXPECT_TRUE((sel.p_p.transpose() * sel.p_p).isApprox(rmat::Identity(52, 52)));
    EXPECT_TRUE((sel.e_p * sel.b_p).isZero());
}

TEST(ConfigJson, RoundTripAndOverride) {
    auto c = build_preset(Variant::uw_ofdm);
    c.red_indices = {1, 3, 5, 9, 11, 13, 15, 17, 19, 23, 25, 39, 41, 45, 47, 49};
    const auto back = config_from_json(to_json(c));
    EXPECT_EQ(back.red_indices, c.red_indices);
    EXPECT_EQ(back.pilot_indices, c.pilot_indices);

    const auto path = std::filesystem::temp_directory_path() / "uwofdm_cfg_test.json";
    {
        std::ofstream os(path);
        os << R"({"variant": "cp_ofdm", "symbols_per_packet": 10})";
    }
    const auto loaded = load_config(path.string());
    EXPECT_EQ(loaded.variant, Variant::cp_ofdm);
    EXPECT_EQ(loaded.symbols_per_packet, 10u);
    EXPECT_EQ(loaded.n_data, 48u);
    std::filesystem::remove(path);
}

TEST(ConfigJson, BadFile) {
    EXPECT_EQ(code_of([] { load_config("/nonexistent/cfg.json"); }), errc::io_error);
    EXPECT_EQ(code_of([] { config_from_json(nlohmann::json::parse(R"({"n_dft": "x"})")); }), errc::parse_error);
}
