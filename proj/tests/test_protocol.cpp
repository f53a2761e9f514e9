#include "qbattery/protocol.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace qbattery;

namespace {

ProtocolConfig small_charging(int n = 2) {
    ProtocolConfig c;
    c.chain = SpinChainParams::from_lambda(n, 1.0, 0.5, 0.5, 0.2);
    c.omega = 0.5;
    c.t_max = 4.0;
    c.output_stride = 10;
    return c;
}

MetricsRecord rec(double t, double e, double w) {
    MetricsRecord r;
    r.t = t;
    r.energy = e;
    r.ergotropy = w;
    const auto p = powers(e, w, t);
    r.power_b = p.power_b;
    r.power_w = p.power_w;
    r.ratio_w_over_e = ratio_w_over_e(e, w);
    return r;
}

} // namespace

TEST(ProtocolConfig, RateRules) {
    auto c = small_charging();
    EXPECT_NO_THROW(c.validate());
    c.gamma_minus = 0.01;
    EXPECT_THROW(c.validate(), DomainError);
    c = small_charging();
    c.mode = ProtocolMode::Discharging;
    EXPECT_THROW(c.validate(), DomainError); // gamma_plus still set
    c.gamma_plus = 0.0;
    c.gamma_minus = 0.01;
    EXPECT_NO_THROW(c.validate());
}

TEST(ProtocolConfig, RangeChecks) {
    auto c = small_charging();
    c.omega = -0.1;
    EXPECT_THROW(c.validate(), DomainError);
    c = small_charging();
    c.t_max = 0.0;
    EXPECT_THROW(c.validate(), DomainError);
    c = small_charging();
    c.output_stride = 0;
    EXPECT_THROW(c.validate(), DomainError);
    c = small_charging();
    c.noise = {NoiseChannel{PauliAxis::Z, 1.5}};
    EXPECT_THROW(c.validate(), DomainError);
    c = small_charging();
    c.chain.n_sites = 13;
    EXPECT_THROW(c.validate(), DomainError);
}

TEST(ProtocolConfig, TimeGridUsesStride) {
    auto c = small_charging();
    const auto g = c.time_grid();
    ASSERT_EQ(g.size(), 81u);
    EXPECT_DOUBLE_EQ(g[1], 0.05);
    EXPECT_DOUBLE_EQ(g.back(), 4.0);
}

TEST(Charging, NoDriveNoRatesStaysInGround) {
    auto c = small_charging(3);
    c.omega = 0.0;
    c.gamma_plus = 0.0;
    c.noise = {NoiseChannel{PauliAxis::Z, 0.0}};
    const auto r = run_charging(c);
    for (const auto& m : r.records) {
        EXPECT_NEAR(m.energy, 0.0, 1e-10);
        EXPECT_NEAR(m.ergotropy, 0.0, 1e-10);
    }
}

TEST(Charging, StartsEmptyAndGainsEnergy) {
    const auto r = run_charging(small_charging());
    ASSERT_FALSE(r.records.empty());
    EXPECT_NEAR(r.records.front().energy, 0.0, 1e-12);
    EXPECT_EQ(r.records.front().power_b, 0.0);
    EXPECT_GT(r.records.back().energy, 0.05);
    ASSERT_TRUE(r.records.front().trace_distance.has_value());
    EXPECT_NEAR(*r.records.front().trace_distance, 0.0, 1e-12);
    EXPECT_NEAR(r.delta_e_raw, 2.0 * std::sqrt(1.0625), 1e-12);
    for (const auto& m : r.records) EXPECT_FALSE(m.discharge_ratio.has_value());
}

TEST(Discharging, SingleSiteEnergyDecaysExponentially) {
    ProtocolConfig c;
    c.mode = ProtocolMode::Discharging;
    c.chain = SpinChainParams::from_lambda(1, 1.0, 0.5, 0.5, 0.2);
    c.gamma_plus = 0.0;
    c.gamma_minus = 0.01;
    c.noise = {NoiseChannel{PauliAxis::Z, 0.06}};
    c.t_max = 10.0;
    c.output_stride = 100;
    const auto r = run_discharging(c);
    for (const auto& m : r.records) {
        EXPECT_NEAR(m.energy, std::exp(-0.01 * m.t), 1e-9) << "t=" << m.t;
        ASSERT_TRUE(m.discharge_ratio.has_value());
        EXPECT_NEAR(*m.discharge_ratio, std::exp(-0.01 * m.t), 1e-9);
        EXPECT_FALSE(m.trace_distance.has_value());
    }
}

TEST(Discharging, ClosedSystemKeepsTopState) {
    ProtocolConfig c;
    c.mode = ProtocolMode::Discharging;
    c.chain = SpinChainParams::from_lambda(3, 1.0, 0.5, 0.5, 0.2);
    c.gamma_plus = 0.0;
    c.gamma_minus = 0.0;
    c.noise = {NoiseChannel{PauliAxis::X, 0.0}};
    c.t_max = 3.0;
    c.output_stride = 50;
    const auto r = run_discharging(c);
    for (const auto& m : r.records) {
        EXPECT_NEAR(m.energy, 1.0, 1e-10);
        EXPECT_NEAR(m.ergotropy, 1.0, 1e-10);
        EXPECT_NEAR(*m.discharge_ratio, 1.0, 1e-10);
    }
}

TEST(Discharging, EndOfChargeStartsFromChargedState) {
    ProtocolConfig charge = small_charging();
    ProtocolConfig c = charge;
    c.mode = ProtocolMode::Discharging;
    c.gamma_plus = 0.0;
    c.gamma_minus = 0.01;
    c.discharge_init = DischargeInit::EndOfCharge;
    c.precharge_gamma_plus = charge.gamma_plus;
    c.precharge_t_max = charge.t_max;
    const auto charged = run_charging(charge);
    const auto r = run_discharging(c);
    EXPECT_NEAR(r.records.front().energy, charged.records.back().energy, 1e-10);
}

TEST(Summarize, Fixture) {
    std::vector<MetricsRecord> rs;
    // ratio peaks at t = 2, power at t = 1; flat tail
    rs.push_back(rec(0.0, 0.0, 0.0));
    rs.push_back(rec(1.0, 0.4, 0.2));
    rs.push_back(rec(2.0, 0.5, 0.45));
    rs.push_back(rec(3.0, 0.5, 0.3));
    for (int k = 4; k <= 10; ++k) rs.push_back(rec(k, 0.5, 0.25));
    const auto s = summarize(rs);
    EXPECT_TRUE(s.ratio_defined);
    EXPECT_DOUBLE_EQ(s.ratio_max, 0.9);
    EXPECT_DOUBLE_EQ(s.t_ratio_max, 2.0);
    EXPECT_DOUBLE_EQ(s.p_peak, 0.4);
    EXPECT_DOUBLE_EQ(s.t_p_peak, 1.0);
    // window covers t in [9, 10]
    EXPECT_DOUBLE_EQ(s.e_plateau, 0.5);
    EXPECT_DOUBLE_EQ(s.w_plateau, 0.25);
    EXPECT_DOUBLE_EQ(s.plateau_drift, 0.0);
    EXPECT_TRUE(s.plateau_stable());
}

TEST(Summarize, TiesGoToEarliestSample) {
    std::vector<MetricsRecord> rs{rec(0.0, 0.0, 0.0), rec(1.0, 0.2, 0.1), rec(2.0, 0.4, 0.2)};
    const auto s = summarize(rs);
    EXPECT_DOUBLE_EQ(s.t_ratio_max, 1.0);
    EXPECT_DOUBLE_EQ(s.t_p_peak, 1.0);
}

TEST(Summarize, DriftDetected) {
    std::vector<MetricsRecord> rs;
    for (int k = 0; k <= 20; ++k) rs.push_back(rec(k, 0.1 + 0.02 * k, 0.0));
    EXPECT_FALSE(summarize(rs).plateau_stable());
}

TEST(Summarize, EmptyEnergyHasNoRatio) {
    std::vector<MetricsRecord> rs{rec(0.0, 0.0, 0.0), rec(1.0, 0.0, 0.0)};
    EXPECT_FALSE(summarize(rs).ratio_defined);
    EXPECT_TRUE(summarize({}).ratio_defined == false);
}

TEST(Sweep, AxisValues) {
    const auto c = small_charging();
    EXPECT_EQ(with_axis_value(c, SweepAxis::ChainSize, 5).chain.n_sites, 5);
    EXPECT_THROW(with_axis_value(c, SweepAxis::ChainSize, 2.5), DomainError);
    EXPECT_THROW(with_axis_value(c, SweepAxis::ChainSize, 0), DomainError);
    EXPECT_THROW(with_axis_value(c, SweepAxis::ChainSize, 13), DomainError);
    EXPECT_DOUBLE_EQ(with_axis_value(c, SweepAxis::NoiseStrength, 0.3).noise.at(0).strength, 0.3);
    auto none = c;
    none.noise.clear();
    EXPECT_THROW(with_axis_value(none, SweepAxis::NoiseStrength, 0.3), DomainError);
}

TEST(Sweep, EmptyValuesRejected) { EXPECT_THROW(sweep(small_charging(), SweepAxis::NoiseStrength, {}), DomainError); }

TEST(Sweep, ParallelMatchesSerialAndSorts) {
    const std::vector<double> values{0.3, 0.01, 0.1};
    const auto serial = sweep(small_charging(), SweepAxis::NoiseStrength, values, 1);
    const auto parallel = sweep(small_charging(), SweepAxis::NoiseStrength, values, 3);
    ASSERT_EQ(serial.size(), 3u);
    EXPECT_DOUBLE_EQ(serial[0].value, 0.01);
    EXPECT_DOUBLE_EQ(serial[2].value, 0.3);
    for (std::size_t i = 0; i < 3; ++i) {
        ASSERT_TRUE(serial[i].ok() && parallel[i].ok());
        const auto& a = serial[i].result->records;
        const auto& b = parallel[i].result->records;
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            EXPECT_EQ(a[k].energy, b[k].energy);
            EXPECT_EQ(a[k].ergotropy, b[k].ergotropy);
        }
    }
}

TEST(Sweep, FailuresAreRecordedAndOthersContinue) {
    const auto out = sweep(small_charging(), SweepAxis::NoiseStrength, {0.1, 2.0}, 1);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_TRUE(out[0].ok());
    EXPECT_FALSE(out[1].ok());
    EXPECT_FALSE(out[1].error.empty());
}

TEST(Workers, ParallelForVisitsEveryIndex) {
    std::vector<int> hits(37, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(Calibration, PicksOmegaInsideTheScan) {
    auto c = small_charging();
    c.t_max = 3.0;
    c.output_stride = 20;
    CalibrationTarget t;
    const auto res = calibrate_omega(c, t, 0.25, 2);
    EXPECT_GT(res.omega, 0.0);
    EXPECT_LT(res.omega, 1.0);
    // three coarse points plus the fine refinement around the winner
    EXPECT_GE(res.scan.size(), 3u);
    for (const auto& [w, s] : res.scan) {
        if (std::abs(s.ratio_max - t.ratio) <= t.ratio_tol && !res.ratio_in_band) ADD_FAILURE() << "missed band at " << w;
    }
    EXPECT_THROW(calibrate_omega(c, t, 0.0), DomainError);
    auto d = c;
    d.mode = ProtocolMode::Discharging;
    EXPECT_THROW(calibrate_omega(d, t), DomainError);
}
