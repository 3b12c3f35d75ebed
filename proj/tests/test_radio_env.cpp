#include <doctest.h>

#include "jamaware/metrics.hpp"
#include "jamaware/radio_env.hpp"

#include <cmath>

using namespace jamaware;

namespace {
const std::vector<Modulation> kAll{Modulation::BPSK,  Modulation::QPSK,  Modulation::PSK8,  Modulation::QAM16,
                                   Modulation::PSK32, Modulation::QAM64, Modulation::QAM256};
}

TEST_CASE("BPSK maps 0 and 1 to the two antipodal points") {
    const auto s = modulate({0, 1}, {Modulation::BPSK});
    REQUIRE(s.size() == 2);
    CHECK(s[0] == cplx(-1.0, 0.0));
    CHECK(s[1] == cplx(1.0, 0.0));
}

TEST_CASE("every constellation has unit average power") {
    for (auto m : kAll) {
        double p = 0.0;
        for (const auto& c : constellation({m})) p += std::norm(c);
        CHECK(p / constellation({m}).size() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("QPSK is Gray coded: nearest neighbours differ in one bit") {
    const auto s = modulate({0, 0, 0, 1, 1, 0, 1, 1}, {Modulation::QPSK});
    REQUIRE(s.size() == 4);
    double dmin = 1e9;
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) dmin = std::min(dmin, std::abs(s[a] - s[b]));
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b)
            if (std::abs(std::abs(s[a] - s[b]) - dmin) < 1e-12) CHECK(std::popcount(unsigned(a ^ b)) == 1);
    CHECK(demodulate(s, {Modulation::QPSK}) == Bits{0, 0, 0, 1, 1, 0, 1, 1});
}

TEST_CASE("noiseless round trip for every scheme") {
    auto rng = make_rng(3);
    std::bernoulli_distribution coin(0.5);
    for (auto m : kAll) {
        const ModulationScheme s{m};
        Bits bits(static_cast<std::size_t>(s.bits_per_symbol() * 200));
        for (auto& b : bits) b = coin(rng);
        CHECK(demodulate(modulate(bits, s), s) == bits);
    }
}

TEST_CASE("QPSK BER over AWGN follows the Gray-coded curve") {
    const ModulationScheme q{Modulation::QPSK};
    const double snr = db_to_linear(10.0);
    auto rng = make_rng(1);
    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> g(0.0, std::sqrt(1.0 / snr / 2.0));
    Bits bits(100000);
    for (auto& b : bits) b = coin(rng);
    auto sym = modulate(bits, q);
    for (auto& s : sym) s += cplx(g(rng), g(rng));
    const double measured = ber(demodulate(sym, q), bits);
    const double analytic = q_function(std::sqrt(2.0 * snr / 2.0));
    CHECK(measured == doctest::Approx(analytic).epsilon(0.2));
}

TEST_CASE("a symbol halfway between the BPSK points decodes to 0") {
    CHECK(demodulate({cplx(0.0, 0.0)}, {Modulation::BPSK}) == Bits{0});
}

TEST_CASE("RMa-AV path loss") {
    ChannelConfig cfg;
    cfg.building_height = 5.0;
    cfg.carrier_freq_ghz = 2.0;
    const Eigen::Vector3d o(0, 0, 0);
    SUBCASE("matches a direct evaluation at kappa 5, 2 GHz, 100 m") {
        CHECK(path_loss_rma_av(o, {100, 0, 0}, cfg) == doctest::Approx(79.12216610019549).epsilon(1e-12));
    }
    SUBCASE("grows with distance") {
        CHECK(path_loss_rma_av(o, {200, 0, 0}, cfg) > path_loss_rma_av(o, {100, 0, 0}, cfg));
    }
    SUBCASE("the distance exponent saturates for tall buildings") {
        for (double kappa : {400.0, 500.0}) {
            cfg.building_height = kappa;
            const double diff = path_loss_rma_av(o, {1000, 0, 0}, cfg) - path_loss_rma_av(o, {10, 0, 0}, cfg) -
                                0.002 * std::log10(kappa) * 990.0;
            CHECK(diff == doctest::Approx(20.0 * 2.0 + 10.0 * 2.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("CtU-AD path loss") {
    ChannelConfig cfg;
    cfg.ctu.shadowing = false;
    auto rng = make_rng(1);
    CHECK(path_loss_ctu_ad(200.0, {1.5, 100.0}, cfg, rng) == doctest::Approx(90.13540372672136).epsilon(1e-12));

    const double theta0 = cfg.ctu.theta0 * M_PI / 180.0;
    const double d2d = 150.0;
    const double pl = path_loss_ctu_ad(d2d, {50.0, 50.0 + d2d * std::tan(theta0)}, cfg, rng);
    CHECK(pl - 10.0 * cfg.ctu.alpha * std::log10(d2d) == doctest::Approx(cfg.ctu.eta0).epsilon(1e-12));

    cfg.ctu.shadowing = true;
    auto r1 = make_rng(9), r2 = make_rng(9);
    CHECK(path_loss_ctu_ad(200.0, {1.5, 100.0}, cfg, r1) == path_loss_ctu_ad(200.0, {1.5, 100.0}, cfg, r2));
}

TEST_CASE("SINR") {
    CHECK(sinr(2.0, 5.0, 0.5, 1.0, false, 0.25) == doctest::Approx(4.0));
    CHECK(sinr(1.0, 5.0, 0.1, 1.0, false, 0.1) == doctest::Approx(1.0));
    CHECK(sinr(1.0, 1e12, 1.0, 1.0, true, 0.1) < 1e-11);
}

TEST_CASE("scenario synthesis") {
    ScenarioConfig cfg;
    cfg.jammer.on_windows = {{300, 600}};
    cfg.channel.jsr_db = 6.0;
    const auto sc = synthesize_scenario(cfg);
    REQUIRE(sc.grid.subcarriers() == 9);
    REQUIRE(sc.grid.slots() == 600);

    SUBCASE("JSR sets the jammer to signal power ratio") {
        const double pj = sc.jammer.rightCols(300).cwiseAbs2().mean();
        const double ps = sc.signal.cwiseAbs2().mean();
        CHECK(pj / ps == doctest::Approx(std::pow(10.0, 0.6)).epsilon(0.02));
    }
    SUBCASE("labels are H1 exactly on the attacked cells") {
        for (int t = 0; t < 600; ++t)
            for (int n = 0; n < 9; ++n) CHECK(sc.cell_labels(n, t) == (t >= 300 ? 1 : 0));
    }
    SUBCASE("a vanishing jammer leaves the clean grid unchanged") {
        ScenarioConfig quiet = cfg;
        quiet.channel.jsr_db = -1000.0;
        const auto q = synthesize_scenario(quiet);
        CHECK(q.grid.samples == q.clean_grid().samples);
        ScenarioConfig off = cfg;
        off.jammer.enabled = false;
        CHECK(synthesize_scenario(off).grid.samples == q.grid.samples);
    }
}

TEST_CASE("generalized observations") {
    Eigen::MatrixXcd g(1, 3);
    g << cplx(1, 0), cplx(3, 0), cplx(0, 0);
    const auto z = build_generalized_observations(g);
    REQUIRE(z.size() == 3);
    CHECK(z[0][2] == 0.0);
    CHECK(z[1][2] == 2.0);
    CHECK(z[2][2] == -3.0);

    ScenarioConfig cfg;
    cfg.jammer.on_windows = {{300, 600}};
    const auto sc = synthesize_scenario(cfg);
    const auto zs = build_generalized_observations(sc.grid);
    REQUIRE(zs.size() == 600);
    CHECK(zs[0].size() == 36);
    // Summing the derivative block from the first sample rebuilds the state block.
    Vec acc = zs[0].head(18);
    for (std::size_t t = 1; t < zs.size(); ++t) {
        acc += zs[t].tail(18);
        CHECK((acc - zs[t].head(18)).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("trajectories and jammer schedules") {
    const auto tr = integrate_trajectory(std::vector<Eigen::Vector3i>(20, Eigen::Vector3i::Zero()), {1, 2, 3});
    for (const auto& p : tr.positions) CHECK((p - Eigen::Vector3d(1, 2, 3)).norm() == 0.0);

    JammerStrategy sweep;
    sweep.pattern = JammerPattern::SWEEP;
    for (int t = 0; t < 24; ++t) CHECK(jammer_schedule(sweep, t, 6) == jammer_schedule(sweep, t + 6, 6));
    std::set<int> seen;
    for (int t = 0; t < 6; ++t) seen.insert(*jammer_schedule(sweep, t, 6).begin());
    CHECK(seen.size() == 6);

    JammerStrategy constant;
    constant.pattern = JammerPattern::CONSTANT;
    constant.target_prbs = {0, 2, 5};  // first, third and sixth PRB
    for (int t = 0; t < 50; ++t) CHECK(jammer_schedule(constant, t, 6) == std::set<int>{0, 2, 5});
}

TEST_CASE("invalid configuration is rejected") {
    ScenarioConfig cfg;
    cfg.jammer.on_windows = {};
    CHECK_THROWS_AS(synthesize_scenario(cfg), ConfigError);
    CHECK_THROWS_AS(ModulationScheme::from_name("9QAM"), ConfigError);
}
