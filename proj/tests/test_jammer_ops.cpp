#include <doctest.h>

#include "jamaware/experiments.hpp"
#include "jamaware/jammer_ops.hpp"
#include "jamaware/metrics.hpp"

#include <algorithm>

using namespace jamaware;

namespace {

// Trace step whose predictive and diagnostic messages peak at the given superstates.
StepOutput fixture_step(int m, int predicted, int observed, const Vec& d_value) {
    StepOutput s;
    s.pi_S = Vec::Constant(m, 0.1);
    s.pi_S[predicted] = 0.7;
    s.lambda_S = Vec::Constant(m, 0.1);
    s.lambda_S[observed] = 0.7;
    s.prev_occupancy = s.pi_S;
    s.errors.eps_X2 = d_value;
    s.errors.eps_S = s.lambda_S - s.pi_S;
    s.errors.eps_Z2 = d_value;
    s.abnormality.cla = 10.0;
    return s;
}

std::vector<int> all_steps(std::size_t n) {
    std::vector<int> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<int>(i);
    return v;
}

}  // namespace

TEST_CASE("discrete characterization") {
    const Vec zero = Vec::Zero(4);
    std::vector<StepOutput> same, shifted;
    for (int k = 0; k < 5; ++k) {
        same.push_back(fixture_step(4, k % 4, k % 4, zero));
        shifted.push_back(fixture_step(4, 1, 3, zero));
    }
    const auto a = characterize_discrete(same, all_steps(5));
    for (const auto& [key, count] : a.shift_map) CHECK(key.first == key.second);

    const auto b = characterize_discrete(shifted, all_steps(5));
    REQUIRE(b.shift_map.size() == 1);
    CHECK(b.shift_map.at({1, 3}) == 5);

    CHECK_THROWS_AS(characterize_discrete(same, {}), EmptyInputError);
}

TEST_CASE("continuous characterization") {
    SUBCASE("a constant offset wins the vote") {
        const Vec c = (Vec(4) << 0.5, -0.3, 0.2, 0.7).finished();
        auto rng = make_rng(3);
        std::normal_distribution<double> jitter(0.0, 0.01);
        std::vector<StepOutput> trace;
        Vec mean = Vec::Zero(4);
        for (int k = 0; k < 60; ++k) {
            Vec dv = c;
            for (int i = 0; i < 4; ++i) dv[i] += jitter(rng);
            mean += dv / 60.0;
            trace.push_back(fixture_step(3, 0, 0, dv));
        }
        auto log = characterize_discrete(trace, all_steps(trace.size()));
        characterize_continuous(trace, log);
        CHECK((mean - c).cwiseAbs().maxCoeff() < 0.01);
        CHECK((log.d_vote - c).cwiseAbs().maxCoeff() <= 0.1 + 1e-12);
        CHECK((log.u_jammer - c.tail(2)).cwiseAbs().maxCoeff() <= 0.1 + 1e-12);
        for (int br : log.branch) CHECK(br == 1);
    }
    SUBCASE("ties go to the value seen first") {
        const Vec a = Vec::Constant(4, 1.0), b = Vec::Constant(4, -1.0);
        std::vector<StepOutput> trace{fixture_step(2, 0, 0, a), fixture_step(2, 0, 0, b),
                                      fixture_step(2, 0, 0, b), fixture_step(2, 0, 0, a)};
        auto log = characterize_discrete(trace, all_steps(4));
        characterize_continuous(trace, log);
        CHECK(log.d_vote == a);
        auto again = characterize_discrete(trace, all_steps(4));
        characterize_continuous(trace, again);
        CHECK(again.d_vote == log.d_vote);
    }
}

TEST_CASE("extraction and suppression") {
    auto rng = make_rng(8);
    std::normal_distribution<double> n01;
    std::vector<Vec> clean, jam, obs;
    std::vector<StepOutput> trace;
    for (int t = 0; t < 20; ++t) {
        Vec c(8), j(8);
        for (int i = 0; i < 8; ++i) {
            c[i] = n01(rng);
            j[i] = n01(rng);
        }
        clean.push_back(c);
        jam.push_back(j);
        obs.push_back(c + j);
        // Noiseless additive fixture: the residual against the clean centroid is the jammer.
        StepOutput s;
        s.errors.eps_Z2 = (c + j) - c;
        trace.push_back(s);
    }
    const auto j_hat = extract_jammer(trace, Vec::Zero(8));
    for (int t = 0; t < 20; ++t) CHECK((j_hat[t] - jam[t]).cwiseAbs().maxCoeff() < 1e-12);
    const auto restored = suppress(obs, j_hat);
    for (int t = 0; t < 20; ++t) CHECK((restored[t] - clean[t]).cwiseAbs().maxCoeff() < 1e-12);

    std::vector<Vec> zeros(20, Vec::Zero(8));
    CHECK(suppress(obs, zeros) == obs);
    zeros.pop_back();
    CHECK_THROWS_AS(suppress(obs, zeros), LengthMismatchError);
    CHECK_THROWS_AS(extract_jammer(trace, Vec::Zero(3)), LengthMismatchError);

    Eigen::MatrixXcd g = Eigen::MatrixXcd::Random(3, 4);
    CHECK(suppress(g, Eigen::MatrixXcd::Zero(3, 4)) == g);
    CHECK_THROWS_AS(suppress(g, Eigen::MatrixXcd::Zero(3, 5)), LengthMismatchError);
}

TEST_CASE("extraction on a clean stream stays at the noise floor") {
    ScenarioConfig base;
    base.n_steps = 300;
    const auto ref = build_reference(base, 21, 22, 8);
    base.jammer.enabled = false;
    base.seed = 23;
    const auto sc = synthesize_scenario(base);
    Mmjpf f(ref.vocab);
    const auto j_hat = extract_jammer(f.run(build_generalized_observations(sc.grid)), ref.w_hat);
    std::vector<double> mags;
    const int d = base.n_subcarriers;
    for (const auto& j : j_hat)
        for (int i = 0; i < 2 * d; ++i) mags.push_back(std::abs(j[i]));
    std::sort(mags.begin(), mags.end());
    const double sigma_w = std::sqrt(base.channel.noise_power() / 2.0);
    CHECK(mags[mags.size() * 95 / 100] < 3.0 * sigma_w);
}

TEST_CASE("transition matrix update") {
    Mat pi(3, 3);
    pi << 0.8, 0.1, 0.1, 0.2, 0.6, 0.2, 0.3, 0.3, 0.4;
    std::vector<StepOutput> none;
    for (int k = 0; k < 4; ++k) {
        auto s = fixture_step(3, k % 3, k % 3, Vec::Zero(4));
        s.errors.eps_S = Vec::Zero(3);
        none.push_back(s);
    }
    CHECK((update_transition_matrix(pi, none, all_steps(4)) - pi).cwiseAbs().maxCoeff() < 1e-15);

    auto s = fixture_step(3, 0, 0, Vec::Zero(4));
    s.prev_occupancy = (Vec(3) << 1, 0, 0).finished();
    s.errors.eps_S = (Vec(3) << 0, 0, 1).finished() - pi.row(0).transpose();
    const Mat up = update_transition_matrix(pi, {s}, {0});
    CHECK(up(0, 2) > pi(0, 2));
    CHECK(up.row(1) == pi.row(1));

    s.errors.eps_S = (Vec(3) << -2.0, 0.5, 3.0).finished();
    const Mat wild = update_transition_matrix(pi, {s}, {0});
    CHECK(wild.minCoeff() >= 0.0);
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(wild.row(i).sum() == doctest::Approx(1.0));
}

TEST_CASE("dynamic model overlay") {
    Vocabulary v;
    v.d = 1;
    Superstate n;
    n.mean = (Vec(4) << 0, 0, 0.3, -0.1).finished();
    n.cov = 0.05 * Mat::Identity(4, 4);
    n.count = 1;
    v.nodes = {n};
    v.pi = Mat::Ones(1, 1);
    v.pi_tau = {v.pi};
    v.r_diag = Vec::Constant(4, 0.02);

    std::vector<Vec> z;
    for (int t = 0; t < 30; ++t) z.push_back((Vec(4) << 0.3 * t, -0.1 * t, 0.3, -0.1).finished());

    FilterOptions base;
    Mmjpf ref(v, base);
    const auto a = ref.run(z);
    Mmjpf zero(v, update_dynamic_model(base, Vec::Zero(2)));
    const auto b = zero.run(z);
    Mmjpf reverted(v, remove_dynamic_update(update_dynamic_model(base, Vec::Constant(2, 0.4))));
    const auto c = reverted.run(z);
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].posterior_mean == b[k].posterior_mean);
        CHECK(a[k].posterior_mean == c[k].posterior_mean);
    }
    CHECK(update_dynamic_model(base, Vec::Constant(2, 0.4)).control_overlay->isApprox(Vec::Constant(2, 0.4)));
}

TEST_CASE("model switching") {
    std::vector<StepOutput> r(3), u(3);
    r[0].abnormality.cla = 1.0;
    u[0].abnormality.cla = 2.0;
    r[1].abnormality.cla = 5.0;
    u[1].abnormality.cla = 1.0;
    r[2].abnormality.cla = u[2].abnormality.cla = 3.0;
    CHECK(switch_models(r, u) == std::vector<int>{0, 1, 0});
    u.pop_back();
    CHECK_THROWS_AS(switch_models(r, u), LengthMismatchError);
}

TEST_CASE("learning the jammer on a replay lowers the attack-time abnormality") {
    const auto res = run_experiment(default_spec(ExperimentKind::CHARACTERIZE, true));
    for (const auto& p : res.summary["points"]) {
        REQUIRE(p.contains("ratio"));
        CHECK(p["ratio"].get<double>() >= 2.0);
        CHECK(p["updated_share_attacked"].get<double>() >= 0.9);
        CHECK(p["reference_share_clean"].get<double>() >= 0.95);
    }
}
