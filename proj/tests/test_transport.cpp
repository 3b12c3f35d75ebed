#include <doctest.h>

#include "jamaware/metrics.hpp"
#include "jamaware/transport.hpp"

#include <cmath>

using namespace jamaware;

namespace {

Superstate node(const Vec& mean, double var) {
    Superstate s;
    s.mean = mean;
    s.cov = var * Mat::Identity(mean.size(), mean.size());
    s.count = 1;
    return s;
}

Vocabulary two_nodes(Superstate a, Superstate b) {
    Vocabulary v;
    v.d = 1;
    v.nodes = {std::move(a), std::move(b)};
    v.pi = Mat::Constant(2, 2, 0.5);
    v.pi_tau = {v.pi};
    v.r_diag = Vec::Constant(4, 0.01);
    return v;
}

Vec v4(double a, double b) { return (Vec(4) << a, b, 0, 0).finished(); }

struct Learned {
    Vocabulary source, target;
    TransportPlan plan;
};

// Vocabularies with one node per constellation point and the plan between them.
Learned learn(Modulation from, Modulation to, int n_target_symbols, std::uint64_t seed) {
    const ModulationScheme s{from}, t{to};
    const int gamma = retiming_factor(s.order(), t.order());
    GngConfig g;
    g.epochs = 20;
    const auto streams = make_conversion_streams(s, t, n_target_symbols, 20.0, false, seed);
    Learned out;
    out.source = learn_stream_vocabulary(streams.source_obs, s.order(), s.name(), g);
    out.target = learn_stream_vocabulary(streams.target_obs, t.order(), t.name(), g);
    PairedSamples p;
    for (const auto& z : streams.source_obs) p.source_states.push_back(z.head(2));
    for (std::size_t b = 0; b * gamma < streams.target_obs.size(); ++b)
        p.target_states.push_back(streams.target_obs[b * gamma].head(2));
    p.source_labels = nearest_state_labels(p.source_states, state_means(out.source));
    p.target_labels = nearest_state_labels(p.target_states, state_means(out.target));
    out.plan = transport_plan(out.source, out.target, p, s.name(), t.name());
    return out;
}

}  // namespace

TEST_CASE("matching matrix") {
    const auto src = two_nodes(node(v4(0, 0), 1.0), node(v4(1, 0), 1.0));
    const auto tgt = two_nodes(node(v4(0, 0), 2.0), node(v4(0, 2), 1.0));

    const Mat self = matching_matrix(src, src);
    for (Eigen::Index k = 0; k < 2; ++k) {
        CHECK(self(k, k) == self.row(k).minCoeff());
        CHECK(self.row(k).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }

    // Symmetric KL by hand: (A,C) 1.0, (A,D) 4.0, (B,C) 1.75, (B,D) 5.0.
    const Mat m = matching_matrix(src, tgt);
    CHECK(m(0, 0) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(m(0, 1) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(m(1, 0) == doctest::Approx(1.75 / 6.75).epsilon(1e-12));
    CHECK(m(1, 1) == doctest::Approx(5.0 / 6.75).epsilon(1e-12));

    auto bad = src;
    bad.nodes[0].cov(0, 0) = -1.0;
    CHECK_THROWS(matching_matrix(bad, tgt));
}

TEST_CASE("re-timing factor") {
    CHECK(retiming_factor(2, 4) == 2);
    CHECK(retiming_factor(2, 64) == 6);
    CHECK(retiming_factor(4, 16) == 2);
    CHECK(retiming_factor(2, 4) * retiming_factor(4, 16) == retiming_factor(2, 16));
    CHECK_THROWS_AS(retiming_factor(4, 8), ConfigError);
    CHECK_THROWS_AS(retiming_factor(16, 4), ConfigError);
}

TEST_CASE("interaction matrix") {
    SUBCASE("same bits through both modulators give one target per tuple") {
        const ModulationScheme b{Modulation::BPSK}, q{Modulation::QPSK};
        const auto s = make_conversion_streams(b, q, 500, 0.0, true, 4);
        std::vector<Vec> src_states, tgt_states;
        for (const auto& x : s.source_symbols) src_states.push_back((Vec(2) << x.real(), x.imag()).finished());
        for (const auto& x : s.target_symbols) tgt_states.push_back((Vec(2) << x.real(), x.imag()).finished());
        std::vector<Vec> bp, qp;
        for (const auto& c : constellation(b)) bp.push_back((Vec(2) << c.real(), c.imag()).finished());
        for (const auto& c : constellation(q)) qp.push_back((Vec(2) << c.real(), c.imag()).finished());
        const Mat j = interaction_matrix(nearest_state_labels(src_states, bp), nearest_state_labels(tgt_states, qp), 2, 4, 2);
        REQUIRE(j.rows() == 4);
        for (Eigen::Index r = 0; r < 4; ++r) {
            CHECK(j.row(r).sum() == doctest::Approx(1.0));
            CHECK(j.row(r).maxCoeff() == 1.0);  // zero entropy
        }
    }
    SUBCASE("independent streams give near-uniform rows") {
        auto rng = make_rng(6);
        std::uniform_int_distribution<int> s2(0, 1), s4(0, 3);
        const int n = 20000;
        std::vector<int> src(2 * n), tgt(n);
        for (auto& x : src) x = s2(rng);
        for (auto& x : tgt) x = s4(rng);
        const Mat j = interaction_matrix(src, tgt, 2, 4, 2);
        // Chi-square over all cells, 4 rows x 3 dof; the 99.9% point of chi2(12) is 32.9.
        double chi2 = 0.0;
        for (Eigen::Index r = 0; r < 4; ++r) {
            const double rows = n / 4.0;
            for (Eigen::Index c = 0; c < 4; ++c) chi2 += std::pow(j(r, c) * rows - rows / 4, 2) / (rows / 4);
        }
        CHECK(chi2 < 32.9);
    }
    CHECK_THROWS_AS(interaction_matrix({0, 1, 0}, {0, 1}, 2, 4, 2), LengthMismatchError);
}

TEST_CASE("transport plan forces") {
    const auto l = learn(Modulation::BPSK, Modulation::QPSK, 600, 3);
    CHECK(l.plan.gamma == 2);
    for (Eigen::Index r = 0; r < l.plan.J.rows(); ++r) CHECK(l.plan.J.row(r).sum() == doctest::Approx(1.0).epsilon(1e-9));
    for (Eigen::Index r = 0; r < l.plan.M.rows(); ++r) CHECK(l.plan.M.row(r).sum() == doctest::Approx(1.0).epsilon(1e-9));
    for (const auto& p : l.plan.pairs) {
        const Vec expect = l.plan.target_means[p.l] - l.plan.source_means[p.k];
        CHECK((p.force - expect).norm() < 1e-12);
    }
    const auto j = plan_to_json(l.plan);
    CHECK(j.at("gamma") == 2);
    CHECK(j.contains("pairs"));
}

TEST_CASE("identity conversion returns the source state") {
    const auto v = two_nodes(node(v4(-1, 0), 0.1), node(v4(1, 0), 0.1));
    const auto plan = identity_plan(v);
    const std::vector<Vec> xs{(Vec(2) << -0.9, 0.05).finished(), (Vec(2) << 1.1, -0.2).finished()};
    const std::vector<int> labels{0, 1};
    CHECK(convert_block(plan, xs, labels, 0) == xs[0]);
    CHECK(convert_block(plan, xs, labels, 1) == xs[1]);
}

TEST_CASE("conversion round trips") {
    const auto l = learn(Modulation::BPSK, Modulation::QPSK, 600, 5);
    const ModulationScheme b{Modulation::BPSK}, q{Modulation::QPSK};
    const auto clean = make_conversion_streams(b, q, 1000, 0.0, true, 6);
    const auto out = convert_stream(l.plan, q, clean.source_obs);
    CHECK(ber(out.bits, clean.bits) == 0.0);

    const double snr = 16.0;
    const auto noisy = make_conversion_streams(b, q, 2000, snr, false, 7);
    const auto conv = convert_stream(l.plan, q, noisy.source_obs).converted;
    const double sigma = std::sqrt(db_to_linear(-snr) / 2.0);
    int inside = 0;
    for (const auto& c : conv) {
        double best = 1e9;
        for (const auto& p : constellation(q)) best = std::min(best, std::abs(c - p));
        inside += best < 3.0 * sigma;
    }
    CHECK(static_cast<double>(inside) / conv.size() >= 0.99);
}

TEST_CASE("transport-based modulation classification") {
    const auto bq = learn(Modulation::BPSK, Modulation::QPSK, 600, 11);
    const auto b16 = learn(Modulation::BPSK, Modulation::QAM16, 1000, 12);
    const auto b64 = learn(Modulation::BPSK, Modulation::QAM64, 1500, 13);
    const double snr = 16.0;
    const double v = db_to_linear(-snr);
    const Vec r = (Vec(4) << v / 2, v / 2, v, v).finished();
    const ModulationScheme bpsk{Modulation::BPSK};

    const auto res = amc_classify(make_held_stream(bpsk, 1, 600, snr, 21), bq.source, {bq.plan, b16.plan, b64.plan}, r);
    CHECK(res.t_cc == 12);
    int hits = 0;
    for (int k : res.khat) hits += k == 0;
    CHECK(static_cast<double>(hits) / res.khat.size() >= 0.9);

    const auto single = amc_classify(make_held_stream(bpsk, 1, 100, snr, 22), bq.source, {}, r);
    for (int k : single.khat) CHECK(k == 0);
    CHECK_THROWS_AS(amc_classify({}, bq.source, {}, r), EmptyInputError);
}

TEST_CASE("bit error rate") {
    const Bits a{1, 0, 1, 1, 0};
    Bits flipped = a;
    for (auto& x : flipped) x = static_cast<std::uint8_t>(1 - x);
    CHECK(ber(a, a) == 0.0);
    CHECK(ber(flipped, a) == 1.0);
    CHECK_THROWS_AS(ber(a, Bits{1}), LengthMismatchError);
}
