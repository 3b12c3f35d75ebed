#include <doctest.h>

#include "jamaware/abnormality.hpp"

using namespace jamaware;

namespace {
Gauss g1(double m, double v) { return {Vec::Constant(1, m), Mat::Constant(1, 1, v)}; }
}  // namespace

TEST_CASE("Gaussian KL") {
    const Gauss p = g1(0, 1), q = g1(1, 1);
    CHECK(gaussian_kld(p, p) == doctest::Approx(0.0));
    CHECK(gaussian_kld(p, q) == doctest::Approx(0.5).epsilon(1e-12));
    Gauss a{Vec::Zero(2), Mat::Identity(2, 2)};
    Gauss b{Vec::Ones(2), (Mat(2, 2) << 2, 0.3, 0.3, 1).finished()};
    CHECK(symmetric_kld(a, b) == symmetric_kld(b, a));
    CHECK_THROWS_AS(gaussian_kld(a, p), std::invalid_argument);
}

TEST_CASE("float and double kernels agree") {
    Gaussian<float> pf{VectorX<float>::Constant(1, 0.f), MatrixX<float>::Constant(1, 1, 1.f)};
    Gaussian<float> qf{VectorX<float>::Constant(1, 2.f), MatrixX<float>::Constant(1, 1, 1.f)};
    CHECK(bhattacharyya(pf, qf).distance == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("Bhattacharyya") {
    const Gauss p = g1(0, 1), q = g1(2, 1);
    const auto same = bhattacharyya(p, p);
    CHECK(same.distance == doctest::Approx(0.0));
    CHECK(same.coefficient == doctest::Approx(1.0));
    CHECK(bhattacharyya(p, q).distance == doctest::Approx(0.5).epsilon(1e-12));
    const Gauss r = g1(0.3, 2.5);
    CHECK(bhattacharyya(p, r).distance == doctest::Approx(bhattacharyya(r, p).distance).epsilon(1e-14));

    FixedBhattacharyya fixed(p, Mat::Constant(1, 1, 1.0));
    CHECK(fixed.distance(Vec::Constant(1, 2.0)) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("KLDA") {
    const Vec row = (Vec(2) << 0.9, 0.1).finished();
    CHECK(klda({row, row}, row, (Vec(2) << 0.5, 0.5).finished()) == doctest::Approx(0.0));
    const Vec lambda = (Vec(2) << 0.1, 0.9).finished();
    CHECK(klda({row, lambda}, lambda, (Vec(2) << 1.0, 0.0).finished()) == doctest::Approx(3.5155593237379517).epsilon(1e-12));
    CHECK(klda({row, lambda}, row, (Vec(2) << 0.3, 0.7).finished()) >= 0.0);
}

TEST_CASE("CLA, CLB and DCLA") {
    const Gauss p{Vec::Ones(4), Mat::Identity(4, 4)};
    CHECK(cla(p, p) == doctest::Approx(0.0));
    CHECK(clb(p, p) == doctest::Approx(0.0));
    const Vec obs = (Vec(8) << 3, 0, 4, 0, 0, 0, 0, 0).finished();
    CHECK(dcla(Vec::Zero(8), Vec::Zero(8), 2).isZero());
    const Vec dc = dcla(obs, Vec::Zero(8), 2);
    CHECK(dc[0] == doctest::Approx(5.0));
    CHECK(dc[1] == 0.0);
}

TEST_CASE("threshold decisions") {
    ThresholdConfig cfg;
    CHECK(cfg.discrete_threshold() == doctest::Approx(0.1));
    CHECK(cfg.bc_bound() == doctest::Approx(std::sqrt(0.1)).epsilon(1e-12));
    cfg.eta = 10.0;
    cfg.th = 10.0;
    AbnormalitySnapshot s;
    s.dcla = Vec::Zero(3);
    cfg.dcla_thresholds = {1.0, 1.0, 1.0};
    const auto f = decide(s, cfg);
    CHECK_FALSE(f.klda);
    CHECK_FALSE(f.cla);
    CHECK_FALSE(f.clb);
    for (bool b : f.dcla) CHECK_FALSE(b);
    cfg.beta1 = 0.7;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("generalized errors") {
    ErrorContext ctx;
    ctx.means = {Vec::Zero(4), (Vec(4) << 1, 2, 0, 0).finished()};
    ctx.lambda = (Vec(2) << 0.1, 0.9).finished();
    ctx.pi = (Vec(2) << 0.3, 0.7).finished();
    ctx.predicted_state = Vec::Zero(4);
    ctx.observation = ctx.means[1];
    CHECK(generalized_errors(ctx).eps_Z2.isZero());

    const Vec j = (Vec(4) << 0.5, -0.25, 0.1, 0.0).finished();
    ctx.observation = ctx.means[1] + j;
    const auto e = generalized_errors(ctx);
    CHECK((e.eps_Z2 - j).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(e.eps_S.sum() == doctest::Approx(0.0));
}

TEST_CASE("calibration sets eta at mean plus three standard deviations") {
    const auto c = calibrate_thresholds({1.0, 2.0, 3.0}, {});
    CHECK(c.eta == doctest::Approx(2.0 + 3.0 * 1.0));
    CHECK_THROWS_AS(calibrate_thresholds({}, {}), EmptyInputError);
}
