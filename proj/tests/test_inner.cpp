#include <gtest/gtest.h>

#include "support.hpp"

using namespace hetero;

TEST(Boundary, Examples) {
    for (double v : assemble_boundary_plus(1.3, 0, 0)) EXPECT_EQ(v, 0.0);
    const auto m = assemble_boundary_minus(2.0, 0, 0);
    EXPECT_DOUBLE_EQ(m[0], std::sqrt(2.0));
    for (int j = 1; j < 4; ++j) EXPECT_EQ(m[j], 0.0);
    const auto b = assemble_boundary_plus(1.0, 1, 1);
    EXPECT_DOUBLE_EQ(b[0], 1.0);
    EXPECT_NEAR(b[1], -std::sqrt(2.0), 1e-15);
    EXPECT_DOUBLE_EQ(b[2], 1.0);
    EXPECT_EQ(b[3], 0.0);
    EXPECT_THROW(assemble_boundary_plus(1.0, 0.05, 0.01, 0.05), BallViolation);
}

TEST(Boundary, ComponentBoundsInsideBall) {
    std::uniform_real_distribution<double> u(-1, 1), a(0.5, 1.05);
    auto& r = hetero::testing::rng();
    const double k1 = 0.05;
    for (int n = 0; n < 200; ++n) {
        double x1 = u(r), x2 = u(r);
        const double s = k1 * std::abs(u(r)) / std::hypot(x1, x2);
        x1 *= s;
        x2 *= s;
        const double ap = a(r);
        const auto d = assemble_boundary_plus(ap, x1, x2, k1);
        for (int j = 0; j < 4; ++j) EXPECT_LE(std::abs(d[j]), std::pow(ap, (j + 2.0) / 4) * k1 * (1 + 1e-14));
    }
}

TEST(Picard, ZeroDataIsFixedPoint) {
    const auto s = picard_solve(InnerProblem{});
    EXPECT_EQ(s.iterations, 1);
    for (std::size_t i = 0; i < s.z.size(); ++i) EXPECT_EQ(s.A0[i], 0.0);
    EXPECT_EQ(inner_residual(s), 0.0);
    EXPECT_DOUBLE_EQ(s.z.front(), -1.0);
    EXPECT_DOUBLE_EQ(s.z.back(), 1.0);
}

TEST(Picard, ContractionGate) {
    EXPECT_NEAR(contraction_constant(1.05), 0.850854, 1e-6);
    EXPECT_NEAR(contraction_constant(1.2), 1.65888, 1e-5);
    InnerProblem ok;
    ok.a_plus = 1.05;
    ok.x10 = 0.02;
    EXPECT_NO_THROW(picard_solve(ok));
    InnerProblem bad = ok;
    bad.a_plus = 1.2;
    EXPECT_THROW(picard_solve(bad), ContractionViolated);
}

TEST(Picard, MeasuredRatioWithinTheory) {
    for (double ap : {0.6, 0.8, 1.0, 1.05}) {
        InnerProblem pr;
        pr.a_plus = ap;
        pr.x10 = 0.03;
        pr.x20 = 0.04;
        pr.k1 = 0.05;
        const auto s = picard_solve(pr);
        EXPECT_LE(s.max_ratio, contraction_constant(ap) + 0.05);
        EXPECT_LT(inner_residual(s), 1e-8);
        for (std::size_t k = 1; k < s.history.size(); ++k) EXPECT_LT(s.history[k], s.history[k - 1]);
    }
}

TEST(Picard, TruncatedIterateHasLargerResidual) {
    InnerProblem pr;
    pr.x10 = 0.03;
    pr.x20 = 0.04;
    const auto full = picard_solve(pr);
    PicardConfig loose;
    loose.tol = 1e-3;
    const auto cut = picard_solve(pr, loose);
    EXPECT_LT(cut.iterations, full.iterations);
    EXPECT_GT(inner_residual(cut), 1e3 * inner_residual(full));
    PicardConfig starved;
    starved.max_iter = 1;
    EXPECT_THROW(picard_solve(pr, starved), NonConvergence);
}

TEST(Picard, AgreesWithDirectIntegration) {
    InnerProblem pr;
    pr.a_plus = 1.0;
    pr.x10 = 0.03;
    pr.x20 = -0.02;
    const auto s = picard_solve(pr);
    const auto left = inner_shoot(pr.data(), pr.a_plus, -pr.a_plus);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(s.left()[j], left[j], 1e-9);
    const auto right = s.at(s.z.size() - 1);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(right[j], pr.data()[j], 1e-15);
}

TEST(Picard, QuadratureConvergesAtLeastSecondOrder) {
    InnerProblem pr;
    pr.x10 = 0.04;
    pr.x20 = 0.03;
    const auto exact = inner_shoot(pr.data(), pr.a_plus, -pr.a_plus, 1e-13);
    std::vector<double> err;
    for (int n : {257, 513, 1025}) {
        PicardConfig c;
        c.points = n;
        const auto s = picard_solve(pr, c);
        err.push_back(std::abs(s.left()[0] - exact[0]));
    }
    EXPECT_GE(err[0] / err[1], 4.0);
    EXPECT_GE(err[1] / err[2], 4.0);
}

TEST(Picard, LipschitzInBoundaryData) {
    InnerProblem pr;
    pr.x10 = 0.02;
    pr.x20 = 0.01;
    const auto a = picard_solve(pr);
    pr.x10 += 1e-6;
    const auto b = picard_solve(pr);
    double d = 0;
    for (std::size_t i = 0; i < a.z.size(); ++i) d = std::max(d, std::abs(a.A0[i] - b.A0[i]));
    EXPECT_LE(d, 1e-4);
    EXPECT_GT(d, 0.0);
}

TEST(Cascade, StepCounts) {
    EXPECT_EQ(cascade_steps(1.0, 1.0), 0);
    EXPECT_EQ(cascade_steps(std::pow(10.0, 0.8), 1.0), 2);
    EXPECT_EQ(cascade_steps(std::pow(3.0, 0.8), 1.0), 1);
    // one step of nu-ratio 3.69 satisfies (1/80)X^5 + (1/16)X^4 < 1
    EXPECT_LT(cascade_inequality(std::pow(3.69, 0.8) - 1), 1.0);
}

TEST(Cascade, ExtensionSolvesOnFullInterval) {
    InnerProblem pr;
    pr.x10 = 0.01;
    pr.x20 = 0.01;
    PicardConfig c;
    c.points = 1024;
    const auto base = picard_solve(pr, c);
    const double am = std::pow(10.0, 0.8);
    const auto s = picard_extend(base, am, c);
    EXPECT_EQ(s.extension_steps, 2);
    EXPECT_DOUBLE_EQ(s.z.front(), -am);
    EXPECT_NEAR(s.a_minus, am, 1e-14);
    for (double q : s.step_condition) EXPECT_LT(q, 1.0);
    double fmax = 1;  // |A| reaches ~6.5 near -a-, so compare against the source size
    for (double f : s.source) fmax = std::max(fmax, std::abs(f));
    EXPECT_LT(inner_residual(s) / fmax, 1e-8);
    for (std::size_t i = 1; i < s.z.size(); ++i) EXPECT_GT(s.z[i], s.z[i - 1]);
    const auto left = inner_shoot(pr.data(), pr.a_plus, -am);
    EXPECT_NEAR(s.left()[0], left[0], 1e-6 * (1 + std::abs(left[0])));
    // equal endpoints: nothing to extend
    EXPECT_EQ(picard_extend(base, 1.0, c).extension_steps, 0);
}

TEST(Scaling, InnerRoundTrip) {
    const auto p = derive_params(0.1, 1.5);
    const State s{0.01, -0.02, 0.03, 0.004, 0.9, 0.01};
    const auto ip = inner_scale(7.5, s, p);
    const auto [x, A] = inner_unscale(ip, p);
    EXPECT_NEAR(x, 7.5, 1e-14);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(A[j], s[j], 1e-14 * (1 + std::abs(s[j])));
    EXPECT_NEAR(inner_K(1.0), 1.1486984, 1e-7);
    EXPECT_NEAR(inner_K(1.0), std::pow(2.0, 0.2), 1e-15);
}

TEST(Scaling, StarPlusMapsToAPlus) {
    for (double g : {1.25, 1.5, 2.0})
        for (double eps : {0.1, 0.05}) {
            const auto p = derive_params(eps, g);
            const auto sc = default_scaling(p);
            const auto ip = inner_scale(sc.x_star_plus, State{}, p);
            EXPECT_NEAR(ip.z, sc.a_plus, 1e-12);
        }
}

TEST(Perturbation, FullEquationApproachesLimitAtRateFourFifths) {
    InnerProblem pr;
    pr.x10 = 0.03;
    pr.x20 = 0.04;
    const auto d = picard_solve(pr).at(2047);
    std::vector<double> stops;
    for (int k = 1; k < 200; ++k) stops.push_back(1.0 - 2.0 * k / 200);
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-12;
    cfg.abs_tol = 1e-14;
    IntegrateOptions o;
    o.stops = &stops;
    std::vector<double> le, lerr;
    for (double eps : {0.1, 0.05, 0.025, 0.0125}) {
        const auto p = derive_params(eps, 1.5);
        const double sc = inner_K(p.delta) * std::pow(eps, 0.2), sc4 = std::pow(sc, 4);
        // rescaled A equation with B frozen on the reduced right profile
        auto full = [&](double z, const Vec<4>& y) {
            const double B = 1 + v_right_profile(z / sc, p);
            return Vec<4>{y[1], y[2], y[3], y[0] * (1 - p.g * B * B) / sc4 - y[0] * y[0] * y[0]};
        };
        auto lim = [](double z, const Vec<4>& y) { return Vec<4>{y[1], y[2], y[3], -y[0] * (y[0] * y[0] + z)}; };
        const Vec<4> y0{d[0], d[1], d[2], d[3]};
        const auto a = integrate_system<4>(full, y0, 1.0, -1.0, cfg, o);
        const auto b = integrate_system<4>(lim, y0, 1.0, -1.0, cfg, o);
        double e = 0;
        for (double z : stops) e = std::max(e, std::abs(a.eval(z)[0] - b.eval(z)[0]));
        le.push_back(std::log(eps));
        lerr.push_back(std::log(e));
    }
    double mx = 0, my = 0;
    for (int i = 0; i < 4; ++i) mx += le[i] / 4, my += lerr[i] / 4;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < 4; ++i) sxy += (le[i] - mx) * (lerr[i] - my), sxx += (le[i] - mx) * (le[i] - mx);
    EXPECT_NEAR(sxy / sxx, 0.8, 0.15);
}
