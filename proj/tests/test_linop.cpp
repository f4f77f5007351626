#include <gtest/gtest.h>

#include "support.hpp"

using namespace hetero;
using hetero::testing::reference_profile;

namespace {

ProfileGrid window(double h, double a = -20, double b = 20) {
    GridSpec gs;
    gs.h = h;
    gs.x_min = a;
    gs.x_max = b;
    return resample(reference_profile(), gs);
}

double fitted_order(const std::vector<double>& h, const std::vector<double>& e) {
    double mx = 0, my = 0;
    const double n = double(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) mx += std::log(h[i]) / n, my += std::log(e[i]) / n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double dx = std::log(h[i]) - mx;
        sxy += dx * (std::log(e[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

}  // namespace

TEST(Assembly, KernelResidualIsSecondOrder) {
    const auto& p = reference_profile().p;
    std::vector<double> hs{0.2, 0.1, 0.05, 0.025}, em, el;
    for (double h : hs) {
        const auto g = window(h);
        em.push_back(kernel_residual(assemble_Mg(g, p), g));
        el.push_back(kernel_residual_Lg(assemble_Lg(g, p), g));
    }
    EXPECT_NEAR(fitted_order(hs, em), 2.0, 0.3);
    EXPECT_NEAR(fitted_order(hs, el), 2.0, 0.3);
}

TEST(Assembly, SymbolAtMMinus) {
    const auto p = derive_params(0.1, 1.5);
    const int n = 400;
    const double h = 0.05, L = n * h;
    const auto g = constant_grid(M_minus, 0, L, n);
    const auto op = assemble_Mg(g, p);
    for (int m : {5, 10}) {  // kh <= 0.16 keeps the stencil symbol within 1%
        const double k = 2 * M_PI * m / L;
        Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * (n + 1));
        for (int i = 0; i <= n; ++i) v(i) = std::cos(k * g.x[i]);
        const Eigen::VectorXd r = op.M * v;
        for (int i = n / 4; i < 3 * n / 4; i += 7) {
            if (std::abs(v(i)) < 0.3) continue;
            EXPECT_NEAR(r(i) / v(i), -(std::pow(k, 4) + 2), 0.01 * (std::pow(k, 4) + 2));
            EXPECT_EQ(r(n + 1 + i), 0.0);  // no coupling at the equilibrium
        }
    }
}

TEST(Assembly, OperatorsAreSymmetric) {
    const auto g = window(0.1);
    const auto& p = reference_profile().p;
    const auto M = assemble_Mg(g, p), Lg = assemble_Lg(g, p);
    EXPECT_EQ(SpMat(M.M - SpMat(M.M.transpose())).norm(), 0.0);
    EXPECT_EQ(SpMat(Lg.M - SpMat(Lg.M.transpose())).norm(), 0.0);
    std::normal_distribution<double> nd;
    auto& r = hetero::testing::rng();
    for (int t = 0; t < 10; ++t) {
        Eigen::VectorXd u(M.M.rows()), v(M.M.rows());
        for (int i = 0; i < u.size(); ++i) u(i) = nd(r), v(i) = nd(r);
        const double a = (M.M * u).dot(v), b = u.dot(M.M * v);
        EXPECT_NEAR(a, b, 1e-12 * std::abs(a));
    }
}

TEST(Assembly, CouplingVanishesInTheTails) {
    GridSpec gs;
    gs.h = 0.1;
    const auto g = resample(reference_profile(), gs);
    const auto& p = reference_profile().p;
    for (const State* s : {&g.s.front(), &g.s.back()}) EXPECT_LT(std::abs(2 * p.g * (*s)[iA0] * (*s)[iB0]), 1e-3);
    const State& e = g.s.back();
    EXPECT_NEAR(1 - 3 * e[iA0] * e[iA0] - p.g * e[iB0] * e[iB0], -(p.g - 1), 1e-3);
    EXPECT_NEAR(1 - p.g * e[iA0] * e[iA0] - 3 * e[iB0] * e[iB0], -2, 1e-3);
}

TEST(Assembly, CoarseGridRejected) {
    const auto p = derive_params(0.1, 1.5);
    const double hmax = max_grid_step(p);
    EXPECT_THROW(assemble_Mg(constant_grid(M_plus, 0, 100 * hmax, 50), p), GridTooCoarse);
    EXPECT_NO_THROW(assemble_Mg(constant_grid(M_plus, 0, 50 * hmax, 100), p));
}

TEST(Kernel, OneDimensionalAndAlignedWithDerivative) {
    GridSpec gs;
    gs.h = 0.02;
    const auto g = resample(reference_profile(), gs);
    const auto rep = kernel_diagnostics(assemble_Mg(g, reference_profile().p), g);
    EXPECT_LT(rep.kernel_angle, 1e-3);
    EXPECT_GT(rep.separation, 1e3);
    EXPECT_LT(rep.orthogonality_defect, 1e-4);
    EXPECT_LT(rep.sigma[0], 1e-3 * rep.sigma[1]);
    EXPECT_LE(rep.sigma[1], rep.sigma[2]);
}

TEST(Kernel, LgTrivialInWeightedSpace) {
    GridSpec gs;
    gs.h = 0.05;
    const auto g = resample(reference_profile(), gs);
    const auto& p = reference_profile().p;
    const auto rep = lg_diagnostics(assemble_Lg(g, p), g, p);
    EXPECT_TRUE(rep.trivial_kernel);
    EXPECT_GT(rep.sigma_weighted, rep.floor);
    EXPECT_NEAR(rep.eta, 0.5 * p.epsilon * p.delta, 1e-15);
    EXPECT_LT(rep.residual_B, 1e-4);
}

TEST(PseudoInverse, ZeroForcing) {
    const auto g = window(0.05, -80, 60);
    const auto out = lg_pseudo_inverse(std::vector<double>(g.size(), 0.0), g, reference_profile().p);
    for (double v : out.u) EXPECT_EQ(v, 0.0);
}

TEST(PseudoInverse, ManufacturedSolution) {
    const auto g = window(0.05, -80, 60);
    const auto& p = reference_profile().p;
    const double r = 10;
    // u = exp(-(x/r)^2), f = u''/eps^2 + (1 - g A^2 - B^2) u
    std::vector<double> u(g.size()), f(g.size()), Bv(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.x[i], e = std::exp(-x * x / (r * r));
        const double upp = e * (4 * x * x / std::pow(r, 4) - 2 / (r * r));
        const double A = g.s[i][iA0], B = g.s[i][iB0];
        u[i] = e;
        Bv[i] = B;
        f[i] = upp / (p.epsilon * p.epsilon) + (1 - p.g * A * A - B * B) * e;
    }
    const auto out = lg_pseudo_inverse(f, g, p, 1e-6);
    // solutions differ by a multiple of B; remove it by least squares
    double num = 0, den = 0;
    for (std::size_t i = 0; i < g.size(); ++i) num += (out.u[i] - u[i]) * Bv[i], den += Bv[i] * Bv[i];
    const double c = num / den;
    double err = 0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(out.u[i] - c * Bv[i] - u[i]));
    EXPECT_LT(err, 1e-5);
    // the discrete operator reproduces f in the interior
    const auto op = assemble_Lg(g, p);
    const Eigen::VectorXd lu = op.M * Eigen::Map<const Eigen::VectorXd>(out.u.data(), long(out.u.size()));
    double fr = 0, fm = 0;
    for (std::size_t i = 1; i + 1 < g.size(); ++i) fr = std::max(fr, std::abs(lu(long(i)) - f[i])), fm = std::max(fm, std::abs(f[i]));
    EXPECT_LT(fr, 1e-3 * fm);
}

TEST(PseudoInverse, RejectsForcingAlongB) {
    const auto g = window(0.05, -80, 60);
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = g.s[i][iB0] * std::exp(-g.x[i] * g.x[i] / 100);
    try {
        lg_pseudo_inverse(f, g, reference_profile().p);
        FAIL();
    } catch (const SolvabilityViolation& e) {
        EXPECT_GT(e.defect, 0.0);
    }
}

TEST(Spectrum, FarFieldEdges) {
    const auto m = asymptotic_spectrum(2.0, Side::minus, OperatorKind::M);
    EXPECT_EQ(m.stated, -2.0);
    EXPECT_EQ(m.block_A, -2.0);
    EXPECT_EQ(m.block_C, -1.0);
    EXPECT_EQ(m.union_edge, -1.0);
    EXPECT_DOUBLE_EQ(asymptotic_spectrum(1.25, Side::minus, OperatorKind::L).stated, -0.25);
    EXPECT_EQ(asymptotic_spectrum(1.25, Side::plus, OperatorKind::L).stated, 0.0);
    const auto mp = asymptotic_spectrum(1.5, Side::plus, OperatorKind::M);
    EXPECT_DOUBLE_EQ(mp.block_A, -0.5);
    EXPECT_EQ(mp.block_C, -2.0);
}

TEST(PseudoInverse, WeightedBoundUniformInEpsilon) {
    // fixed forcing shape in the slow variable X = eps x, made orthogonal to B
    std::vector<double> ratio;
    for (double eps : {0.1, 0.05, 0.025}) {
        const auto prof = heteroclinic_solve(derive_params(eps, 1.5));
        GridSpec gs;
        gs.h = 0.05;
        const auto g = resample(prof, gs);
        const std::size_t n = g.size();
        std::vector<double> f1(n), f2(n), f(n), w(n);
        double c1 = 0, c2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double X = eps * g.x[i], B = g.s[i][iB0];
            f1[i] = std::exp(-4 * (X + 1) * (X + 1));
            f2[i] = std::exp(-4 * (X - 1) * (X - 1));
            c1 += f1[i] * B;
            c2 += f2[i] * B;
            w[i] = std::exp(0.5 * eps * prof.p.delta * std::abs(g.x[i]));
        }
        for (std::size_t i = 0; i < n; ++i) f[i] = f1[i] - c1 / c2 * f2[i];
        const auto out = lg_pseudo_inverse(f, g, prof.p, 1e-6);
        std::vector<double> uu(n), ff(n);
        for (std::size_t i = 0; i < n; ++i) {
            uu[i] = std::pow(out.u[i] * w[i], 2);
            ff[i] = std::pow(f[i] * w[i], 2);
        }
        ratio.push_back(std::sqrt(trapezoid(uu, g.h) / trapezoid(ff, g.h)));
    }
    const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
    EXPECT_LT(*hi / *lo, 2.0) << ratio[0] << " " << ratio[1] << " " << ratio[2];
    EXPECT_TRUE(std::isfinite(*hi));
}
