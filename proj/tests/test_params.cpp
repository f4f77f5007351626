#include <gtest/gtest.h>

#include <cmath>

#include "hetero/params.hpp"

using namespace hetero;

TEST(DeriveParams, DeltaFromG) {
    EXPECT_DOUBLE_EQ(derive_params(0.1, 2.0).delta, 1.0);
    EXPECT_DOUBLE_EQ(derive_params(0.1, 1.25).delta, 0.5);
}

TEST(DeriveParams, RejectsGBelowTenNinths) {
    EXPECT_THROW(derive_params(0.1, 1.05), DomainError);
    EXPECT_THROW(derive_params(0.1, 10.0 / 9.0), DomainError);
    EXPECT_NO_THROW(derive_params(0.1, 2.0));
}

TEST(DeriveParams, MessageCitesAdmissibleRange) {
    try {
        derive_params(0.1, 3.0);
        FAIL();
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("(10/9, 2]"), std::string::npos);
    }
}

TEST(DeriveParams, EpsilonGuards) {
    EXPECT_THROW(derive_params(0.0, 1.5), DomainError);
    EXPECT_THROW(derive_params(-0.1, 1.5), DomainError);
    EXPECT_THROW(derive_params(0.3, 1.5), DomainError);  // default ceiling 0.25
    EXPECT_NO_THROW(derive_params(0.3, 1.5, {0.5, false}));
    EXPECT_THROW(derive_params(0.1, 0.9), DomainError);  // delta not real
}

TEST(DeriveParams, OverrideFlagsUnsupportedRegime) {
    const auto p = derive_params(0.1, 3.0, {0.25, true});
    EXPECT_TRUE(p.unsupported);
    EXPECT_DOUBLE_EQ(p.delta, std::sqrt(2.0));
    EXPECT_FALSE(derive_params(0.1, 1.5).unsupported);
}

TEST(Scaling, APlusAtUpperNuBound) {
    const auto p = derive_params(0.1, 2.0);
    const double nu = std::sqrt(2.0) / 3.0;
    const auto sc = scaling_from_epsilon(p, default_nu_minus(p), nu);
    // ((1+1)*1/(8*(2/9)))^(2/5) = (9/8)^(2/5)
    EXPECT_NEAR(sc.a_plus, std::pow(9.0 / 8.0, 0.4), 1e-14);
    EXPECT_NEAR(sc.a_plus, 1.0482407, 5e-8);
    EXPECT_NEAR(a_plus_min(1.0), 1.05, 1e-15);
}

TEST(Scaling, XStarCoefficient) {
    const auto p = derive_params(0.1, 2.0);
    const double nu = 0.5 / 84.33;
    const auto sc = scaling_from_epsilon(p, nu, default_nu_plus(p));
    // x* = sqrt(1+d^2)/(2 sqrt2 eps) (eps/nu)^(4/5) = 0.5 nu^(-4/5) eps^(-1/5) at delta = 1
    const double coeff = sc.x_star * std::pow(p.epsilon, 0.2);
    EXPECT_NEAR(coeff, 0.5 * std::pow(nu, -0.8), 1e-10);
    EXPECT_NEAR(coeff, 30.23985, 1e-4);
    EXPECT_NEAR(coeff, 30.26, 30.26 * 1e-3);
}

TEST(Scaling, RejectsLargeNuPlus) {
    const auto p = derive_params(0.1, 2.0);
    try {
        scaling_from_epsilon(p, default_nu_minus(p), 1.0);
        FAIL();
    } catch (const AdmissibilityError& e) {
        EXPECT_EQ(e.inequality, "estim nu+");
    }
}

TEST(Scaling, EachRejectionNamesOneInequality) {
    const auto p = derive_params(0.1, 1.5);
    const double sd = std::sqrt(p.delta);
    auto which = [&](double nm, double np) -> std::string {
        try {
            scaling_from_epsilon(p, nm, np);
        } catch (const AdmissibilityError& e) {
            return e.inequality;
        }
        return "";
    };
    const double good_m = default_nu_minus(p), good_p = default_nu_plus(p);
    EXPECT_EQ(which(good_m, good_p), "");
    EXPECT_EQ(which(2 * nu_minus_bound(p.delta) * sd, good_p), "restrict nu-");
    EXPECT_EQ(which(good_m, 1.01 * nu_plus_upper(p.delta) * sd), "estim nu+");
    EXPECT_EQ(which(good_m, 0.99 * nu_plus_lower(p.delta) * sd), "cond nu delta");
}

TEST(Scaling, ReconstructsEpsilonAndRatio) {
    for (double g : {1.12, 1.25, 1.5, 1.75, 2.0})
        for (double eps : {0.01, 0.05, 0.1, 0.2}) {
            const auto p = derive_params(eps, g);
            const auto sc = default_scaling(p);
            EXPECT_NEAR(sc.nu_minus * std::pow(sc.alpha_minus, 2.5) / eps, 1.0, 1e-14);
            EXPECT_NEAR(sc.nu_plus * std::pow(sc.alpha_plus, 2.5) / eps, 1.0, 1e-14);
            EXPECT_NEAR(sc.a_minus / sc.a_plus, std::pow(sc.nu_plus / sc.nu_minus, 0.8), 1e-12 * sc.a_minus / sc.a_plus);
            // a+- do not depend on epsilon
            const auto sc2 = default_scaling(derive_params(eps / 2, g));
            EXPECT_NEAR(sc2.a_plus, sc.a_plus, 1e-14);
            // the default nu+ satisfies the Picard contraction
            EXPECT_LT(2 * std::pow(sc.a_plus, 5) / 3, 1.0);
        }
}

TEST(Regimes, DeltaMinRecomputed) {
    const auto r = physical_regimes();
    const double expect[3] = {0.476, 0.576, 0.650};
    const double g[3] = {1.227, 1.332, 1.423};
    for (int i = 0; i < 3; ++i) {
        EXPECT_DOUBLE_EQ(r[i].g_min, g[i]);
        EXPECT_NEAR(r[i].delta_min, expect[i], 1e-3);
        EXPECT_NEAR(r[i].delta_min, std::sqrt(g[i] - 1.0), 1e-15);
    }
    EXPECT_NEAR(r[0].delta_min, 0.476445, 1e-6);
    EXPECT_STREQ(r[0].label, "rigid-rigid");
    EXPECT_STREQ(r[1].label, "rigid-free");
    EXPECT_STREQ(r[2].label, "free-free");
}
