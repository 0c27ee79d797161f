#include <capmin/ode_oracle.hpp>
#include <capmin/profile.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace capmin;

namespace {

PotentialSpec model_a(double B, double S, double m = 2.5, double n = 2, double D = 0)
{
    PotentialSpec p;
    p.family = D > 0 ? Family::ModelAGravity : Family::ModelA;
    p.B = B;
    p.S = S;
    p.D = D;
    p.m = m;
    p.n = n;
    return p;
}

PotentialSpec model_b(double S, double D = 0)
{
    PotentialSpec p;
    p.family = D > 0 ? Family::ModelBGravity : Family::ModelB;
    p.A = 1;
    p.B = -1;
    p.S = S;
    p.D = D;
    p.m = 2.5;
    p.n = 3;
    return p;
}

struct Case {
    PotentialSpec spec;
    double u0;
};

std::vector<Case> oracle_cases()
{
    return {{model_a(0, -2.5), 9.27},    {model_a(0, -2.5), 1.0},       {model_a(0, 1), 1.7},
            {model_a(0, 0), 1.0},        {model_a(1.8, -1), 0.5},       {model_a(1.8, -1), 5.0},
            {model_b(-1), 3.0},          {model_a(0, -1, 2.5, 2, 0.1), 2.0}, {model_b(-1, 0.1), 2.0},
            {model_a(0, -1, 1.5, 1.2), 2.0}};
}

// largest relative height difference between the shooting profile and the
// quadrature profile over [0, 0.95 rbar], measured through the distance map
double profile_gap(const HeightSolver& hs, const HeightState& st, const Profile& ode)
{
    double worst = 0;
    const std::size_t stride = std::max<std::size_t>(1, ode.xs.size() / 200);
    for (std::size_t i = 1; i + 1 < ode.xs.size(); i += stride) {
        if (ode.xs[i] > 0.95 * ode.rbar)
            break;
        const double xq = hs.distance_to(st, ode.us[i]);
        worst = std::max(worst, std::abs(ode.uprimes[i] * (ode.xs[i] - xq)) / st.u0);
    }
    return worst;
}

} // namespace

TEST(Profile, EigenvalueIsQOverU0)
{
    for (const auto& c : oracle_cases()) {
        const HeightSolver hs(c.spec);
        const auto pr = hs.profile(hs.at_height(c.u0), 128);
        const double lam = hs.potential().eval(c.u0).q / c.u0;
        EXPECT_NEAR(pr.lambda, lam, 1e-12 * std::abs(lam)) << to_string(c.spec.family) << " u0=" << c.u0;
    }
}

TEST(Profile, FirstIntegralHoldsOnEmittedNodes)
{
    for (const auto& c : oracle_cases()) {
        const HeightSolver hs(c.spec);
        const auto pr = hs.profile(hs.at_height(c.u0), 512);
        EXPECT_LE(first_integral_residual(pr, hs.potential()), 1e-8) << to_string(c.spec.family) << " u0=" << c.u0;
    }
}

TEST(Profile, NodesAreOrdered)
{
    for (const auto& c : oracle_cases()) {
        const HeightSolver hs(c.spec);
        const auto pr = hs.profile(hs.at_height(c.u0), 256);
        ASSERT_GE(pr.xs.size(), 16u);
        EXPECT_EQ(pr.xs.front(), 0.0);
        EXPECT_EQ(pr.us.front(), c.u0);
        EXPECT_EQ(pr.us.back(), 0.0);
        EXPECT_EQ(pr.xs.back(), pr.rbar);
        for (std::size_t i = 1; i < pr.xs.size(); ++i) {
            EXPECT_GT(pr.xs[i], pr.xs[i - 1]);
            EXPECT_LT(pr.us[i], pr.us[i - 1]);
            EXPECT_LT(pr.uprimes[i], 0.0);
        }
    }
}

TEST(Profile, QuadratureMatchesShootingOracle)
{
    for (const auto& c : oracle_cases()) {
        const HeightSolver hs(c.spec);
        const auto st = hs.at_height(c.u0);
        const auto I = hs.integrals(st);
        const auto ode = solve_profile_ode(hs.potential(), c.u0);
        const std::string tag = to_string(c.spec.family) + " u0=" + std::to_string(c.u0);
        EXPECT_NEAR(ode.mass / I.mass, 1, 1e-9) << tag;
        EXPECT_NEAR(ode.rbar / I.rbar, 1, 1e-9) << tag;
        EXPECT_NEAR(ode.energy / I.energy, 1, 1e-6) << tag;
        EXPECT_LE(profile_gap(hs, st, ode), 1e-6) << tag;
    }
}

TEST(Profile, ProfileTotalsMatchIntegrals)
{
    const HeightSolver hs(model_a(0, -1));
    const auto st = hs.at_height(3.0);
    const auto I = hs.integrals(st);
    const auto pr = hs.profile(st, 64);
    EXPECT_DOUBLE_EQ(pr.mass, I.mass);
    EXPECT_DOUBLE_EQ(pr.rbar, I.rbar);
    EXPECT_DOUBLE_EQ(pr.energy, I.energy);
    EXPECT_DOUBLE_EQ(mass(model_a(0, -1), 3.0), I.mass);
}

TEST(Profile, HeightAtInvertsDistance)
{
    const HeightSolver hs(model_a(1.8, -1));
    const auto st = hs.at_height(5.0);
    for (double u : {4.9, 3.0, 1.0, 1e-3}) {
        const double x = hs.distance_to(st, u);
        EXPECT_NEAR(hs.height_at(st, x), u, 1e-10 * 5.0);
    }
    EXPECT_EQ(hs.height_at(st, 1e6), 0.0);
}

TEST(Profile, MicroscopicContactLaw)
{
    for (double m : {1.5, 2.0, 2.5}) {
        const auto spec = model_a(0, -1, m, 0.5 * (1 + m));
        const HeightSolver hs(spec);
        const auto pr = hs.profile(hs.at_height(2.0), 128);
        const double alpha = 2 / (m + 1);
        const double C = std::pow(spec.A * (m + 1) * (m + 1) / 2, 1 / (m + 1));
        EXPECT_NEAR(pr.micro_exponent, alpha, 1e-2) << "m=" << m;
        EXPECT_NEAR(pr.micro_prefactor / C, 1, 1e-2) << "m=" << m;
    }
}

TEST(Profile, FineGridsNearTheContactPointStayFinite)
{
    // quadrature nodes in the last panel round onto the contact point itself
    const HeightSolver hs(model_a(0, -1, 1.5, 1.25));
    const auto pr = hs.profile(hs.at_height(2.0), 512);
    EXPECT_TRUE(std::isfinite(pr.rbar));
    EXPECT_NEAR(pr.micro_exponent, 0.8, 1e-3);
}

TEST(Profile, MassIsContinuousAcrossCoordinateSwitches)
{
    const HeightSolver hs(model_a(1.8, -1));
    ASSERT_EQ(hs.landscape().admissible().size(), 2u);
    // plateau side of the first interval
    const auto L = hs.plateau_switch(0);
    ASSERT_TRUE(L.has_value());
    const auto a = hs.at_plateau(0, *L);
    const auto b = hs.at_height(a.u0 - 1e-14 * a.u0);
    EXPECT_NEAR(hs.integrals(a).mass / hs.integrals(b).mass, 1, 1e-9);
    // touch side of the second interval
    const auto T = hs.touch_switch(1);
    ASSERT_TRUE(T.has_value());
    const auto c = hs.at_touch(1, *T);
    HeightState d = hs.at_height(c.u0);
    EXPECT_NEAR(hs.integrals(c).mass / hs.integrals(d).mass, 1, 1e-9);
}

TEST(Profile, MassDivergesTowardCharacteristicHeight)
{
    const HeightSolver hs(model_a(0, 1));
    const double es = hs.landscape().e_star().value();
    double prev = 0;
    for (double L : {10.0, 100.0, 1000.0, 5000.0}) {
        const auto st = hs.at_plateau(0, L);
        EXPECT_LE(st.u0, es); // the gap to e* drops below rounding for long plateaus
        const auto I = hs.integrals(st);
        EXPECT_GT(I.mass, prev);
        prev = I.mass;
    }
    EXPECT_GT(prev, 1e4);
    // energy per unit mass tends to R(e*)
    const auto I = hs.integrals(hs.at_plateau(0, 20000.0));
    EXPECT_NEAR(I.energy / I.mass, hs.potential().r(es), 2e-3 * std::abs(hs.potential().r(es)));
}

TEST(Profile, TouchCoordinateReachesLargeMass)
{
    const HeightSolver hs(model_a(1.8, -1));
    const auto T = hs.touch_switch(1);
    ASSERT_TRUE(T.has_value());
    double prev = 0;
    for (double dL : {0.0, 50.0, 500.0}) {
        const auto I = hs.integrals(hs.at_touch(1, *T + dL));
        EXPECT_GT(I.mass, prev);
        prev = I.mass;
    }
}

TEST(Profile, CustomPotentialMatchesModelA)
{
    auto cp = std::make_shared<CustomPotential>();
    cp->q = [](double s) { return std::pow(s, -1.5) + 1.0; };
    cp->dq = [](double s) { return -1.5 * std::pow(s, -2.5); };
    cp->d2q = [](double s) { return 3.75 * std::pow(s, -3.5); };
    PotentialSpec c;
    c.family = Family::Custom;
    c.A = 1;
    c.m = 2.5;
    c.S = -1;
    c.custom = cp;
    const HeightSolver a(model_a(0, -1)), b(c);
    for (double u0 : {0.3, 2.0, 20.0}) {
        const auto Ia = a.integrals(a.at_height(u0)), Ib = b.integrals(b.at_height(u0));
        EXPECT_NEAR(Ib.mass / Ia.mass, 1, 1e-10);
        EXPECT_NEAR(Ib.energy / Ia.energy, 1, 1e-10);
    }
}

TEST(Profile, RejectsInadmissibleHeights)
{
    const HeightSolver hs(model_a(0, 1));
    EXPECT_THROW(hs.at_height(2.0), NotAdmissible);
    EXPECT_THROW(hs.profile(hs.at_height(1.0), 8), DomainError);
    const HeightSolver ns(model_a(1.8, -1));
    EXPECT_THROW(ns.at_height(2.0), NotAdmissible);
}

TEST(Oracle, RejectsFlatTop)
{
    const auto pot = validate(model_a(0, 1));
    const double es = 2.5 / 1.0;
    EXPECT_THROW(solve_profile_ode(pot, std::pow(es, 2.0 / 3.0) * 1.01), StepError);
}
