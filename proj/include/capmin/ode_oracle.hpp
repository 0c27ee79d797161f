#pragma once

#include "errors.hpp"
#include "potential.hpp"
#include "profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace capmin {

struct OracleOptions {
    double start_rel = 1e-5;  // first point at x = start_rel * u0
    double step_rel = 1e-3;   // step cap relative to the top curvature length
    double contact_frac = 2e-3; // step <= contact_frac * u / |u'|
    double stop_rel = 1e-9;   // stop once u < stop_rel * u0
    std::size_t max_steps = 20'000'000;
};

// Shooting reference: classical RK4 on u'' = Q'(u) - lambda from the top with
// u'(0) = 0, lambda = Q(u0)/u0. Independent of the quadrature path; used to
// cross-check it.
inline Profile solve_profile_ode(const Potential& pot, double u0, const OracleOptions& opt = {})
{
    const auto top = pot.eval(u0);
    const double lambda = top.r;
    const double kappa = top.dq - lambda; // u''(0) = u0 R'(u0)
    if (!(kappa < 0))
        throw StepError("top height is not a strict maximum of the trajectory");
    const double ell = std::sqrt(u0 / -kappa);
    if (!(ell < 1e12 * u0))
        throw StepError("top height is numerically stationary");

    Profile pr;
    pr.u0 = u0;
    pr.lambda = lambda;

    // Taylor start: u = u0 + k x^2/2 + Q''(u0) k x^4/24
    const double h0 = opt.start_rel * u0;
    double x = h0;
    double u = u0 + 0.5 * kappa * h0 * h0 + top.d2q * kappa * std::pow(h0, 4) / 24;
    double v = kappa * h0 + top.d2q * kappa * std::pow(h0, 3) / 6;

    auto acc = [&](double uu) { return pot.eval(uu).dq - lambda; };
    auto f_energy = [&](double uu, double vv) { return 0.5 * vv * vv + pot.eval(uu).q; };
    auto df_energy = [&](double uu, double vv) { return vv * (2 * pot.eval(uu).dq - lambda); };

    pr.xs = {0.0, x};
    pr.us = {u0, u};
    pr.uprimes = {0.0, v};
    double mass = u0 * h0 + kappa * std::pow(h0, 3) / 6;
    double energy = top.q * h0;

    const double hmax = opt.step_rel * ell;
    const double u_stop = opt.stop_rel * u0;
    std::size_t steps = 0;
    while (u > u_stop) {
        if (!(v < 0))
            throw StepError("trajectory stopped descending");
        if (++steps > opt.max_steps)
            throw StepError("too many steps before contact");
        double h = std::min(hmax, opt.contact_frac * u / -v);
        const double fe0 = f_energy(u, v), dfe0 = df_energy(u, v);
        const double k1u = v, k1v = acc(u);
        const double k2u = v + 0.5 * h * k1v, k2v = acc(u + 0.5 * h * k1u);
        const double k3u = v + 0.5 * h * k2v, k3v = acc(u + 0.5 * h * k2u);
        const double k4u = v + h * k3v, k4v = acc(u + h * k3u);
        const double un = u + h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
        const double vn = v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
        if (!(un > 0))
            throw StepError("step crossed the contact line");
        // trapezoid with endpoint-derivative correction, fourth order
        mass += 0.5 * h * (u + un) + h * h / 12 * (v - vn);
        energy += 0.5 * h * (fe0 + f_energy(un, vn)) + h * h / 12 * (dfe0 - df_energy(un, vn));
        x += h;
        u = un;
        v = vn;
        pr.xs.push_back(x);
        pr.us.push_back(u);
        pr.uprimes.push_back(v);
        if (x > 1e9 * ell)
            throw StepError("trajectory too long");
    }
    // remaining run to contact from u ~ C d^alpha: d = alpha u / |u'|
    const double m = pot.m();
    const double alpha = 2 / (m + 1);
    const double d_end = alpha * u / -v;
    mass += u * d_end / (alpha + 1);
    energy += f_energy(u, v) * d_end * (m + 1) / (3 - m);
    pr.rbar = x + d_end;
    pr.mass = 2 * mass;
    pr.energy = 2 * energy;
    pr.xs.push_back(pr.rbar);
    pr.us.push_back(0.0);
    pr.uprimes.push_back(-std::numeric_limits<double>::infinity());
    return pr;
}

inline Profile solve_profile_ode(const PotentialSpec& spec, double u0, const OracleOptions& opt = {})
{
    return solve_profile_ode(validate(spec), u0, opt);
}

} // namespace capmin
