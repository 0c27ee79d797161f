#pragma once

#include "errors.hpp"
#include "landscape.hpp"
#include "minimizer.hpp"
#include "numerics.hpp"
#include "profile.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <optional>
#include <vector>

namespace capmin {

// f_p(w) = int_w^1 sqrt(p) t^((p-1)/2) / sqrt(1 - t^p) dt. With t^p = cos^2(theta)
// the integrand becomes (2/sqrt(p)) cos^(1/p)(theta) on [0, acos(w^(p/2))].
inline double f_p(double p, double w)
{
    if (!(p >= 1) || !std::isfinite(p))
        throw DomainError("f_p needs p >= 1");
    if (!(w >= 0 && w <= 1))
        throw DomainError("f_p needs w in [0, 1]");
    if (w == 1)
        return 0.0;
    const double top = std::acos(std::pow(w, 0.5 * p));
    boost::math::quadrature::tanh_sinh<double> ts;
    auto g = [p](double th) { return std::pow(std::cos(th), 1 / p); };
    return 2 / std::sqrt(p) * ts.integrate(g, 0.0, top, 1e-15);
}

inline double f_p0(double p) { return f_p(p, 0.0); }

// Inverse of the decreasing map w -> f_p(w) on [0, f_p(0)].
inline double f_p_inverse(double p, double y)
{
    const double y0 = f_p0(p);
    if (!(y >= 0 && y <= y0 * (1 + 1e-15)))
        throw DomainError("f_p inverse needs y in [0, f_p(0)]");
    if (y >= y0)
        return 0.0;
    if (y == 0)
        return 1.0;
    auto f = [&](double w) { return f_p(p, w) - y; };
    return find_root(f, 0.0, 1.0, y0 - y, -y, 1e-15);
}

// c_p = int_0^1 f_p^{-1}(f_p(0) y) dy
inline double c_p(double p)
{
    const double y0 = f_p0(p);
    boost::math::quadrature::tanh_sinh<double> ts;
    auto g = [&](double y) {
        auto f = [&](double w) { return f_p(p, w) - y0 * y; };
        if (y <= 0)
            return 1.0;
        if (y >= 1)
            return 0.0;
        return find_root(f, 0.0, 1.0, y0 * (1 - y), -y0 * y, 1e-15);
    };
    return ts.integrate(g, 0.0, 1.0, 1e-13);
}

struct AsymptoticPrediction {
    Regime regime = Regime::Droplet;
    double u0_pred = 0;
    double r_pred = 0;
    std::optional<double> theta_mac; // radians
    std::optional<double> thickness;
    std::optional<double> p, K;
    std::optional<double> fp0, cp;
    std::optional<double> e_star;
};

// Leading power Q ~ K s^(1-p) at large heights, which sets the transition shape.
inline std::pair<double, double> transition_tail(const PotentialSpec& s)
{
    switch (s.family) {
    case Family::ModelA:
        if (s.B == 0)
            return {s.m, s.A};
        if (s.B < 0)
            return {s.n, -s.B};
        break;
    case Family::ModelB: return {s.n, std::abs(s.B)};
    case Family::Custom:
        if (s.custom && s.custom->transition_p && s.custom->transition_k)
            return {*s.custom->transition_p, *s.custom->transition_k};
        throw NotApplicable("custom potential declares no transition tail (p, K)");
    default: break;
    }
    throw NotApplicable("no transition tail for this potential");
}

inline AsymptoticPrediction predict(const Landscape& land, double M)
{
    if (!(M > 0))
        throw DomainError("mass must be positive");
    const auto& pot = land.potential();
    const auto& sp = pot.spec();
    AsymptoticPrediction out;
    out.regime = land.classify().regime;
    switch (out.regime) {
    case Regime::Droplet: {
        if (pot.gravity() || !(sp.S < 0))
            throw NotApplicable("droplet prediction needs a finite negative spreading limit");
        const double aS = -sp.S, m = sp.m;
        out.u0_pred = std::pow(9 * aS / 32 * M * M, 0.25);
        out.r_pred = std::pow(9 / (8 * aS) * M * M, 0.25);
        out.theta_mac = std::atan(std::sqrt(2 * aS));
        out.thickness = std::pow(sp.A * (m + 1) * (m + 1) / (4 * aS), 1 / (m - 1));
        break;
    }
    case Regime::Pancake: {
        const double es = land.e_star().value();
        out.e_star = es;
        out.u0_pred = es;
        out.r_pred = M / (2 * es);
        break;
    }
    case Regime::Transition: {
        const auto [p, K] = transition_tail(sp);
        const double f0 = f_p0(p), c = c_p(p);
        out.p = p;
        out.K = K;
        out.fp0 = f0;
        out.cp = c;
        out.u0_pred = std::pow(p * K * M * M / (2 * c * c * f0 * f0), 1 / (p + 3));
        out.r_pred = std::pow(f0 * f0 * std::pow(M, p + 1) / (std::pow(2.0, p + 2) * p * K * std::pow(c, p + 1)), 1 / (p + 3));
        break;
    }
    }
    return out;
}

inline AsymptoticPrediction predict(const PotentialSpec& spec, double M) { return predict(Landscape(validate(spec)), M); }

// Two-scale approximation of the large-mass profile built from the predicted
// top height and radius.
class CompositeProfile {
public:
    CompositeProfile(const Landscape& land, double M) : pred_(predict(land, M))
    {
        const auto& sp = land.potential().spec();
        m_ = sp.m;
        micro_c_ = std::pow(sp.A * (m_ + 1) * (m_ + 1) / 2, 1 / (m_ + 1));
        const double r = pred_.r_pred;
        switch (pred_.regime) {
        case Regime::Droplet: {
            const double aS = -sp.S;
            const double delta = std::pow(std::pow(2 * aS, -(m_ + 1) / 2) * sp.A * (m_ + 1) * (m_ + 1) / 2, 1 / (m_ - 1));
            d_inner_ = crossover([&](double d) { return micro(d); }, [&](double d) { return macro(d); }, delta);
            break;
        }
        case Regime::Pancake: break;
        case Regime::Transition: {
            d_inner_ = crossover([&](double d) { return micro(d); }, [&](double d) { return intermediate(d); }, 1.0);
            d_outer_ = crossover([&](double d) { return intermediate(d); }, [&](double d) { return macro(d); }, 0.5 * r);
            break;
        }
        }
    }

    const AsymptoticPrediction& prediction() const { return pred_; }

    double operator()(double x) const
    {
        const double d = pred_.r_pred - std::abs(x);
        if (d <= 0)
            return 0.0;
        switch (pred_.regime) {
        case Regime::Droplet: return d < d_inner_ ? micro(d) : macro(d);
        case Regime::Pancake: return std::min(micro(d), *pred_.e_star);
        case Regime::Transition:
            if (d < d_inner_)
                return micro(d);
            return d < d_outer_ ? intermediate(d) : macro(d);
        }
        return 0.0;
    }

    double micro(double d) const { return micro_c_ * std::pow(d, 2 / (m_ + 1)); }

    double macro(double d) const
    {
        const double r = pred_.r_pred;
        const double x = r - d;
        switch (pred_.regime) {
        case Regime::Droplet: return std::tan(*pred_.theta_mac) / (2 * r) * (r * r - x * x);
        case Regime::Pancake: return *pred_.e_star;
        case Regime::Transition: {
            const double y = std::min(1.0, std::abs(x) / r);
            return pred_.u0_pred * f_p_inverse(*pred_.p, *pred_.fp0 * y);
        }
        }
        return 0.0;
    }

    // edge layer of the transition, Q ~ K u^(1-p) with negligible lambda
    double intermediate(double d) const
    {
        const double p = *pred_.p;
        return std::pow(0.5 * (p + 1) * std::sqrt(2 * *pred_.K) * d, 2 / (p + 1));
    }

    double inner_crossover() const { return d_inner_; }
    double outer_crossover() const { return d_outer_; }

private:
    // crossing of curves a and b nearest to target on a log grid of distances;
    // differences at rounding level are not crossings, and target itself is
    // used when the curves never cross
    template <class Fa, class Fb>
    double crossover(Fa&& a, Fb&& b, double target) const
    {
        const double r = pred_.r_pred;
        const auto ds = logspace(1e-3 * target, r, 400);
        auto h = [&](double d) { return a(d) - b(d); };
        std::optional<std::size_t> prev;
        double prev_h = 0, best = target, best_dist = INFINITY;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const double av = a(ds[i]), bv = b(ds[i]), hv = av - bv;
            if (std::abs(hv) <= 1e-9 * std::max(std::abs(av), std::abs(bv)))
                continue;
            if (prev && (prev_h > 0) != (hv > 0)) {
                const double d = find_root(h, ds[*prev], ds[i], prev_h, hv, 1e-14);
                const double dist = std::abs(std::log(d / target));
                if (dist < best_dist) {
                    best = d;
                    best_dist = dist;
                }
            }
            prev = i;
            prev_h = hv;
        }
        return best;
    }

    AsymptoticPrediction pred_;
    double m_ = 2;
    double micro_c_ = 1;
    double d_inner_ = 0;
    double d_outer_ = 0;
};

inline double composite_profile(const PotentialSpec& spec, double M, double x)
{
    return CompositeProfile(Landscape(validate(spec)), M)(x);
}

// Least-squares fit u = a - b x^2 over |x| <= frac * rbar; returns tan of the
// angle at which the fitted parabola meets zero, 2 sqrt(a b).
inline double parabola_slope(const Profile& pr, double frac = 0.8)
{
    double s0 = 0, s2 = 0, s4 = 0, t0 = 0, t2 = 0;
    for (std::size_t i = 0; i < pr.xs.size(); ++i) {
        const double x = pr.xs[i];
        if (x > frac * pr.rbar || !(pr.us[i] > 0))
            continue;
        const double x2 = x * x;
        s0 += 1;
        s2 += x2;
        s4 += x2 * x2;
        t0 += pr.us[i];
        t2 += pr.us[i] * x2;
    }
    if (s0 < 3)
        throw ResolutionError("too few profile nodes in the macroscopic region");
    // normal equations for u = a + c x^2
    const double det = s0 * s4 - s2 * s2;
    const double a = (t0 * s4 - t2 * s2) / det;
    const double c = (s0 * t2 - s2 * t0) / det;
    return 2 * std::sqrt(a * -c);
}

struct ConvergenceRow {
    double M = 0;
    double u0 = 0, u0_pred = 0;
    double rbar = 0, rbar_pred = 0;
    double shape_err = 0;
    double energy = 0;
    std::optional<double> tan_theta_fit; // droplets only
};

// Sup over |y| <= 0.9 of the distance between the rescaled computed profile
// and the limit shape of the regime.
inline double shape_error(const Profile& pr, const AsymptoticPrediction& pred)
{
    double err = 0;
    for (std::size_t i = 0; i < pr.xs.size(); ++i) {
        const double y = pr.xs[i] / pr.rbar;
        if (y > 0.9)
            break;
        double e = 0;
        switch (pred.regime) {
        case Regime::Droplet: e = std::abs(pr.us[i] / pr.u0 - (1 - y * y)); break;
        case Regime::Pancake: e = std::abs(pr.us[i] / *pred.e_star - 1); break;
        case Regime::Transition: e = std::abs(pr.us[i] / pr.u0 - f_p_inverse(*pred.p, *pred.fp0 * y)); break;
        }
        err = std::max(err, e);
    }
    return err;
}

inline std::vector<ConvergenceRow> convergence_report(const BranchMap& map, const std::vector<double>& Ms,
                                                      std::size_t profile_nodes = 1024)
{
    const auto& land = map.solver().landscape();
    MinimizerOptions mo;
    mo.profile_nodes = profile_nodes;
    std::vector<ConvergenceRow> rows;
    for (double M : Ms) {
        const auto pred = predict(land, M);
        const auto sol = global_minimizer(map, M, std::nullopt, mo);
        ConvergenceRow r;
        r.M = M;
        r.u0 = sol.u0;
        r.u0_pred = pred.u0_pred;
        r.rbar = sol.profile.rbar;
        r.rbar_pred = pred.r_pred;
        r.energy = sol.energy;
        r.shape_err = shape_error(sol.profile, pred);
        if (pred.regime == Regime::Droplet)
            r.tan_theta_fit = parabola_slope(sol.profile);
        rows.push_back(r);
    }
    return rows;
}

} // namespace capmin
