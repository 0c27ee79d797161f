#pragma once

#include "errors.hpp"
#include "extended.hpp"
#include "numerics.hpp"
#include "potential.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace capmin {

enum class StationaryKind { LocalMin, LocalMax };

struct StationaryPoint {
    double s;
    StationaryKind kind;
    double r; // R(s)
};

// Connected component (lo, hi) of the admissible set. lo is 0 or a point where
// R returns to the level of an earlier local minimum (lo_anchor); hi is +inf
// or a local minimum of R (hi_anchor). Anchors index Landscape::stationary.
struct AdmissibleInterval {
    double lo = 0.0;
    Extended hi = Extended::infinity();
    std::optional<std::size_t> lo_anchor;
    std::optional<std::size_t> hi_anchor;
};

enum class Regime { Droplet, Pancake, Transition };
enum class Uniqueness { Unique, NonUniqueSomewhere, Unknown };

inline const char* to_string(Regime r)
{
    switch (r) {
    case Regime::Droplet: return "droplet";
    case Regime::Pancake: return "pancake";
    case Regime::Transition: return "transition";
    }
    return "?";
}

inline const char* to_string(Uniqueness u)
{
    switch (u) {
    case Uniqueness::Unique: return "unique";
    case Uniqueness::NonUniqueSomewhere: return "non_unique_somewhere";
    case Uniqueness::Unknown: return "unknown";
    }
    return "?";
}

struct Thresholds {
    std::optional<double> c1, c2, c3;
};

struct Classification {
    Regime regime;
    Uniqueness uniqueness;
};

struct ScanOptions {
    double s_min = 1e-8;
    double s_max = 1e8;
    std::size_t points = 4096;
};

inline Thresholds thresholds(const PotentialSpec& p)
{
    Thresholds t;
    if (p.family == Family::ModelA) {
        if (!(p.S < 0))
            throw NotApplicable("c1, c2 need S < 0");
        const double ms = -p.S / (p.m - p.n);
        const double e1 = (p.n - 1) / (p.m - 1), e2 = (p.m - p.n) / (p.m - 1);
        t.c1 = (p.m - 1) * std::pow(p.A / (p.n - 1), e1) * std::pow(ms, e2);
        t.c2 = (p.m - 1) / p.n * std::pow(p.A * p.m / (p.n - 1), e1) * std::pow(ms, e2);
        return t;
    }
    if (p.family == Family::ModelAGravity) {
        if (!(p.D > 0))
            throw NotApplicable("c3 needs D > 0");
        t.c3 = (p.m + 1) / (p.n * (p.n - 1)) * std::pow(p.A * p.m * (p.m - 1) / (p.n + 1), (p.n + 1) / (p.m + 1))
            * std::pow(p.D / (p.m - p.n), (p.m - p.n) / (p.m + 1));
        return t;
    }
    throw NotApplicable("thresholds are defined for model A families only");
}

class Landscape {
public:
    explicit Landscape(Potential pot, ScanOptions opt = {}) : pot_(std::move(pot)) { scan(opt); }

    const Potential& potential() const { return pot_; }
    const std::vector<StationaryPoint>& stationary() const { return stat_; }
    const std::vector<AdmissibleInterval>& admissible() const { return intervals_; }

    Extended e_star() const { return e_star_; }
    bool e_star_tie() const { return tie_; }
    Extended z0() const { return z0_; }
    std::optional<double> e_min() const { return e_min_; }
    std::optional<double> e_max() const { return e_max_; }
    Extended s1() const { return s1_; }

    // Limit of R at infinity: 0, or +inf with gravity.
    Extended r_infinity() const { return pot_.gravity() ? Extended::infinity() : Extended(0.0); }

    bool admissible_contains(double s) const
    {
        if (!(s > 0))
            return false;
        const auto v = pot_.eval(s);
        if (!(v.g > 0))
            return false;
        for (const auto& sp : stat_)
            if (sp.kind == StationaryKind::LocalMin && sp.s < s && !(v.r < sp.r))
                return false;
        return true;
    }

    std::optional<std::size_t> interval_of(double s) const
    {
        if (!admissible_contains(s))
            return std::nullopt;
        for (std::size_t i = 0; i < intervals_.size(); ++i)
            if (s >= intervals_[i].lo && s <= intervals_[i].hi.as_double())
                return i;
        return std::nullopt;
    }

    Classification classify() const
    {
        const auto& p = pot_.spec();
        const double negS = -p.S;
        switch (p.family) {
        case Family::ModelA: {
            if (negS > 0) {
                const auto t = thresholds(p);
                const Regime reg = p.B < *t.c1 ? Regime::Droplet : Regime::Pancake;
                Uniqueness u = Uniqueness::Unique;
                if (p.B > 0 && p.B < *t.c2)
                    u = Uniqueness::Unknown;
                else if (p.B >= *t.c2 && p.B < *t.c1)
                    u = Uniqueness::NonUniqueSomewhere;
                return {reg, u};
            }
            if (negS < 0 || p.B > 0)
                return {Regime::Pancake, Uniqueness::Unique};
            return {Regime::Transition, Uniqueness::Unique};
        }
        case Family::ModelB:
            if (negS > 0)
                return {Regime::Droplet, Uniqueness::Unique};
            if (negS < 0)
                return {Regime::Pancake, Uniqueness::Unique};
            return {Regime::Transition, Uniqueness::Unique};
        case Family::ModelAGravity: {
            if (negS <= 0)
                return {Regime::Pancake, Uniqueness::Unique};
            const auto t = thresholds(p);
            return {Regime::Pancake, p.B <= *t.c3 ? Uniqueness::Unique : Uniqueness::Unknown};
        }
        case Family::ModelBGravity:
            return {Regime::Pancake, Uniqueness::Unique};
        case Family::Custom: {
            Regime reg = Regime::Pancake;
            if (e_star_.is_infinite())
                reg = negS > 0 ? Regime::Droplet : Regime::Transition;
            return {reg, z0_.is_finite() ? Uniqueness::NonUniqueSomewhere : Uniqueness::Unknown};
        }
        }
        return {Regime::Pancake, Uniqueness::Unknown};
    }

    std::optional<Thresholds> thresholds_if_defined() const
    {
        try {
            return thresholds(pot_.spec());
        } catch (const NotApplicable&) {
            return std::nullopt;
        }
    }

private:
    void scan(const ScanOptions& opt)
    {
        const auto grid = logspace(opt.s_min, opt.s_max, opt.points);
        std::vector<double> gv(grid.size()), qv(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto v = pot_.eval(grid[i]);
            gv[i] = v.g;
            qv[i] = v.q;
        }
        if (!(gv[0] > 0))
            throw ResolutionError("R is not decreasing at the left end of the scan range");

        auto gfun = [this](double s) { return pot_.g(s); };
        int sign = 1;
        for (std::size_t i = 1; i < grid.size(); ++i) {
            const int si = gv[i] > 0 ? 1 : (gv[i] < 0 ? -1 : 0);
            if (si == 0 || si == sign)
                continue;
            // si is the new sign; the root lies in (grid[j], grid[i]] for the last nonzero node j
            std::size_t j = i - 1;
            while (j > 0 && gv[j] == 0)
                --j;
            const double z = find_root(gfun, grid[j], grid[i], gv[j], gv[i], 1e-15);
            const auto kind = sign > 0 ? StationaryKind::LocalMin : StationaryKind::LocalMax;
            if (!stat_.empty() && std::abs(z - stat_.back().s) <= 1e-10 * z)
                throw ResolutionError("stationary points of R closer than the scan resolution");
            stat_.push_back({z, kind, pot_.r(z)});
            sign = si;
        }

        // first zero of Q
        s1_ = Extended::infinity();
        for (std::size_t i = 1; i < grid.size(); ++i)
            if ((qv[i - 1] > 0) != (qv[i] > 0)) {
                auto qf = [this](double s) { return pot_.eval(s).q; };
                s1_ = find_root(qf, grid[i - 1], grid[i], qv[i - 1], qv[i], 1e-15);
                break;
            }

        const Extended rinf = r_infinity();
        std::optional<double> lowest;
        for (const auto& sp : stat_)
            if (sp.kind == StationaryKind::LocalMin && (!lowest || sp.r < *lowest))
                lowest = sp.r;

        e_star_ = Extended::infinity();
        z0_ = Extended::infinity();
        if (lowest && *lowest < rinf.as_double()) {
            int count = 0;
            for (const auto& sp : stat_)
                if (sp.kind == StationaryKind::LocalMin && sp.r - *lowest <= 1e-12 * std::abs(*lowest)) {
                    if (count++ == 0)
                        e_star_ = sp.s;
                }
            tie_ = count > 1;
        } else if (lowest) {
            z0_ = *lowest;
            for (const auto& sp : stat_)
                if (sp.kind == StationaryKind::LocalMin && sp.r == *lowest) {
                    e_min_ = sp.s;
                    break;
                }
            if (stat_.back().kind == StationaryKind::LocalMax && *lowest > 0)
                e_max_ = level_crossing(stat_.back().s, Extended::infinity(), *lowest);
        }
        build_intervals();
    }

    // Point in (a, b) on a decreasing stretch of R where R equals level.
    double level_crossing(double a, Extended b, double level) const
    {
        auto f = [&](double s) { return pot_.r(s) - level; };
        double hi = b.is_finite() ? b.value() : 2 * a;
        if (b.is_infinite())
            while (f(hi) > 0) {
                hi *= 2;
                if (hi > 1e300)
                    throw ResolutionError("level not reached before overflow");
            }
        return find_root(f, a, hi, f(a), f(hi), 1e-15);
    }

    void build_intervals()
    {
        // decreasing stretches of R: (0, z1), (max_k, min_{k+1}), ..., (max_last, inf)
        std::optional<std::size_t> best; // lowest local minimum so far
        double start = 0.0;
        bool decreasing = true;
        auto close = [&](Extended end, std::optional<std::size_t> end_anchor) {
            if (!best) {
                intervals_.push_back({0.0, end, std::nullopt, end_anchor});
                return;
            }
            const double level = stat_[*best].r;
            const double r_end = end.is_finite() ? stat_[*end_anchor].r : r_infinity().as_double();
            if (!(r_end < level))
                return;
            intervals_.push_back({level_crossing(start, end, level), end, best, end_anchor});
        };
        for (std::size_t k = 0; k < stat_.size(); ++k) {
            const auto& sp = stat_[k];
            if (sp.kind == StationaryKind::LocalMin && decreasing) {
                close(Extended(sp.s), k);
                if (!best || sp.r < stat_[*best].r)
                    best = k;
                decreasing = false;
            } else if (sp.kind == StationaryKind::LocalMax) {
                start = sp.s;
                decreasing = true;
            }
        }
        if (decreasing)
            close(Extended::infinity(), std::nullopt);
    }

    Potential pot_;
    std::vector<StationaryPoint> stat_;
    std::vector<AdmissibleInterval> intervals_;
    Extended e_star_ = Extended::infinity();
    bool tie_ = false;
    Extended z0_ = Extended::infinity();
    std::optional<double> e_min_, e_max_;
    Extended s1_ = Extended::infinity();
};

inline Extended compute_e_star(const PotentialSpec& spec) { return Landscape(validate(spec)).e_star(); }

inline Classification classify(const PotentialSpec& spec) { return Landscape(validate(spec)).classify(); }

} // namespace capmin
