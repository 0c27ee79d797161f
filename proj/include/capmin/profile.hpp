#pragma once

#include "errors.hpp"
#include "landscape.hpp"
#include "numerics.hpp"
#include "potential.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace capmin {

// Symmetric profile on [-rbar, rbar], stored for x >= 0. The last node is the
// contact point (rbar, 0) where the slope is -inf.
struct Profile {
    std::vector<double> xs;
    std::vector<double> us;
    std::vector<double> uprimes;
    double u0 = 0;
    double lambda = 0;
    double rbar = 0;
    double mass = 0;
    double energy = 0;
    double micro_exponent = 0;
    double micro_prefactor = 0;
};

// How a point on a mass branch is parametrised. Height uses u0 itself.
// Plateau uses L = -log(z - u0) below a local minimum z of R that closes the
// admissible interval; Touch uses Lambda = -log(R(z) - lambda) for the local
// minimum z whose level opens the interval. Both reach heights that are not
// representable as a distinct double next to z or the interval's left end.
enum class Coord { Height, Plateau, Touch };

struct HeightState {
    std::size_t interval = 0;
    Coord coord = Coord::Height;
    double param = 0;
    double u0 = 0;
    double lambda = 0;
    double log_delta = 0; // Plateau
    double log_eps = 0;   // Touch
};

struct Integrals {
    double mass = 0;
    double rbar = 0;
    double energy = 0;
};

namespace detail {

// Local minimum z of R with the expansion R(z - sigma) - R(z) = sum a_k (sigma/z)^k.
struct Anchor {
    std::size_t index = 0;
    double z = 0;
    double rz = 0;
    double eta = 0; // half-width of the window around z
    double c2 = 0;  // leading curvature, per sigma^2
    std::vector<double> a;
    bool series = false;

    // (R(z - sigma) - R(z)) / sigma^2
    double phi(double sigma) const
    {
        const double x = sigma / z;
        double acc = 0;
        for (std::size_t k = a.size() - 1; k >= 2; --k)
            acc = acc * x + a[k];
        return acc / (z * z);
    }

    // (F(sigma) - F(delta)) / (sigma^2 - delta^2) for sigma >= delta >= 0
    double ratio(double sigma, double delta) const
    {
        const double x = sigma / z, d = delta / z;
        if (!(x + d > 0))
            return c2;
        double h = 1.0, dk = 1.0, acc = 0.0;
        for (std::size_t k = 1; k + 1 < a.size(); ++k) {
            dk *= d;
            h = x * h + dk; // h_{k+1} = (x^{k+1} - d^{k+1}) / (x - d)
            acc += a[k + 1] * h;
        }
        return acc / (x + d) / (z * z);
    }
};

enum class PieceKind { Top, Plateau, Window, Plain, Lower };

// One stretch of (0, u0) with its own change of variables. The parameter p runs
// over [p0, p1] and s decreases as p increases. Inside [bulk0, bulk1] the
// integrands are constant to double precision and are integrated in closed form.
struct Piece {
    PieceKind kind = PieceKind::Plain;
    double p0 = 0, p1 = 0;
    double sa = 0, sb = 0; // plain: [sa, sb]; lower: sb = a; top: sb = u0, sa = u0 - w
    double k = 1;          // lower: s = a (1-p)^k
    const Anchor* anchor = nullptr;
    double log_scale = 0; // window: log beta; plateau: log delta
    double eps = 0;       // window: R(z) - lambda
    double bulk0 = 0, bulk1 = 0;
};

struct Sample {
    double s;
    std::array<double, 3> w; // mass, distance, energy-gap weights per unit p
    double uprime;
};

inline double exp_sinh(double log_c, double t)
{
    // c * sinh(t) without overflow for large |t|
    if (std::abs(t) < 20)
        return std::exp(log_c) * std::sinh(t);
    return std::copysign(std::exp(log_c + log_sinh(std::abs(t))), t);
}

inline double inv_sinh_scaled(double sigma, double log_beta)
{
    // asinh(sigma / beta)
    if (sigma == 0)
        return 0;
    const double r = std::log(std::abs(sigma)) - log_beta;
    const double t = r > 30 ? r + M_LN2 : std::asinh(std::exp(r));
    return std::copysign(t, sigma);
}

inline double inv_cosh_scaled(double sigma, double log_delta)
{
    // acosh(sigma / delta), sigma >= delta
    const double r = std::log(sigma) - log_delta;
    if (r <= 0)
        return 0;
    return r > 30 ? r + M_LN2 : std::acosh(std::exp(r));
}

} // namespace detail

struct SolverOptions {
    ScanOptions scan;
    int series_terms = 24;
    double quad_rel_tol = 1e-13;
};

// Mass, energy and profile of the Euler-Lagrange solution of given top height,
// by quadrature of the first integral u'^2 / 2 = u (R(u) - lambda).
class HeightSolver {
public:
    explicit HeightSolver(const Potential& pot, SolverOptions opt = {})
        : land_(pot, opt.scan), opt_(opt)
    {
        build_anchors();
    }

    explicit HeightSolver(const PotentialSpec& spec, SolverOptions opt = {}) : HeightSolver(validate(spec), opt) {}

    const Landscape& landscape() const { return land_; }
    const Potential& potential() const { return land_.potential(); }

    // -log of the largest plateau distance handled in plateau coordinates
    std::optional<double> plateau_switch(std::size_t interval) const
    {
        const auto* h = hi_anchor(interval);
        if (!h)
            return std::nullopt;
        return -std::log(0.25 * h->eta);
    }

    std::optional<double> touch_switch(std::size_t interval) const
    {
        const auto* l = lo_anchor(interval);
        if (!l)
            return std::nullopt;
        return -std::log(1e-2 * l->c2 * l->eta * l->eta);
    }

    HeightState at_height(double u0) const
    {
        const auto iv = land_.interval_of(u0);
        if (!iv)
            throw NotAdmissible("height is not in the admissible set");
        HeightState st;
        st.interval = *iv;
        st.u0 = u0;
        st.param = u0;
        if (const auto* h = hi_anchor(*iv); h && h->z - u0 < 0.25 * h->eta) {
            st.coord = Coord::Plateau;
            st.log_delta = std::log(h->z - u0);
            st.param = -st.log_delta;
            const double d = h->z - u0;
            st.lambda = h->rz + d * d * h->phi(d);
            return st;
        }
        st.lambda = potential().r(u0);
        return st;
    }

    HeightState at_plateau(std::size_t interval, double L) const
    {
        const auto* h = hi_anchor(interval);
        if (!h)
            throw NotApplicable("interval has no local minimum at its right end");
        HeightState st;
        st.interval = interval;
        st.coord = Coord::Plateau;
        st.param = L;
        st.log_delta = -L;
        const double d = std::exp(-L);
        if (!(d < h->eta))
            throw NotApplicable("plateau coordinate outside the expansion window");
        st.u0 = h->z - d;
        st.lambda = h->rz + d * d * h->phi(d);
        return st;
    }

    HeightState at_touch(std::size_t interval, double Lambda) const
    {
        const auto* l = lo_anchor(interval);
        if (!l)
            throw NotApplicable("interval does not start at a touch point");
        const auto& pot = potential();
        const double eps = std::exp(-Lambda);
        const double sL = land_.admissible()[interval].lo;
        HeightState st;
        st.interval = interval;
        st.coord = Coord::Touch;
        st.param = Lambda;
        st.log_eps = -Lambda;
        st.lambda = l->rz - eps;
        const double offset = pot.r(sL) - l->rz; // rounding level
        auto f = [&](double s) { return pot.gap(sL, s) + offset + eps; };
        const double slope = -pot.eval(sL).dr;
        const double step = eps / slope;
        if (step < 1e-15 * sL) {
            st.u0 = sL + step;
        } else {
            const double limit = std::min(land_.admissible()[interval].hi.as_double(), 2 * sL);
            double hi = sL + 2 * step;
            while (hi < limit && f(hi) > 0)
                hi = sL + 2 * (hi - sL);
            hi = std::min(hi, limit);
            if (f(hi) > 0)
                throw NotApplicable("touch coordinate too coarse");
            st.u0 = find_root(f, sL, hi, f(sL), f(hi), 1e-16);
        }
        return st;
    }

    Integrals integrals(const HeightState& st) const
    {
        const auto pieces = layout(st);
        Integrals out;
        for (const auto& pc : pieces) {
            const auto v = piece_integral(pc, st, pc.p0, pc.p1);
            out.mass += v[0];
            out.rbar += v[1];
            out.energy += v[2];
        }
        out.energy += st.lambda * out.mass;
        return out;
    }

    double mass(double u0) const { return integrals(at_height(u0)).mass; }
    double energy(double u0) const { return integrals(at_height(u0)).energy; }

    // Distance from the top to the point of height u on the decreasing side.
    double distance_to(const HeightState& st, double u) const
    {
        if (!(u >= 0 && u <= st.u0))
            throw DomainError("height outside [0, u0]");
        const auto pieces = layout(st);
        double acc = 0;
        for (const auto& pc : pieces) {
            const double bottom = s_at(pc, st, pc.p1);
            if (u <= bottom) {
                acc += piece_integral(pc, st, pc.p0, pc.p1)[1];
                continue;
            }
            return acc + piece_integral(pc, st, pc.p0, param_of(pc, st, u))[1];
        }
        return acc;
    }

    // Height at distance x from the top, 0 beyond the contact point.
    double height_at(const HeightState& st, double x) const
    {
        x = std::abs(x);
        const auto pieces = layout(st);
        double acc = 0;
        for (const auto& pc : pieces) {
            const double len = piece_integral(pc, st, pc.p0, pc.p1)[1];
            if (x > acc + len) {
                acc += len;
                continue;
            }
            const double target = x - acc;
            if (target <= 0)
                return s_at(pc, st, pc.p0);
            auto f = [&](double p) { return piece_integral(pc, st, pc.p0, p)[1] - target; };
            const double p = find_root(f, pc.p0, pc.p1, -target, len - target, 1e-15, 1e-15 * std::max(x, 1e-300));
            return s_at(pc, st, p);
        }
        return 0.0;
    }

    Profile profile(const HeightState& st, std::size_t n_grid = 512) const
    {
        if (n_grid < 16)
            throw DomainError("profile needs at least 16 nodes");
        const auto& pot = potential();
        const auto pieces = layout(st);
        std::vector<double> len(pieces.size());
        Integrals tot;
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            const auto v = piece_integral(pieces[i], st, pieces[i].p0, pieces[i].p1);
            len[i] = v[1];
            tot.mass += v[0];
            tot.rbar += v[1];
            tot.energy += v[2];
        }
        tot.energy += st.lambda * tot.mass;

        Profile pr;
        pr.u0 = st.u0;
        pr.lambda = st.lambda;
        pr.rbar = tot.rbar;
        pr.mass = tot.mass;
        pr.energy = tot.energy;

        // below u_floor, Q exceeds 1e6 times its top value and the first
        // integral cannot be resolved in double precision
        const double qscale = std::max(1.0, std::abs(pot.eval(st.u0).q));
        const double u_floor = std::min(st.u0 * 1e-2, std::pow(pot.A() / (1e6 * qscale), 1 / (pot.m() - 1)));

        const std::size_t body = n_grid - 1; // last node is the contact point
        std::vector<std::size_t> counts(pieces.size(), 3);
        std::size_t used = 3 * pieces.size();
        if (used < body) {
            const std::size_t spare = body - used;
            for (std::size_t i = 0; i < pieces.size(); ++i)
                counts[i] += std::size_t(spare * (0.7 * len[i] / tot.rbar + 0.3 / pieces.size()));
        }

        double x = 0;
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            const auto& pc = pieces[i];
            double pend = pc.p1;
            if (pc.kind == detail::PieceKind::Lower) {
                if (u_floor < pc.sb)
                    pend = 1 - std::pow(u_floor / pc.sb, 1 / pc.k);
                else
                    pend = pc.p0;
            }
            const auto nodes = lobatto01(counts[i]);
            double prev = pc.p0;
            for (std::size_t j = 0; j < nodes.size(); ++j) {
                const double p = pc.p0 + (pend - pc.p0) * nodes[j];
                if (j > 0)
                    x += piece_integral(pc, st, prev, p)[1];
                prev = p;
                const auto smp = sample(pc, st, p);
                if (!pr.us.empty() && !(smp.s < pr.us.back()))
                    continue;
                pr.xs.push_back(x);
                pr.us.push_back(smp.s);
                pr.uprimes.push_back(pr.us.size() == 1 ? 0.0 : smp.uprime);
            }
            x += piece_integral(pc, st, pend, pc.p1)[1];
        }
        // x accumulates the same pieces as rbar; pin the contact point exactly
        pr.xs.push_back(pr.rbar);
        pr.us.push_back(0.0);
        pr.uprimes.push_back(-std::numeric_limits<double>::infinity());
        if (pr.xs.size() > 1 && !(pr.xs[pr.xs.size() - 2] < pr.rbar))
            pr.xs[pr.xs.size() - 2] = std::nextafter(pr.rbar, 0.0);

        fit_micro(pieces.back(), st, pr);
        return pr;
    }

private:
    void build_anchors()
    {
        const auto& pot = potential();
        const auto& sp = land_.stationary();
        anchors_.resize(sp.size());
        for (std::size_t j = 0; j < sp.size(); ++j) {
            if (sp[j].kind != StationaryKind::LocalMin)
                continue;
            auto& an = anchors_[j];
            an.index = j;
            an.z = sp[j].s;
            an.rz = sp[j].r;
            double eta = 0.05 * an.z;
            if (j > 0)
                eta = std::min(eta, 0.3 * (an.z - sp[j - 1].s));
            if (j + 1 < sp.size())
                eta = std::min(eta, 0.3 * (sp[j + 1].s - an.z));
            an.eta = eta;
            if (!pot.has_series())
                continue;
            an.a = pot.series(an.z, opt_.series_terms);
            an.a[0] = an.a[1] = 0; // exact stationarity at the anchor
            if (!(an.a[2] > 0))
                continue;
            an.c2 = an.a[2] / (an.z * an.z);
            // shrink the window until the truncated series reproduces R
            for (int it = 0; it < 12; ++it) {
                bool ok = true;
                for (double sg : {-1.0, 1.0}) {
                    const double sigma = sg * an.eta;
                    const double direct = pot.gap(an.z, an.z - sigma);
                    const double ser = sigma * sigma * an.phi(sigma);
                    if (std::abs(ser - direct) > 1e-12 * std::abs(direct) + 64 * 2.2e-16 * std::abs(an.rz))
                        ok = false;
                }
                if (ok) {
                    an.series = true;
                    break;
                }
                an.eta *= 0.5;
            }
        }
    }

    const detail::Anchor* hi_anchor(std::size_t interval) const
    {
        const auto& iv = land_.admissible().at(interval);
        if (!iv.hi_anchor || !anchors_[*iv.hi_anchor].series)
            return nullptr;
        return &anchors_[*iv.hi_anchor];
    }

    const detail::Anchor* lo_anchor(std::size_t interval) const
    {
        const auto& iv = land_.admissible().at(interval);
        if (!iv.lo_anchor || !anchors_[*iv.lo_anchor].series)
            return nullptr;
        return &anchors_[*iv.lo_anchor];
    }

    std::vector<detail::Piece> layout(const HeightState& st) const
    {
        using detail::Piece;
        using detail::PieceKind;
        const auto& pot = potential();
        const double u0 = st.u0;
        std::vector<Piece> out;

        // regions reserved around local minima below the top
        struct Reserved {
            double lo, hi;
            const detail::Anchor* an;
        };
        std::vector<Reserved> res;
        std::vector<double> breaks; // stationary points without a usable window
        for (const auto& an : anchors_) {
            if (an.z == 0 || !(an.z < u0))
                continue;
            if (st.coord == Coord::Plateau && &an == hi_anchor(st.interval))
                continue;
            if (an.series && an.z + an.eta < u0)
                res.push_back({an.z - an.eta, an.z + an.eta, &an});
            else
                breaks.push_back(an.z);
        }

        double top_lo;
        if (st.coord == Coord::Plateau) {
            const auto* h = hi_anchor(st.interval);
            Piece pc;
            pc.kind = PieceKind::Plateau;
            pc.anchor = h;
            pc.log_scale = st.log_delta;
            pc.p0 = 0;
            pc.p1 = detail::inv_cosh_scaled(h->eta, st.log_delta);
            if (pc.p1 > 60) {
                pc.bulk0 = 0;
                pc.bulk1 = pc.p1 - 40;
            }
            out.push_back(pc);
            top_lo = h->z - h->eta;
        } else {
            double floor_top = 0;
            for (const auto& r : res)
                floor_top = std::max(floor_top, r.hi);
            for (double b : breaks)
                floor_top = std::max(floor_top, b);
            const double w = std::min(0.5 * u0, 0.5 * (u0 - floor_top));
            Piece pc;
            pc.kind = PieceKind::Top;
            pc.sb = u0;
            pc.sa = u0 - w;
            pc.p0 = 0;
            pc.p1 = 1;
            out.push_back(pc);
            top_lo = u0 - w;
        }

        double a = std::min(0.5 * u0, top_lo);
        for (const auto& r : res)
            a = std::min(a, r.lo);
        for (double b : breaks)
            a = std::min(a, 0.5 * b);

        // walk down from top_lo to a through windows and plain stretches
        std::sort(res.begin(), res.end(), [](const Reserved& x, const Reserved& y) { return x.hi > y.hi; });
        std::vector<double> cuts = breaks;
        std::sort(cuts.begin(), cuts.end(), std::greater<>());
        auto plain = [&](double hi, double lo) {
            // split at stationary points that have no window
            double cur = hi;
            for (double c : cuts)
                if (c < cur && c > lo) {
                    Piece pc;
                    pc.kind = PieceKind::Plain;
                    pc.sb = cur;
                    pc.sa = c;
                    pc.p0 = 0;
                    pc.p1 = cur - c;
                    out.push_back(pc);
                    cur = c;
                }
            if (cur > lo) {
                Piece pc;
                pc.kind = PieceKind::Plain;
                pc.sb = cur;
                pc.sa = lo;
                pc.p0 = 0;
                pc.p1 = cur - lo;
                out.push_back(pc);
            }
        };
        double cur = top_lo;
        for (const auto& r : res) {
            plain(cur, r.hi);
            Piece pc;
            pc.kind = PieceKind::Window;
            pc.anchor = r.an;
            const bool touch = st.coord == Coord::Touch && r.an == lo_anchor(st.interval);
            pc.eps = touch ? std::exp(st.log_eps) : r.an->rz - st.lambda;
            if (!touch && !(pc.eps > 0))
                throw NotAdmissible("top level does not lie below an earlier local minimum");
            const double log_eps = touch ? st.log_eps : std::log(pc.eps);
            pc.log_scale = 0.5 * (log_eps - std::log(r.an->c2));
            const double T = detail::inv_sinh_scaled(r.an->eta, pc.log_scale);
            pc.p0 = -T;
            pc.p1 = T;
            if (T > 60) {
                pc.bulk0 = -(T - 40);
                pc.bulk1 = T - 40;
            }
            out.push_back(pc);
            cur = r.lo;
        }
        plain(cur, a);

        Piece low;
        low.kind = PieceKind::Lower;
        low.sb = a;
        low.k = std::min(40.0, 2 / (3 - pot.m()));
        low.p0 = 0;
        low.p1 = 1;
        out.push_back(low);
        return out;
    }

    double s_at(const detail::Piece& pc, const HeightState& st, double p) const
    {
        using detail::PieceKind;
        switch (pc.kind) {
        case PieceKind::Top: return pc.sb - (pc.sb - pc.sa) * p * p;
        case PieceKind::Plain: return pc.sb - p;
        case PieceKind::Lower: return p >= 1 ? 0.0 : pc.sb * std::pow(1 - p, pc.k);
        case PieceKind::Window: return pc.anchor->z - detail::exp_sinh(pc.log_scale, p);
        case PieceKind::Plateau: return pc.anchor->z - std::exp(st.log_delta + log_cosh(p));
        }
        return 0;
    }

    double param_of(const detail::Piece& pc, const HeightState& st, double u) const
    {
        using detail::PieceKind;
        switch (pc.kind) {
        case PieceKind::Top: return std::sqrt((pc.sb - u) / (pc.sb - pc.sa));
        case PieceKind::Plain: return pc.sb - u;
        case PieceKind::Lower: return u <= 0 ? 1.0 : 1 - std::pow(u / pc.sb, 1 / pc.k);
        case PieceKind::Window: return detail::inv_sinh_scaled(pc.anchor->z - u, pc.log_scale);
        case PieceKind::Plateau: {
            const double sig = pc.anchor->z - u;
            return sig <= 0 ? 0.0 : detail::inv_cosh_scaled(sig, st.log_delta);
        }
        }
        return 0;
    }

    // weights from a height and its gap R(s) - lambda
    static detail::Sample from_gap(double s, double gap, double jac)
    {
        const double rs = std::sqrt(s), rg = std::sqrt(gap);
        return {s, {M_SQRT2 * rs / rg * jac, M_SQRT1_2 / (rs * rg) * jac, 2 * M_SQRT2 * rs * rg * jac},
                -M_SQRT2 * rs * rg};
    }

    detail::Sample sample(const detail::Piece& pc, const HeightState& st, double p) const
    {
        using detail::PieceKind;
        const auto& pot = potential();
        switch (pc.kind) {
        case PieceKind::Top: {
            const double w = pc.sb - pc.sa, drop = w * p * p;
            const double s = pc.sb - drop;
            double gap;
            if (drop < 1e-8 * pc.sb) {
                const auto v = pot.eval(pc.sb);
                const double d2r = (v.d2q - 2 * v.dr) / pc.sb;
                gap = -v.dr * drop + 0.5 * d2r * drop * drop;
            } else {
                gap = pot.gap_offset(pc.sb, -drop);
            }
            if (st.coord == Coord::Touch) {
                const double lin = -pot.eval(pc.sb).dr * drop;
                gap += pot.r(pc.sb) - st.lambda;
                if (!(gap > 0))
                    gap = lin; // u0 sits on the level to rounding
            }
            return from_gap(s, gap, 2 * w * p);
        }
        case PieceKind::Plain: {
            const double s = pc.sb - p;
            return from_gap(s, gap_direct(st, s), 1.0);
        }
        case PieceKind::Lower: {
            // quadrature nodes next to the contact point can round onto p = 1
            const double lv = std::log1p(-std::min(p, std::nextafter(1.0, 0.0)));
            const double ls = std::log(pc.sb) + pc.k * lv;
            const double ljac = std::log(pc.sb * pc.k) + (pc.k - 1) * lv;
            if (std::log(pot.A()) - pot.m() * ls < 600) {
                const double s = std::exp(ls);
                return from_gap(s, gap_direct(st, s), std::exp(ljac));
            }
            // R ~ A s^-m this close to the contact line, and R itself would overflow
            const double m = pot.m(), lA = std::log(pot.A());
            const double lg = lA - m * ls;
            const double s = std::exp(ls);
            return {s,
                    {std::exp(0.5 * M_LN2 + 0.5 * (ls - lg) + ljac), std::exp(-0.5 * M_LN2 - 0.5 * (ls + lg) + ljac),
                     std::exp(1.5 * M_LN2 + 0.5 * (ls + lg) + ljac)},
                    -std::exp(0.5 * (M_LN2 + ls + lg))};
        }
        case PieceKind::Window: {
            const auto& an = *pc.anchor;
            const double sigma = detail::exp_sinh(pc.log_scale, p);
            const double s = an.z - sigma;
            const double ph = an.phi(sigma);
            const double lc = log_cosh(p);
            const double sech2 = std::exp(-2 * lc);
            const double th = std::tanh(p);
            const double den = an.c2 * sech2 + th * th * ph;
            const double rs = std::sqrt(s);
            const double rgap = std::sqrt(pc.eps + sigma * sigma * ph);
            const double bc = std::exp(pc.log_scale + lc); // beta cosh
            return {s, {M_SQRT2 * rs / std::sqrt(den), M_SQRT1_2 / std::sqrt(s * den), 2 * M_SQRT2 * rs * rgap * bc},
                    -M_SQRT2 * rs * rgap};
        }
        case PieceKind::Plateau: {
            const auto& an = *pc.anchor;
            const double sigma = std::exp(st.log_delta + log_cosh(p));
            const double delta = std::exp(st.log_delta);
            const double s = an.z - sigma;
            const double rt = an.ratio(sigma, delta);
            const double ds = p > 0 ? std::exp(st.log_delta + log_sinh(p)) : 0.0; // delta sinh
            const double rs = std::sqrt(s);
            return {s, {M_SQRT2 * rs / std::sqrt(rt), M_SQRT1_2 / std::sqrt(s * rt), 2 * M_SQRT2 * rs * std::sqrt(rt) * ds * ds},
                    -M_SQRT2 * rs * std::sqrt(rt) * ds};
        }
        }
        return {};
    }

    double gap_direct(const HeightState& st, double s) const
    {
        if (st.coord == Coord::Height)
            return potential().gap(st.u0, s);
        return potential().r(s) - st.lambda;
    }

    // closed form over a sub-range [ta, tb] of the bulk, where s = z and the
    // curvature ratio is c2 to double precision
    std::array<double, 3> bulk_integral(const detail::Piece& pc, const HeightState& st, double ta, double tb) const
    {
        const auto& an = *pc.anchor;
        const double len = tb - ta;
        std::array<double, 3> v{len * std::sqrt(2 * an.z / an.c2), len / std::sqrt(2 * an.z * an.c2), 0.0};
        const double pref = 2 * M_SQRT2 * std::sqrt(an.z * an.c2);
        if (pc.kind == detail::PieceKind::Window) {
            // beta^2 * int cosh^2 = beta^2 (t/2 + sinh(2t)/4)
            const double l2 = 2 * pc.log_scale;
            v[2] = pref * (std::exp(l2) * 0.5 * len + 0.25 * (detail::exp_sinh(l2, 2 * tb) - detail::exp_sinh(l2, 2 * ta)));
        } else {
            const double l2 = 2 * st.log_delta;
            v[2] = pref * (0.25 * (detail::exp_sinh(l2, 2 * tb) - detail::exp_sinh(l2, 2 * ta)) - std::exp(l2) * 0.5 * len);
        }
        return v;
    }

    std::array<double, 3> piece_integral(const detail::Piece& pc, const HeightState& st, double pa, double pb) const
    {
        std::array<double, 3> out{};
        if (pa == pb)
            return out;
        auto f = [&](double p) { return sample(pc, st, p).w; };
        QuadOptions qo;
        qo.rel_tol = opt_.quad_rel_tol;
        auto add = [&](const std::array<double, 3>& v) {
            for (int k = 0; k < 3; ++k)
                out[k] += v[k];
        };
        if (pc.bulk1 > pc.bulk0) {
            const double lo = std::max(pa, pc.bulk0), hi = std::min(pb, pc.bulk1);
            if (hi > lo) {
                add(bulk_integral(pc, st, lo, hi));
                if (pa < lo)
                    add(integrate_n<3>(f, pa, lo, qo));
                if (hi < pb)
                    add(integrate_n<3>(f, hi, pb, qo));
                return out;
            }
        }
        return integrate_n<3>(f, pa, pb, qo);
    }

    void fit_micro(const detail::Piece& low, const HeightState& st, Profile& pr) const
    {
        // u = C d^alpha on heights 1e-8 .. 1e-7 of the top, d measured from the contact point
        std::vector<double> lu, ld;
        for (int j = 0; j <= 10; ++j) {
            const double u = st.u0 * std::pow(10.0, -8 + 0.1 * j);
            if (!(u < low.sb))
                continue;
            const double p = param_of(low, st, u);
            const double d = piece_integral(low, st, p, 1.0)[1];
            lu.push_back(std::log(u));
            ld.push_back(std::log(d));
        }
        const std::size_t n = lu.size();
        if (n < 3)
            return;
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < n; ++i) {
            mx += ld[i];
            my += lu[i];
        }
        mx /= double(n);
        my /= double(n);
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sxy += (ld[i] - mx) * (lu[i] - my);
            sxx += (ld[i] - mx) * (ld[i] - mx);
        }
        pr.micro_exponent = sxy / sxx;
        const double alpha = 2 / (potential().m() + 1);
        double c = 0;
        for (std::size_t i = 0; i < n; ++i)
            c += lu[i] - alpha * ld[i];
        pr.micro_prefactor = std::exp(c / double(n));
    }

    Landscape land_;
    SolverOptions opt_;
    std::vector<detail::Anchor> anchors_;
};

inline double mass(const PotentialSpec& spec, double u0) { return HeightSolver(spec).mass(u0); }

inline double energy(const PotentialSpec& spec, double u0) { return HeightSolver(spec).energy(u0); }

inline Profile solve_profile(const PotentialSpec& spec, double u0, std::size_t n_grid = 512)
{
    const HeightSolver hs(spec);
    return hs.profile(hs.at_height(u0), n_grid);
}

// max |u'^2/2 - Q(u) + lambda u| / max(1, |Q(u0)|) over nodes with u > 0 and
// Q(u) below 1e6 times the top scale (beyond that the terms exceed 1e6 and
// their double rounding alone is above the tolerance)
inline double first_integral_residual(const Profile& pr, const Potential& pot)
{
    const double scale = std::max(1.0, std::abs(pot.eval(pr.u0).q));
    double worst = 0;
    for (std::size_t i = 0; i < pr.us.size(); ++i) {
        const double u = pr.us[i];
        if (!(u > 0))
            continue;
        const double q = pot.eval(u).q;
        if (std::abs(q) > 1e6 * scale)
            continue;
        worst = std::max(worst, std::abs(0.5 * pr.uprimes[i] * pr.uprimes[i] - q + pr.lambda * u));
    }
    return worst / scale;
}

} // namespace capmin
