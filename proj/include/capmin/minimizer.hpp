#pragma once

#include "errors.hpp"
#include "numerics.hpp"
#include "profile.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

namespace capmin {

struct SweepRow {
    double u0;
    double mu;
    double energy;
    int segment; // monotone piece of u0 -> mu, numbered across the whole table
};

// Identifies one monotone stretch of the mass map.
struct BranchLabel {
    std::size_t interval_id = 0;
    int branch_id = 0;
    friend bool operator==(const BranchLabel&, const BranchLabel&) = default;
};

struct BranchSolution {
    HeightState state;
    BranchLabel branch;
    double u0 = 0;
    double mu = 0;
    double mass_err = 0;
    double energy = 0;
    double rbar = 0;
};

struct MinimizerSolution {
    double M = 0;
    double u0 = 0;
    double energy = 0;
    double mass_err = 0;
    BranchLabel branch;
    std::vector<BranchSolution> candidates; // sorted by energy
    std::vector<std::size_t> winners;       // candidates within the energy tie tolerance
    Profile profile;
};

struct EnergyCrossing {
    double M = 0;
    double u0_a = 0, u0_b = 0;
    double energy_a = 0, energy_b = 0;
    BranchLabel branch_a, branch_b; // a wins below M, b above
};

struct MinimizerOptions {
    std::size_t height_samples = 96;
    std::size_t log_samples = 24; // plateau / touch coordinates
    double log_span = 60;
    double u_min = 1e-6;
    std::optional<double> u_max; // default max(1e3, 10 e*)
    double energy_tie_rel = 1e-9;
    std::size_t profile_nodes = 512;
};

// Sampled mass map over every admissible interval, used to bracket mass
// constraints. Samples are ordered by increasing u0 within each interval.
class BranchMap {
public:
    explicit BranchMap(const HeightSolver& hs, MinimizerOptions opt = {}) : hs_(&hs), opt_(opt)
    {
        const auto& L = hs.landscape();
        const double es = L.e_star().is_finite() ? L.e_star().value() : 0.0;
        u_max_ = opt_.u_max ? *opt_.u_max : std::max(1e3, 10 * es);
        for (std::size_t i = 0; i < L.admissible().size(); ++i)
            build(i);
        label();
    }

    const HeightSolver& solver() const { return *hs_; }

    // Every solution of mu(u0) = M, one per monotone stretch that reaches M.
    std::vector<BranchSolution> solve(double M, double mass_tol) const
    {
        if (!(M > 0))
            throw DomainError("mass must be positive");
        extend_for(M);
        std::vector<BranchSolution> out;
        for (std::size_t iv = 0; iv < series_.size(); ++iv) {
            const auto& sm = series_[iv];
            for (std::size_t i = 0; i + 1 < sm.size(); ++i) {
                const auto& a = sm[i];
                const auto& b = sm[i + 1];
                if (a.st.coord != b.st.coord && a.twin_next)
                    continue;
                const double fa = a.mu - M, fb = b.mu - M;
                if ((fa > 0) == (fb > 0) && fa != 0 && fb != 0)
                    continue;
                if (fb == 0 && i + 2 < sm.size())
                    continue; // picked up by the next pair
                out.push_back(root(iv, a, b, M, mass_tol, a.pair_segment));
            }
        }
        if (out.empty())
            throw NoBracket("no height reaches the requested mass in the sampled range");
        return out;
    }

    // Solution on one labelled branch, nullopt if that branch misses M.
    std::optional<BranchSolution> solve_on(const BranchLabel& br, double M, double mass_tol) const
    {
        extend_for(M);
        const auto& sm = series_.at(br.interval_id);
        for (std::size_t i = 0; i + 1 < sm.size(); ++i) {
            if (sm[i].pair_segment != br.branch_id)
                continue;
            const auto& a = sm[i];
            const auto& b = sm[i + 1];
            if (a.st.coord != b.st.coord && a.twin_next)
                continue;
            const double fa = a.mu - M, fb = b.mu - M;
            if ((fa > 0) == (fb > 0) && fa != 0 && fb != 0)
                continue;
            return root(br.interval_id, a, b, M, mass_tol, br.branch_id);
        }
        return std::nullopt;
    }

    std::vector<SweepRow> table() const
    {
        std::vector<SweepRow> rows;
        for (const auto& sm : series_)
            for (const auto& s : sm)
                rows.push_back({s.st.u0, s.mu, s.energy, s.segment});
        return rows;
    }

private:
    struct Sample {
        HeightState st;
        double mu = 0;
        double energy = 0;
        bool twin_next = false; // same point as the next sample, other coordinate
        int pair_segment = 0;   // segment of the pair (this, next)
        int segment = 0;
    };

    HeightState state(const HeightState& like, double param) const
    {
        switch (like.coord) {
        case Coord::Height: return hs_->at_height(param);
        case Coord::Plateau: return hs_->at_plateau(like.interval, param);
        case Coord::Touch: return hs_->at_touch(like.interval, param);
        }
        return like;
    }

    Sample make(const HeightState& st) const
    {
        const auto I = hs_->integrals(st);
        Sample s;
        s.st = st;
        s.mu = I.mass;
        s.energy = I.energy;
        return s;
    }

    std::vector<Sample> evaluate(const std::vector<HeightState>& states) const
    {
        return parallel_map(states.size(), [&](std::size_t i) { return make(states[i]); });
    }

    void build(std::size_t iv)
    {
        const auto& L = hs_->landscape();
        const auto& I = L.admissible()[iv];
        std::vector<HeightState> states;
        std::vector<bool> twin;

        double u_lo = I.lo > 0 ? I.lo : opt_.u_min;
        if (const auto t = hs_->touch_switch(iv)) {
            for (std::size_t k = opt_.log_samples; k-- > 0;) {
                states.push_back(hs_->at_touch(iv, *t + opt_.log_span * double(k) / double(opt_.log_samples - 1)));
                twin.push_back(false);
            }
            twin.back() = true;
            u_lo = states.back().u0;
        } else if (I.lo > 0) {
            u_lo = I.lo * (1 + 1e-6);
        }
        double u_hi;
        const auto p = hs_->plateau_switch(iv);
        if (p) {
            u_hi = hs_->at_plateau(iv, *p).u0;
        } else if (I.hi.is_finite()) {
            u_hi = I.hi.value() * (1 - 1e-6);
        } else {
            u_hi = std::max(u_max_, 4 * u_lo);
        }
        const auto hs = logspace(u_lo, u_hi, opt_.height_samples);
        for (std::size_t k = 0; k < hs.size(); ++k) {
            if (k == 0 && !twin.empty()) {
                twin.back() = true;
                states.push_back(states.back());
                states.back().coord = Coord::Height;
                states.back().param = states.back().u0;
                states.back().lambda = hs_->potential().r(states.back().u0);
                twin.push_back(false);
                continue;
            }
            auto st = hs_->at_height(hs[k]);
            st.coord = Coord::Height; // keep the sampled coordinate even next to a plateau
            st.param = hs[k];
            st.lambda = hs_->potential().r(hs[k]);
            states.push_back(st);
            twin.push_back(false);
        }
        if (p) {
            twin.back() = true;
            for (std::size_t k = 0; k < opt_.log_samples; ++k) {
                states.push_back(hs_->at_plateau(iv, *p + opt_.log_span * double(k) / double(opt_.log_samples - 1)));
                twin.push_back(false);
            }
        }
        auto samples = evaluate(states);
        for (std::size_t k = 0; k < samples.size(); ++k)
            samples[k].twin_next = twin[k];
        series_.push_back(std::move(samples));
        refine_extrema(iv);
    }

    // insert the location of each interior extremum of mu so that no pair of
    // roots can hide between two samples
    void refine_extrema(std::size_t iv)
    {
        auto& sm = series_[iv];
        for (std::size_t i = 1; i + 1 < sm.size(); ++i) {
            const double d0 = sm[i].mu - sm[i - 1].mu, d1 = sm[i + 1].mu - sm[i].mu;
            if ((d0 > 0) == (d1 > 0) || d0 == 0 || d1 == 0)
                continue;
            if (sm[i - 1].st.coord != sm[i].st.coord || sm[i].st.coord != sm[i + 1].st.coord)
                continue;
            const double sign = d0 > 0 ? -1.0 : 1.0; // minimise -mu at a maximum
            const auto& like = sm[i].st;
            auto f = [&](double q) { return sign * hs_->integrals(state(like, q)).mass; };
            double lo = sm[i - 1].st.param, hi = sm[i + 1].st.param;
            if (lo > hi)
                std::swap(lo, hi);
            const auto r = boost::math::tools::brent_find_minima(f, lo, hi, 40);
            if (r.first == sm[i].st.param)
                continue;
            Sample s = make(state(like, r.first));
            const bool before = (sm[i].st.param < r.first) != (sm[i - 1].st.param < sm[i].st.param);
            sm.insert(sm.begin() + std::ptrdiff_t(before ? i : i + 1), s);
            ++i;
        }
    }

    void label()
    {
        int seg = -1;
        for (auto& sm : series_) {
            ++seg;
            int dir = 0;
            for (std::size_t i = 0; i + 1 < sm.size(); ++i) {
                const double d = sm[i + 1].mu - sm[i].mu;
                const double scale = std::max(std::abs(sm[i].mu), std::abs(sm[i + 1].mu));
                const int nd = std::abs(d) <= 1e-12 * scale ? 0 : (d > 0 ? 1 : -1);
                if (nd != 0 && dir != 0 && nd != dir)
                    ++seg;
                if (nd != 0)
                    dir = nd;
                sm[i].pair_segment = seg;
                sm[i + 1].segment = seg;
                if (i == 0)
                    sm[i].segment = seg;
            }
            if (sm.size() == 1)
                sm[0].segment = seg;
        }
    }

    // Lengthen open ends whose mass grows toward the end until M is covered.
    void extend_for(double M) const
    {
        auto& self = const_cast<BranchMap&>(*this);
        bool changed = false;
        const auto& L = hs_->landscape();
        for (std::size_t iv = 0; iv < series_.size(); ++iv) {
            auto& sm = self.series_[iv];
            const auto& I = L.admissible()[iv];
            // right end
            for (int guard = 0; guard < 200; ++guard) {
                const auto& last = sm.back();
                const auto& prev = sm[sm.size() - 2];
                if (last.mu >= M || !(last.mu > prev.mu))
                    break;
                HeightState next;
                if (last.st.coord == Coord::Plateau) {
                    const double slope = (last.mu - prev.mu) / (last.st.param - prev.st.param);
                    const double step = std::max(opt_.log_span, 1.2 * (M - last.mu) / slope);
                    next = hs_->at_plateau(iv, last.st.param + step);
                } else if (I.hi.is_infinite()) {
                    if (guard >= 2)
                        break;
                    next = hs_->at_height(last.st.u0 * 10);
                    next.coord = Coord::Height;
                    next.param = next.u0;
                    next.lambda = hs_->potential().r(next.u0);
                } else {
                    break;
                }
                sm.push_back(make(next));
                changed = true;
            }
            // left end
            for (int guard = 0; guard < 200; ++guard) {
                const auto& first = sm.front();
                const auto& second = sm[1];
                if (first.mu >= M || !(first.mu > second.mu))
                    break;
                HeightState next;
                if (first.st.coord == Coord::Touch) {
                    const double slope = (first.mu - second.mu) / (first.st.param - second.st.param);
                    const double step = std::max(opt_.log_span, 1.2 * (M - first.mu) / slope);
                    next = hs_->at_touch(iv, first.st.param + step);
                } else {
                    break;
                }
                sm.insert(sm.begin(), make(next));
                changed = true;
            }
            // small masses below the first sampled height
            for (int guard = 0; guard < 2 && I.lo == 0; ++guard) {
                const auto& first = sm.front();
                if (first.mu <= M || first.st.coord != Coord::Height || !(first.mu < sm[1].mu))
                    break;
                auto st = hs_->at_height(first.st.u0 * 1e-2);
                sm.insert(sm.begin(), make(st));
                changed = true;
            }
        }
        if (changed)
            self.label();
    }

    BranchSolution root(std::size_t iv, const Sample& a, const Sample& b, double M, double mass_tol, int segment) const
    {
        const auto& like = a.st;
        auto f = [&](double q) { return hs_->integrals(state(like, q)).mass - M; };
        // tighter than requested so that energies of different branches compare at the same mass
        const double q = find_root(f, a.st.param, b.st.param, a.mu - M, b.mu - M, 1e-15, std::min(mass_tol, 1e-11 * M));
        const auto st = state(like, q);
        const auto I = hs_->integrals(st);
        if (!(std::abs(I.mass - M) <= mass_tol) && std::abs(I.mass - M) > 1e-12 * M)
            throw NoBracket("mass tolerance not reached on a bracketed branch");
        BranchSolution s;
        s.state = st;
        s.branch = {iv, segment};
        s.u0 = st.u0;
        s.mu = I.mass;
        s.mass_err = std::abs(I.mass - M);
        s.energy = I.energy;
        s.rbar = I.rbar;
        return s;
    }

    const HeightSolver* hs_;
    MinimizerOptions opt_;
    double u_max_ = 1e3;
    std::vector<std::vector<Sample>> series_;
};

inline std::vector<SweepRow> mass_sweep(const HeightSolver& hs, double u_lo, double u_hi, std::size_t n_points)
{
    if (!(u_lo > 0 && u_hi > u_lo) || n_points < 2)
        throw DomainError("sweep needs 0 < u_lo < u_hi and at least 2 points");
    const auto grid = logspace(u_lo, u_hi, n_points);
    struct Row {
        bool ok;
        std::size_t interval;
        SweepRow row;
    };
    const auto rows = parallel_map(grid.size(), [&](std::size_t i) {
        const auto iv = hs.landscape().interval_of(grid[i]);
        if (!iv)
            return Row{false, 0, {}};
        const auto I = hs.integrals(hs.at_height(grid[i]));
        return Row{true, *iv, {grid[i], I.mass, I.energy, 0}};
    });
    std::vector<SweepRow> out;
    int seg = -1, dir = 0;
    std::optional<std::size_t> cur;
    for (const auto& r : rows) {
        if (!r.ok) {
            cur.reset();
            continue;
        }
        if (!cur || *cur != r.interval) {
            ++seg;
            dir = 0;
            cur = r.interval;
        } else {
            const double d = r.row.mu - out.back().mu;
            const int nd = std::abs(d) <= 1e-12 * std::abs(r.row.mu) ? 0 : (d > 0 ? 1 : -1);
            if (nd != 0 && dir != 0 && nd != dir)
                ++seg;
            if (nd != 0)
                dir = nd;
        }
        out.push_back(r.row);
        out.back().segment = seg;
    }
    return out;
}

inline std::vector<BranchSolution> solve_mass(const BranchMap& map, double M, std::optional<double> mass_tol = {})
{
    return map.solve(M, mass_tol.value_or(1e-8 * M));
}

inline MinimizerSolution global_minimizer(const BranchMap& map, double M, std::optional<double> mass_tol = {},
                                          const MinimizerOptions& opt = {})
{
    const double tol = mass_tol.value_or(1e-8 * M);
    auto cands = map.solve(M, tol);
    std::stable_sort(cands.begin(), cands.end(),
                     [](const BranchSolution& a, const BranchSolution& b) { return a.energy < b.energy; });
    MinimizerSolution out;
    out.M = M;
    const auto& best = cands.front();
    out.u0 = best.u0;
    out.energy = best.energy;
    out.mass_err = std::abs(best.mu - M);
    out.branch = best.branch;
    for (std::size_t i = 0; i < cands.size(); ++i)
        if (cands[i].energy - best.energy <= opt.energy_tie_rel * std::abs(best.energy))
            out.winners.push_back(i);
    out.profile = map.solver().profile(best.state, opt.profile_nodes);
    out.candidates = std::move(cands);
    return out;
}

// Mass at which the lowest-energy branch changes, found by bisection-class
// root finding on the energy gap between the two branches involved.
inline std::optional<EnergyCrossing> find_energy_crossing(const BranchMap& map, double M_lo, double M_hi,
                                                          std::size_t samples = 33)
{
    if (!(M_lo > 0 && M_hi > M_lo))
        throw DomainError("crossing search needs 0 < M_lo < M_hi");
    const auto Ms = logspace(M_lo, M_hi, samples);
    std::vector<std::optional<BranchSolution>> best(Ms.size());
    for (std::size_t i = 0; i < Ms.size(); ++i) {
        try {
            auto c = map.solve(Ms[i], 1e-10 * Ms[i]);
            best[i] = *std::min_element(c.begin(), c.end(), [](const auto& a, const auto& b) { return a.energy < b.energy; });
        } catch (const NoBracket&) {
        }
    }
    for (std::size_t i = 0; i + 1 < Ms.size(); ++i) {
        if (!best[i] || !best[i + 1] || best[i]->branch == best[i + 1]->branch)
            continue;
        const auto A = best[i]->branch, B = best[i + 1]->branch;
        auto gap = [&](double M) -> std::optional<double> {
            const auto a = map.solve_on(A, M, 1e-12 * M);
            const auto b = map.solve_on(B, M, 1e-12 * M);
            if (!a || !b)
                return std::nullopt;
            return a->energy - b->energy;
        };
        const auto g0 = gap(Ms[i]), g1 = gap(Ms[i + 1]);
        if (!g0 || !g1 || (*g0 > 0) == (*g1 > 0))
            continue;
        double e_scale = std::abs(best[i]->energy);
        auto f = [&](double M) { return gap(M).value_or(0.0); };
        const double Mx = find_root(f, Ms[i], Ms[i + 1], *g0, *g1, 1e-15, 1e-9 * e_scale);
        const auto a = map.solve_on(A, Mx, 1e-12 * Mx);
        const auto b = map.solve_on(B, Mx, 1e-12 * Mx);
        EnergyCrossing out;
        out.M = Mx;
        out.u0_a = a->u0;
        out.u0_b = b->u0;
        out.energy_a = a->energy;
        out.energy_b = b->energy;
        out.branch_a = A;
        out.branch_b = B;
        return out;
    }
    return std::nullopt;
}

} // namespace capmin
