#pragma once

#include "asymptotics.hpp"
#include "errors.hpp"
#include "extended.hpp"
#include "landscape.hpp"
#include "minimizer.hpp"
#include "potential.hpp"
#include "profile.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace capmin {

using json = nlohmann::ordered_json;

// Shortest round-trip decimal form; infinities as "inf" / "-inf".
inline std::string format_number(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline json to_json(const Extended& e) { return e.is_finite() ? json(e.value()) : json("inf"); }

inline json to_json_number(double v) { return std::isfinite(v) ? json(v) : json(format_number(v)); }

template <class T>
json to_json_opt(const std::optional<T>& v)
{
    return v ? to_json_number(*v) : json(nullptr);
}

inline PotentialSpec spec_from_json(const json& j)
{
    if (!j.is_object())
        throw ParamError("potential spec must be a JSON object");
    PotentialSpec s;
    if (!j.contains("family"))
        throw ParamError("potential spec needs a family");
    s.family = family_from_string(j.at("family").get<std::string>());
    if (s.family == Family::Custom)
        throw ParamError("custom potentials cannot be read from JSON");
    auto num = [&](const char* key, double& dst) {
        if (!j.contains(key))
            return;
        if (!j.at(key).is_number())
            throw ParamError(std::string("spec field '") + key + "' must be a number");
        dst = j.at(key).get<double>();
    };
    num("A", s.A);
    num("B", s.B);
    num("S", s.S);
    num("D", s.D);
    num("m", s.m);
    num("n", s.n);
    return s;
}

inline json to_json(const PotentialSpec& s)
{
    return json{{"family", to_string(s.family)}, {"A", s.A}, {"B", s.B}, {"S", s.S}, {"D", s.D}, {"m", s.m}, {"n", s.n}};
}

inline json landscape_report(const Landscape& L)
{
    json out;
    out["spec"] = to_json(L.potential().spec());
    const auto c = L.classify();
    out["regime"] = to_string(c.regime);
    out["uniqueness"] = to_string(c.uniqueness);
    out["e_star"] = to_json(L.e_star());
    out["e_star_tie"] = L.e_star_tie();
    out["z0"] = to_json(L.z0());
    out["e_min"] = to_json_opt(L.e_min());
    out["e_max"] = to_json_opt(L.e_max());
    out["s1"] = to_json(L.s1());
    out["r_infinity"] = to_json(L.r_infinity());
    json st = json::array();
    for (const auto& p : L.stationary())
        st.push_back({{"s", p.s}, {"kind", p.kind == StationaryKind::LocalMin ? "local_min" : "local_max"}, {"R", p.r}});
    out["stationary_points"] = st;
    json iv = json::array();
    for (const auto& I : L.admissible())
        iv.push_back({{"lo", I.lo}, {"hi", to_json(I.hi)}});
    out["admissible"] = iv;
    json th = nullptr;
    if (const auto t = L.thresholds_if_defined())
        th = {{"c1", to_json_opt(t->c1)}, {"c2", to_json_opt(t->c2)}, {"c3", to_json_opt(t->c3)}};
    out["thresholds"] = th;
    return out;
}

inline void write_profile_csv(std::ostream& os, const Profile& pr)
{
    os << "x,u,uprime\n";
    for (std::size_t i = 0; i < pr.xs.size(); ++i)
        os << format_number(pr.xs[i]) << ',' << format_number(pr.us[i]) << ',' << format_number(pr.uprimes[i]) << '\n';
}

inline json to_json(const Profile& pr, bool arrays = true)
{
    json out{{"u0", pr.u0},
             {"lambda", pr.lambda},
             {"rbar", pr.rbar},
             {"mass", pr.mass},
             {"energy", pr.energy},
             {"micro_exponent", to_json_number(pr.micro_exponent)},
             {"micro_prefactor", to_json_number(pr.micro_prefactor)}};
    if (arrays) {
        json xs = json::array(), us = json::array(), ups = json::array();
        for (std::size_t i = 0; i < pr.xs.size(); ++i) {
            xs.push_back(pr.xs[i]);
            us.push_back(pr.us[i]);
            ups.push_back(to_json_number(pr.uprimes[i]));
        }
        out["x"] = xs;
        out["u"] = us;
        out["uprime"] = ups;
    }
    return out;
}

inline json to_json(const BranchSolution& b)
{
    return json{{"u0", b.u0},         {"mass_err", b.mass_err}, {"energy", b.energy}, {"rbar", b.rbar},
                {"interval_id", b.branch.interval_id}, {"branch_id", b.branch.branch_id}};
}

inline json to_json(const MinimizerSolution& s)
{
    json c = json::array();
    for (const auto& b : s.candidates)
        c.push_back(to_json(b));
    return json{{"M", s.M},
                {"u0", s.u0},
                {"energy", s.energy},
                {"mass_err", s.mass_err},
                {"candidates", c},
                {"winners", s.winners},
                {"profile", to_json(s.profile, false)}};
}

inline json to_json(const AsymptoticPrediction& p)
{
    json out{{"regime", to_string(p.regime)}, {"u0_pred", p.u0_pred}, {"r_pred", p.r_pred}};
    out["theta_mac"] = to_json_opt(p.theta_mac);
    out["tan_theta_mac"] = p.theta_mac ? json(std::tan(*p.theta_mac)) : json(nullptr);
    out["thickness"] = to_json_opt(p.thickness);
    out["p"] = to_json_opt(p.p);
    out["K"] = to_json_opt(p.K);
    out["fp0"] = to_json_opt(p.fp0);
    out["cp"] = to_json_opt(p.cp);
    out["e_star"] = to_json_opt(p.e_star);
    return out;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows)
{
    os << "u0,mu,energy,segment\n";
    for (const auto& r : rows)
        os << format_number(r.u0) << ',' << format_number(r.mu) << ',' << format_number(r.energy) << ',' << r.segment
           << '\n';
}

inline void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows)
{
    os << "M,u0,u0_pred,rbar,rbar_pred,shape_err\n";
    for (const auto& r : rows)
        os << format_number(r.M) << ',' << format_number(r.u0) << ',' << format_number(r.u0_pred) << ','
           << format_number(r.rbar) << ',' << format_number(r.rbar_pred) << ',' << format_number(r.shape_err) << '\n';
}

inline json to_json(const std::optional<EnergyCrossing>& c)
{
    if (!c)
        return json{{"crossing", nullptr}};
    const auto& x = *c;
    return json{{"crossing",
                 {{"M", x.M},
                  {"energy_a", x.energy_a},
                  {"energy_b", x.energy_b},
                  {"u0_a", x.u0_a},
                  {"u0_b", x.u0_b},
                  {"branch_a", {{"interval_id", x.branch_a.interval_id}, {"branch_id", x.branch_a.branch_id}}},
                  {"branch_b", {{"interval_id", x.branch_b.interval_id}, {"branch_id", x.branch_b.branch_id}}}}}};
}

} // namespace capmin
