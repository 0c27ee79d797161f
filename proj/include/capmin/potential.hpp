#pragma once

#include "errors.hpp"
#include "extended.hpp"
#include "numerics.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace capmin {

enum class Family { ModelA, ModelB, ModelAGravity, ModelBGravity, Custom };

inline std::string to_string(Family f)
{
    switch (f) {
    case Family::ModelA: return "model_a";
    case Family::ModelB: return "model_b";
    case Family::ModelAGravity: return "model_a_gravity";
    case Family::ModelBGravity: return "model_b_gravity";
    case Family::Custom: return "custom";
    }
    return "unknown";
}

inline Family family_from_string(const std::string& s)
{
    for (Family f : {Family::ModelA, Family::ModelB, Family::ModelAGravity, Family::ModelBGravity, Family::Custom})
        if (to_string(f) == s)
            return f;
    throw ParamError("unknown potential family '" + s + "'");
}

// User supplied potential. Q and Q' are required; Q'' falls back to a central
// difference of Q'. A and m of the owning spec declare the leading behaviour
// Q ~ A s^(1-m) near zero, S the limit Q -> -S at infinity.
struct CustomPotential {
    std::function<double(double)> q;
    std::function<double(double)> dq;
    std::function<double(double)> d2q;
    bool unbounded = false; // Q/s -> +inf at infinity instead of 0
    std::optional<double> transition_p;
    std::optional<double> transition_k;
};

struct PotentialSpec {
    Family family = Family::ModelA;
    double A = 1.0;
    double B = 0.0;
    double S = 0.0;
    double D = 0.0;
    double m = 2.5;
    double n = 2.0;
    std::shared_ptr<const CustomPotential> custom;
};

struct PotentialValues {
    double q;   // Q(s)
    double dq;  // Q'(s)
    double d2q; // Q''(s)
    double r;   // R = Q/s
    double dr;  // R'
    double g;   // Q - sQ' = -s^2 R'
};

class Potential;
Potential validate(const PotentialSpec& spec);

class Potential {
public:
    const PotentialSpec& spec() const { return spec_; }
    Family family() const { return spec_.family; }
    double A() const { return spec_.A; }
    double m() const { return spec_.m; }

    bool gravity() const
    {
        return spec_.family == Family::ModelAGravity || spec_.family == Family::ModelBGravity
            || (spec_.family == Family::Custom && spec_.custom->unbounded);
    }

    // Limit of Q at infinity (+inf when gravity dominates).
    Extended spreading_limit() const
    {
        if (gravity())
            return Extended::infinity();
        return Extended(-spec_.S);
    }

    // Q extended by zero to the whole line.
    double q_total(double s) const { return s <= 0 ? 0.0 : eval(s).q; }

    PotentialValues eval(double s) const
    {
        check_domain(s);
        PotentialValues v{};
        const auto& p = spec_;
        switch (p.family) {
        case Family::ModelA:
        case Family::ModelAGravity: {
            const double a = p.A * std::pow(s, 1 - p.m);
            const double b = p.B * std::pow(s, 1 - p.n);
            v.q = a - b - p.S + 0.5 * p.D * s * s;
            v.dq = (-(p.m - 1) * a + (p.n - 1) * b) / s + p.D * s;
            v.d2q = (p.m * (p.m - 1) * a - p.n * (p.n - 1) * b) / (s * s) + p.D;
            v.g = p.m * a - p.n * b - p.S - 0.5 * p.D * s * s;
            break;
        }
        case Family::ModelB:
        case Family::ModelBGravity: {
            const auto c = core_b(s);
            const double h = (1 - p.m) - (p.n - p.m) * c.w;
            v.q = c.P - p.S + 0.5 * p.D * s * s;
            v.dq = c.P / s * h + p.D * s;
            v.d2q = c.P / (s * s) * (-h * (p.m + (p.n - p.m) * c.w) - (p.n - p.m) * (p.n - p.m) * c.w * (1 - c.w))
                + p.D;
            v.g = c.P * (p.m + (p.n - p.m) * c.w) - p.S - 0.5 * p.D * s * s;
            break;
        }
        case Family::Custom: {
            const auto& cp = *p.custom;
            v.q = cp.q(s);
            v.dq = cp.dq(s);
            if (cp.d2q) {
                v.d2q = cp.d2q(s);
            } else {
                const double h = 1e-6 * s;
                v.d2q = (cp.dq(s + h) - cp.dq(s - h)) / (2 * h);
            }
            v.g = v.q - s * v.dq;
            break;
        }
        }
        v.r = v.q / s;
        v.dr = -v.g / (s * s);
        return v;
    }

    double r(double s) const { return eval(s).r; }
    double g(double s) const { return eval(s).g; }

    // R(s) - R(u0), accurate when s is close to u0.
    double gap(double u0, double s) const
    {
        check_domain(s);
        if (std::abs(s - u0) > 0.25 * u0)
            return r(s) - r(u0);
        return gap_offset(u0, s - u0);
    }

    // R(u0 + d) - R(u0) with the offset d given exactly
    double gap_offset(double u0, double d) const
    {
        const double s = u0 + d;
        check_domain(u0);
        check_domain(s);
        const auto& p = spec_;
        const double L = std::log1p(d / u0);
        if (std::abs(L) > 0.5)
            return r(s) - r(u0);
        double out = -p.S * std::expm1(-L) / u0 + 0.5 * p.D * d;
        switch (p.family) {
        case Family::ModelA:
        case Family::ModelAGravity:
            out += p.A * std::pow(u0, -p.m) * std::expm1(-p.m * L);
            if (p.B != 0)
                out -= p.B * std::pow(u0, -p.n) * std::expm1(-p.n * L);
            return out;
        case Family::ModelB:
        case Family::ModelBGravity: {
            const auto c = core_b(u0);
            const double num = (1 - c.w) * std::expm1(p.m * L) + c.w * std::expm1(p.n * L);
            const double den = (1 - c.w) * std::exp(p.m * L) + c.w * std::exp(p.n * L);
            return out - c.P / u0 * num / den;
        }
        case Family::Custom:
            return r(s) - r(u0);
        }
        return out;
    }

    bool has_series() const { return spec_.family != Family::Custom; }

    // Coefficients a_0..a_K of R(z(1-x)) - R(z) as a power series in x (a_0 = 0).
    std::vector<double> series(double z, int K) const
    {
        if (!has_series())
            throw NotApplicable("no series expansion for custom potentials");
        const auto& p = spec_;
        std::vector<double> a(K + 1, 0.0);
        // (1-x)^(-e) = sum rising(e,k)/k! x^k
        auto add_inverse_power = [&](double coef, double e) {
            double c = coef;
            for (int k = 1; k <= K; ++k) {
                c *= (e + k - 1) / k;
                a[k] += c;
            }
        };
        add_inverse_power(-p.S / z, 1.0);
        a[1] -= 0.5 * p.D * z;
        if (p.family == Family::ModelA || p.family == Family::ModelAGravity) {
            add_inverse_power(p.A * std::pow(z, -p.m), p.m);
            if (p.B != 0)
                add_inverse_power(-p.B * std::pow(z, -p.n), p.n);
        } else {
            // A/(s^m + c s^n) normalised so the denominator series starts at 1
            const auto cb = core_b(z);
            std::vector<double> den(K + 1), inv(K + 1);
            double bm = 1, bn = 1;
            for (int k = 0; k <= K; ++k) {
                den[k] = (1 - cb.w) * bm + cb.w * bn;
                bm *= -(p.m - k) / (k + 1);
                bn *= -(p.n - k) / (k + 1);
            }
            inv[0] = 1.0;
            for (int k = 1; k <= K; ++k) {
                double acc = 0;
                for (int j = 1; j <= k; ++j)
                    acc += den[j] * inv[k - j];
                inv[k] = -acc;
            }
            for (int k = 1; k <= K; ++k)
                a[k] += cb.P / z * inv[k];
        }
        return a;
    }

private:
    friend Potential validate(const PotentialSpec& spec);
    explicit Potential(PotentialSpec s) : spec_(std::move(s)) {}

    struct CoreB {
        double P; // A s^(1-m)/(1+t)
        double w; // t/(1+t), t = (A/|B|) s^(n-m)
    };

    CoreB core_b(double s) const
    {
        const auto& p = spec_;
        const double ls = std::log(s);
        const double lt = std::log(p.A / std::abs(p.B)) + (p.n - p.m) * ls;
        const double w = 1.0 / (1.0 + std::exp(-lt));
        return {std::exp(std::log(p.A) + (1 - p.m) * ls - softplus(lt)), w};
    }

    static void check_domain(double s)
    {
        if (!(s > 0))
            throw DomainError("potential evaluated at non-positive height");
        if (s < 1e-300 || s > 1e300) {
            std::ostringstream os;
            os << "height " << s << " outside representable range";
            throw DomainError(os.str());
        }
    }

    PotentialSpec spec_;
};

inline Potential validate(const PotentialSpec& spec)
{
    const auto& p = spec;
    for (double v : {p.A, p.B, p.S, p.D, p.m, p.n})
        if (!std::isfinite(v))
            throw ParamError("non-finite potential parameter");
    if (p.m >= 3)
        throw NoMinimizerError("m >= 3: no energy minimizer exists");
    if (!(p.m > 1))
        throw ParamError("m must exceed 1");
    if (!(p.A > 0))
        throw ParamError("A must be positive");
    if (p.D < 0)
        throw ParamError("D must be nonnegative");
    switch (p.family) {
    case Family::ModelA:
    case Family::ModelAGravity:
        if (!(1 < p.n && p.n < p.m))
            throw ParamError("model A requires 1 < n < m");
        break;
    case Family::ModelB:
    case Family::ModelBGravity: {
        if (!(p.B < 0))
            throw ParamError("model B requires B < 0");
        if (!(p.m < p.n))
            throw ParamError("model B requires m < n");
        const double conv = 1 + 2 * p.m + p.m * p.m + 2 * p.n - 6 * p.m * p.n + p.n * p.n;
        if (conv > 0)
            throw ParamError("model B exponents violate the convexity condition");
        break;
    }
    case Family::Custom:
        if (!p.custom || !p.custom->q || !p.custom->dq)
            throw ParamError("custom potential needs Q and Q' callbacks");
        break;
    }
    const bool grav = p.family == Family::ModelAGravity || p.family == Family::ModelBGravity;
    if (grav && !(p.D > 0))
        throw ParamError("gravity families need D > 0");
    if (!grav && p.D != 0)
        throw ParamError("D must be 0 outside the gravity families");
    return Potential(spec);
}

} // namespace capmin
