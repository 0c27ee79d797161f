// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <capmin/capmin.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace capmin;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

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

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

int failures = 0;
std::map<int, std::string> lines; // printed in criterion order at the end

void report(int id, const char* name, bool ok, const std::string& detail)
{
    lines[id] = std::string("[") + (ok ? "PASS" : "FAIL") + "] " + std::to_string(id) + " " + name + ": " + detail;
    if (!ok)
        ++failures;
}

// runs a criterion, turning an escaped exception into a failure line
void criterion(int id, const char* name, const std::function<std::pair<bool, std::string>()>& body)
{
    try {
        const auto [ok, detail] = body();
        report(id, name, ok, detail);
    } catch (const std::exception& e) {
        report(id, name, false, std::string("exception: ") + e.what());
    }
}

// profiles emitted while checking the other criteria, for the first-integral check
struct Emitted {
    Potential pot;
    Profile profile;
};
std::vector<Emitted> emitted;

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

int main()
{
    const auto work = std::filesystem::temp_directory_path() / ("capmin_acceptance_" + std::to_string(::getpid()));
    std::filesystem::create_directories(work);

    criterion(1, "fixed-mass-solves", [&] {
        bool ok = true;
        std::string detail;
        for (double S : {-2.5, -1.0, 0.0, 1.0}) {
            const auto out = work / ("solve_S" + std::to_string(int(S * 10)) + ".json");
            const std::string cmd = std::string(CAPMIN_CLI) + " solve --family model_a --A 1 --B 0 --m 2.5 --n 2 --S "
                + fmt("%g", S) + " --M 20 --mass-tol 1e-2 --out " + out.string();
            const auto t0 = Clock::now();
            const int status = std::system(cmd.c_str());
            const double secs = seconds_since(t0);
            const bool ran = WIFEXITED(status) && WEXITSTATUS(status) == 0;
            double mu = NAN;
            if (ran) {
                const auto j = json::parse(slurp(out));
                mu = j["profile"]["mass"].get<double>();
                // invariants of the emitted profile, recomputed through the library
                const HeightSolver hs(model_a(0, S));
                const double u0 = j["u0"].get<double>();
                const auto pr = hs.profile(hs.at_height(u0), 512);
                emitted.push_back({hs.potential(), pr});
                for (std::size_t i = 1; i < pr.xs.size(); ++i)
                    ok = ok && pr.xs[i] > pr.xs[i - 1] && pr.us[i] < pr.us[i - 1];
            }
            const bool case_ok = ran && std::abs(mu - 20) <= 1e-2 && secs <= 1.0;
            ok = ok && case_ok;
            detail += fmt("S=%g |mu-20|=%.1e %.3fs; ", S, std::abs(mu - 20), secs);
        }
        return std::make_pair(ok, detail);
    });

    criterion(2, "oracle-equivalence", [&] {
        const std::vector<std::pair<PotentialSpec, double>> cases = {
            {model_a(0, -2.5), 9.27},   {model_a(0, 1), 1.7},  {model_a(0, 0), 1.0},
            {model_a(1.8, -1), 0.5},    {model_a(1.8, -1), 5.0}, {model_b(-1), 1.0},
            {model_b(-1), 3.0},         {model_a(0, -1, 2.5, 2, 0.1), 2.0}, {model_b(-1, 0.1), 2.0}};
        const auto t0 = Clock::now();
        double worst = 0;
        std::set<Family> families;
        for (const auto& [spec, u0] : cases) {
            families.insert(spec.family);
            const HeightSolver hs(spec);
            const auto st = hs.at_height(u0);
            const auto ode = solve_profile_ode(hs.potential(), u0);
            const std::size_t stride = std::max<std::size_t>(1, ode.xs.size() / 200);
            for (std::size_t i = 1; i + 1 < ode.xs.size(); i += stride) {
                if (ode.xs[i] > 0.95 * ode.rbar)
                    break;
                const double uq = hs.height_at(st, ode.xs[i]);
                worst = std::max(worst, std::abs(uq - ode.us[i]) / u0);
            }
            emitted.push_back({hs.potential(), hs.profile(st, 512)});
        }
        const double secs = seconds_since(t0);
        return std::make_pair(worst <= 1e-6 && secs <= 10 && families.size() == 4,
                              fmt("%.0f pairs over %.0f families, sup rel diff %.2e, %.2fs", double(cases.size()),
                                  double(families.size()), worst, secs));
    });

    criterion(4, "micro-contact-law", [&] {
        bool ok = true;
        std::string detail;
        for (double m : {1.5, 2.0, 2.5}) {
            const auto spec = model_a(0, -1, m, 0.5 * (1 + m));
            const HeightSolver hs(spec);
            const auto pr = hs.profile(hs.at_height(2.0), 512);
            emitted.push_back({hs.potential(), pr});
            const double alpha = 2 / (m + 1), C = std::pow(spec.A * (m + 1) * (m + 1) / 2, 1 / (m + 1));
            const double de = std::abs(pr.micro_exponent - alpha), dc = std::abs(pr.micro_prefactor / C - 1);
            ok = ok && de <= 1e-2 && dc <= 1e-2;
            detail += fmt("m=%g exp err %.1e pref rel err %.1e; ", m, de, dc);
        }
        return std::make_pair(ok, detail);
    });

    criterion(5, "droplet-scaling", [&] {
        const HeightSolver hs(model_a(0, -2.5));
        const BranchMap map(hs);
        const auto rows = convergence_report(map, {1e2, 1e3, 1e4});
        double prev_u = INFINITY, prev_r = INFINITY;
        bool mono = true;
        std::string detail;
        for (const auto& r : rows) {
            const double ru = 32 * std::pow(r.u0, 4) / (9 * 2.5 * r.M * r.M);
            const double rr = 8 * 2.5 * std::pow(r.rbar, 4) / (9 * r.M * r.M);
            mono = mono && std::abs(ru - 1) < prev_u && std::abs(rr - 1) < prev_r;
            prev_u = std::abs(ru - 1);
            prev_r = std::abs(rr - 1);
            detail += fmt("M=%g u-ratio %.4f r-ratio %.4f; ", r.M, ru, rr);
        }
        const double tan_fit = *rows.back().tan_theta_fit;
        const double dt = std::abs(tan_fit / std::sqrt(5.0) - 1);
        detail += fmt("tan fit %.5f (rel err %.1e)", tan_fit, dt);
        const auto sol = global_minimizer(map, 1e4);
        emitted.push_back({hs.potential(), sol.profile});
        return std::make_pair(mono && prev_u <= 0.05 && prev_r <= 0.05 && dt <= 0.02, detail);
    });

    criterion(6, "pancake-scaling", [&] {
        const HeightSolver hs(model_a(0, 1));
        const auto& L = hs.landscape();
        const double es = L.e_star().value();
        const auto v = hs.potential().eval(es);
        const double res = std::abs(v.q - es * v.dq);
        const double closed = std::abs(es - std::pow(2.5, 2.0 / 3.0));
        const BranchMap map(hs);
        const auto sol = global_minimizer(map, 1e4);
        emitted.push_back({hs.potential(), sol.profile});
        const double du = std::abs(sol.u0 - es) / es;
        const double dr = std::abs(2 * es * sol.profile.rbar / 1e4 - 1);
        return std::make_pair(res <= 1e-10 && closed <= 1e-9 && du <= 1e-3 && dr <= 1e-2,
                              fmt("G(e*)=%.1e |e*-2.5^(2/3)|=%.1e |u0-e*|/e*=%.1e |2e* r/M-1|=%.1e", res, closed, du, dr));
    });

    criterion(7, "transition-profile", [&] {
        const HeightSolver hs(model_a(0, 0));
        const BranchMap map(hs);
        const auto rows = convergence_report(map, {1e2, 1e3, 1e4});
        const double p = 2.5, K = 1.0, f0 = f_p0(p), c = c_p(p);
        const auto& last = rows.back();
        const double ratio = std::pow(last.u0, p + 3) * 2 * c * c * f0 * f0 / (p * K * last.M * last.M);
        const double e1 = std::abs(f_p0(1.0) - 2), e2 = std::abs(c_p(1.0) - 2.0 / 3.0);
        // pure power potential: profiles are exact rescalings, so the shape
        // error sits at rounding level; decrease is checked up to that level
        bool shape_ok = true;
        std::string shapes;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i > 0)
                shape_ok = shape_ok && rows[i].shape_err <= rows[i - 1].shape_err + 1e-12;
            shapes += fmt("%.1e ", rows[i].shape_err);
        }
        const auto sol = global_minimizer(map, 1e4);
        emitted.push_back({hs.potential(), sol.profile});
        return std::make_pair(std::abs(ratio - 1) <= 0.05 && e1 <= 1e-10 && e2 <= 1e-10 && shape_ok,
                              fmt("ratio %.6f |f_1(0)-2|=%.1e |c_1-2/3|=%.1e", ratio, e1, e2) + " shape errs " + shapes);
    });

    criterion(8, "non-uniqueness", [&] {
        const auto spec = model_a(1.8, -1);
        const auto th = thresholds(spec);
        const bool window = *th.c2 <= 1.8 && 1.8 < *th.c1;
        const HeightSolver hs(spec);
        const auto rows = mass_sweep(hs, 1e-3, 1e2, 400);
        std::set<int> segs;
        for (const auto& r : rows)
            segs.insert(r.segment);
        const BranchMap map(hs);
        const auto c = find_energy_crossing(map, 20, 500);
        if (!c)
            return std::make_pair(false, std::string("no crossing found"));
        const double gap = std::abs(c->energy_a - c->energy_b) / std::abs(c->energy_a);
        const auto below = global_minimizer(map, c->M * (1 - 1e-3));
        const auto above = global_minimizer(map, c->M * (1 + 1e-3));
        emitted.push_back({hs.potential(), below.profile});
        emitted.push_back({hs.potential(), above.profile});
        const bool swap = below.branch == c->branch_a && above.branch == c->branch_b && !(c->branch_a == c->branch_b);
        return std::make_pair(window && segs.size() >= 2 && gap <= 1e-8 && swap,
                              fmt("segments %.0f, M*=%.10g, gap %.1e, ", double(segs.size()), c->M, gap)
                                  + fmt("winner u0 %.4f below -> %.4f above", below.u0, above.u0));
    });

    criterion(9, "validation-gate", [&] {
        int rejected = 0, total = 0;
        auto expect = [&](const PotentialSpec& s, auto tag) {
            ++total;
            try {
                validate(s);
            } catch (const decltype(tag)&) {
                ++rejected;
            } catch (...) {
            }
        };
        for (double m : {3.0, 3.2, 5.0}) {
            expect(model_a(0, -1, m, 2), NoMinimizerError(""));
            expect(model_a(0, 1, m, 2.5, 0.1), NoMinimizerError(""));
            PotentialSpec b = model_b(-1);
            b.m = m;
            b.n = m + 0.5;
            expect(b, NoMinimizerError(""));
        }
        PotentialSpec bad = model_b(-1);
        bad.m = 1.05;
        bad.n = 2.95;
        expect(bad, ParamError(""));
        bad.m = 1.02;
        bad.n = 2.98;
        expect(bad, ParamError(""));
        return std::make_pair(rejected == total, fmt("%.0f of %.0f invalid specs rejected", rejected, total));
    });

    criterion(10, "small-mass", [&] {
        const HeightSolver hs(model_a(0, 0));
        const BranchMap map(hs);
        std::vector<double> u;
        for (double M : {1.0, 0.1, 0.01}) {
            const auto s = global_minimizer(map, M);
            emitted.push_back({hs.potential(), s.profile});
            u.push_back(s.u0);
        }
        return std::make_pair(u[0] > u[1] && u[1] > u[2], fmt("u0 = %.6f, %.6f, %.6f", u[0], u[1], u[2]));
    });

    // runs last so that it covers every profile emitted above
    criterion(3, "eigenvalue-first-integral", [&] {
        double lam = 0, res = 0;
        for (const auto& e : emitted) {
            const double exact = e.pot.eval(e.profile.u0).q / e.profile.u0;
            lam = std::max(lam, std::abs(e.profile.lambda - exact) / std::abs(exact));
            res = std::max(res, first_integral_residual(e.profile, e.pot));
        }
        return std::make_pair(!emitted.empty() && lam <= 1e-12 && res <= 1e-8,
                              fmt("%.0f profiles, lambda rel err %.1e, residual %.1e", double(emitted.size()), lam, res));
    });

    for (const auto& [id, line] : lines)
        std::printf("%s\n", line.c_str());
    std::filesystem::remove_all(work);
    return failures == 0 ? 0 : 1;
}
