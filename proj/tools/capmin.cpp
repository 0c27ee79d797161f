#include <capmin/capmin.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using capmin::json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Config {
    std::optional<std::string> family;
    std::optional<double> A, B, S, D, m, n;
    std::optional<std::string> spec_file;
    std::optional<double> M;
    std::optional<std::string> M_list;
    std::optional<double> u0_min, u0_max;
    std::optional<std::size_t> points;
    std::optional<double> mass_tol;
    std::optional<std::string> out;
    std::optional<std::string> format;

    std::string format_or(const std::string& fallback) const { return format.value_or(fallback); }
};

void add_common(CLI::App* sub, Config& c)
{
    sub->add_option("--family", c.family, "model_a, model_b, model_a_gravity or model_b_gravity");
    sub->add_option("--A", c.A);
    sub->add_option("--B", c.B);
    sub->add_option("--S", c.S);
    sub->add_option("--D", c.D);
    sub->add_option("--m", c.m);
    sub->add_option("--n", c.n);
    sub->add_option("--spec-file", c.spec_file, "JSON potential spec; inline flags override its fields");
    sub->add_option("--out", c.out, "output path (stdout when absent)");
    sub->add_option("--format", c.format, "csv or json (default depends on the command)")->check(CLI::IsMember({"csv", "json"}));
}

capmin::PotentialSpec read_spec(const Config& c)
{
    capmin::PotentialSpec s;
    if (c.spec_file) {
        std::ifstream in(*c.spec_file);
        if (!in)
            throw UsageError("cannot read spec file " + *c.spec_file);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw capmin::ParamError(std::string("spec file is not valid JSON: ") + e.what());
        }
        s = capmin::spec_from_json(j);
    } else if (!c.family) {
        throw UsageError("give --family or --spec-file");
    }
    if (c.family)
        s.family = capmin::family_from_string(*c.family);
    if (s.family == capmin::Family::Custom)
        throw capmin::ParamError("custom potentials are library-only");
    if (c.A) s.A = *c.A;
    if (c.B) s.B = *c.B;
    if (c.S) s.S = *c.S;
    if (c.D) s.D = *c.D;
    if (c.m) s.m = *c.m;
    if (c.n) s.n = *c.n;
    capmin::validate(s);
    return s;
}

std::vector<double> parse_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size())
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("bad number '" + item + "' in list");
        }
    }
    return out;
}

// Output sink opened before any computation so unwritable paths fail early.
class Sink {
public:
    explicit Sink(const std::optional<std::string>& path) : path_(path)
    {
        if (path_) {
            file_ = std::make_unique<std::ofstream>(*path_, std::ios::binary);
            if (!*file_)
                throw UsageError("cannot write " + *path_);
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }
    const std::optional<std::string>& path() const { return path_; }

    // sibling file <stem>.<suffix> next to the main output
    std::optional<std::string> companion(const std::string& suffix) const
    {
        if (!path_)
            return std::nullopt;
        std::filesystem::path p(*path_);
        p.replace_filename(p.stem().string() + "." + suffix);
        return p.string();
    }

private:
    std::optional<std::string> path_;
    std::unique_ptr<std::ofstream> file_;
};

void write_json(std::ostream& os, const json& j) { os << j.dump(2) << '\n'; }

int cmd_classify(const Config& c)
{
    if (c.format_or("json") != "json")
        throw UsageError("classify writes JSON only");
    Sink sink(c.out);
    const auto spec = read_spec(c);
    const capmin::Landscape land(capmin::validate(spec));
    write_json(sink.stream(), capmin::landscape_report(land));
    return 0;
}

int cmd_solve(const Config& c)
{
    if (!c.M || !(*c.M > 0))
        throw UsageError("solve needs --M > 0");
    if (c.mass_tol && !(*c.mass_tol > 0))
        throw UsageError("--mass-tol must be positive");
    if (c.points && *c.points < 16)
        throw UsageError("--points must be at least 16");
    Sink sink(c.out);
    const auto profile_path = sink.companion("profile.csv");
    const auto composite_path = sink.companion("composite.csv");
    std::ofstream profile_out, composite_out;
    if (profile_path) {
        profile_out.open(*profile_path, std::ios::binary);
        if (!profile_out)
            throw UsageError("cannot write " + *profile_path);
    }
    const auto spec = read_spec(c);
    const capmin::HeightSolver hs(spec);
    const capmin::BranchMap map(hs);
    capmin::MinimizerOptions mo;
    if (c.points)
        mo.profile_nodes = *c.points;
    const auto sol = capmin::global_minimizer(map, *c.M, c.mass_tol, mo);

    std::optional<capmin::CompositeProfile> composite;
    try {
        composite.emplace(hs.landscape(), *c.M);
    } catch (const capmin::NotApplicable&) {
    }

    if (c.format_or("json") == "csv") {
        capmin::write_profile_csv(sink.stream(), sol.profile);
        return 0;
    }
    json j = capmin::to_json(sol);
    j["spec"] = capmin::to_json(spec);
    j["regime"] = capmin::to_string(hs.landscape().classify().regime);
    if (composite) {
        auto pj = capmin::to_json(composite->prediction());
        if (composite->prediction().regime == capmin::Regime::Droplet)
            pj["tan_theta_fit"] = capmin::parabola_slope(sol.profile);
        j["prediction"] = pj;
    } else {
        j["prediction"] = nullptr;
    }
    if (!profile_path)
        j["profile"] = capmin::to_json(sol.profile, true);
    write_json(sink.stream(), j);
    if (profile_path)
        capmin::write_profile_csv(profile_out, sol.profile);
    if (composite && composite_path) {
        composite_out.open(*composite_path, std::ios::binary);
        if (!composite_out)
            throw UsageError("cannot write " + *composite_path);
        composite_out << "x,u,composite\n";
        for (std::size_t i = 0; i < sol.profile.xs.size(); ++i)
            composite_out << capmin::format_number(sol.profile.xs[i]) << ',' << capmin::format_number(sol.profile.us[i])
                          << ',' << capmin::format_number((*composite)(sol.profile.xs[i])) << '\n';
    }
    return 0;
}

int cmd_sweep(const Config& c)
{
    const double lo = c.u0_min.value_or(1e-3), hi = c.u0_max.value_or(1e2);
    const std::size_t n = c.points.value_or(200);
    if (!(lo > 0 && hi > lo) || n < 2)
        throw UsageError("sweep needs 0 < --u0-min < --u0-max and --points >= 2");
    Sink sink(c.out);
    const auto spec = read_spec(c);
    const capmin::HeightSolver hs(spec);
    const auto rows = capmin::mass_sweep(hs, lo, hi, n);
    if (c.format_or("csv") == "csv") {
        capmin::write_sweep_csv(sink.stream(), rows);
    } else {
        json arr = json::array();
        for (const auto& r : rows)
            arr.push_back({{"u0", r.u0}, {"mu", r.mu}, {"energy", r.energy}, {"segment", r.segment}});
        write_json(sink.stream(), json{{"spec", capmin::to_json(spec)}, {"rows", arr}});
    }
    return 0;
}

int cmd_asympt(const Config& c)
{
    const auto Ms = parse_list(c.M_list.value_or("100,1000,10000"));
    if (Ms.empty())
        throw UsageError("--M-list is empty");
    for (double M : Ms)
        if (!(M > 0))
            throw UsageError("masses must be positive");
    Sink sink(c.out);
    const auto spec = read_spec(c);
    const capmin::HeightSolver hs(spec);
    const capmin::BranchMap map(hs);
    const auto rows = capmin::convergence_report(map, Ms);
    if (c.format_or("csv") == "csv") {
        capmin::write_convergence_csv(sink.stream(), rows);
    } else {
        json arr = json::array();
        for (const auto& r : rows) {
            json row{{"M", r.M},       {"u0", r.u0},           {"u0_pred", r.u0_pred},     {"rbar", r.rbar},
                     {"rbar_pred", r.rbar_pred}, {"shape_err", r.shape_err}, {"energy", r.energy}};
            row["tan_theta_fit"] = capmin::to_json_opt(r.tan_theta_fit);
            arr.push_back(row);
        }
        write_json(sink.stream(), json{{"spec", capmin::to_json(spec)},
                                       {"prediction", capmin::to_json(capmin::predict(hs.landscape(), Ms.back()))},
                                       {"rows", arr}});
    }
    return 0;
}

int cmd_crossing(const Config& c)
{
    if (c.format_or("json") != "json")
        throw UsageError("crossing writes JSON only");
    const auto range = parse_list(c.M_list.value_or("1,10000"));
    if (range.size() != 2 || !(range[0] > 0 && range[1] > range[0]))
        throw UsageError("crossing needs --M-list lo,hi with 0 < lo < hi");
    Sink sink(c.out);
    const auto spec = read_spec(c);
    const capmin::HeightSolver hs(spec);
    const capmin::BranchMap map(hs);
    write_json(sink.stream(), capmin::to_json(capmin::find_energy_crossing(map, range[0], range[1])));
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Fixed-mass minimizers of one-dimensional thin-film energies"};
    app.require_subcommand(1);
    Config cfg;

    auto* classify = app.add_subcommand("classify", "landscape of R = Q/s and the large-mass regime");
    add_common(classify, cfg);

    auto* solve = app.add_subcommand("solve", "global minimizer at fixed mass");
    add_common(solve, cfg);
    solve->add_option("--M", cfg.M, "mass")->required();
    solve->add_option("--mass-tol", cfg.mass_tol, "absolute mass tolerance (default 1e-8 M)");
    solve->add_option("--points", cfg.points, "profile nodes (default 512)");

    auto* sweep = app.add_subcommand("sweep", "mass and energy along a range of top heights");
    add_common(sweep, cfg);
    sweep->add_option("--u0-min", cfg.u0_min);
    sweep->add_option("--u0-max", cfg.u0_max);
    sweep->add_option("--points", cfg.points);

    auto* asympt = app.add_subcommand("asympt", "computed minimizers against large-mass predictions");
    add_common(asympt, cfg);
    asympt->add_option("--M-list", cfg.M_list, "comma separated masses");

    auto* crossing = app.add_subcommand("crossing", "mass where the optimal branch changes");
    add_common(crossing, cfg);
    crossing->add_option("--M-list", cfg.M_list, "search range lo,hi");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*classify)
            return cmd_classify(cfg);
        if (*solve)
            return cmd_solve(cfg);
        if (*sweep)
            return cmd_sweep(cfg);
        if (*asympt)
            return cmd_asympt(cfg);
        if (*crossing)
            return cmd_crossing(cfg);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const capmin::ParamError& e) {
        std::cerr << "invalid parameters: " << e.what() << '\n';
        return 2;
    } catch (const capmin::NoMinimizerError& e) {
        std::cerr << "no minimizer: " << e.what() << '\n';
        return 3;
    } catch (const capmin::Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 4;
    }
    return 1;
}
