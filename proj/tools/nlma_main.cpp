#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlma/builders.hpp"
#include "nlma/extended.hpp"
#include "nlma/grid_io.hpp"
#include "nlma/kernel.hpp"
#include "nlma/operator.hpp"
#include "nlma/profile.hpp"
#include "nlma/solver.hpp"
#include "nlma/spectral.hpp"
#include "nlma/suites.hpp"

using json = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kValidation = 2, kNotConverged = 3, kSuiteFailed = 4 };

struct Common {
    std::string fn = "smoothcone:a=1";
    std::string kernel = "full";
    std::vector<std::string> at;
    std::string b;
    std::string out;
    std::string json_path;
    double s = 1.5;
    int dim = 1;
    double box = 0.0;
    double h = 0.0;
    int nodes = 0;
};

// Box and spacing defaults keep a node at the origin and stay cheap in every dimension.
nlma::DomainParams domain(const Common& c) {
    nlma::DomainParams dp;
    dp.dim = c.dim;
    const double L[] = {20.0, 8.0, 4.0};
    const double h[] = {0.05, 0.125, 0.25};
    const int i = std::clamp(c.dim, 1, 3) - 1;
    dp.L = c.box > 0.0 ? c.box : L[i];
    dp.h = c.h > 0.0 ? c.h : h[i];
    dp.nodes = c.nodes;
    if (c.box < 0.0) throw nlma::ValidationError("--box must be positive");
    if (c.h < 0.0) throw nlma::ValidationError("--h must be positive");
    if (c.nodes < 0 || c.nodes == 1) throw nlma::ValidationError("--nodes must be at least 2");
    if (c.nodes == 0 && !(dp.h < dp.L)) throw nlma::ValidationError("--h must be smaller than --box");
    return dp;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw nlma::ValidationError(what + ": '" + tok + "' is not a number");
        }
    }
    if (out.empty()) throw nlma::ValidationError(what + ": empty value");
    return out;
}

nlma::Vec parse_point(const std::string& text, int d, const std::string& what) {
    auto v = parse_numbers(text, what);
    if (int(v.size()) != d)
        throw nlma::ValidationError(what + " '" + text + "' needs " + std::to_string(d) + " coordinates");
    nlma::Vec x{};
    for (int i = 0; i < d; ++i) x[i] = v[i];
    return x;
}

// Writes to the path, or to stdout when the path is empty.
void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path);
    if (!f) throw nlma::ValidationError("cannot write '" + path + "'");
    f << text;
}

void emit_json(const std::string& path, const json& j) {
    if (path.empty()) return;
    std::ofstream f(path);
    if (!f) throw nlma::ValidationError("cannot write '" + path + "'");
    f << j.dump(2) << '\n';
}

// Extended reals go to JSON as strings so inf survives.
json ext(double v) {
    if (std::isfinite(v)) return v;
    return nlma::format_extended(v);
}

json vec_json(const nlma::Vec& x, int d) {
    json a = json::array();
    for (int i = 0; i < d; ++i) a.push_back(x[i]);
    return a;
}

void check_order(double s) {
    if (!(s > 1.0 && s < 2.0)) throw nlma::ValidationError("--s must lie strictly between 1 and 2");
}

int run_eval(const Common& c, bool oracle) {
    check_order(c.s);
    auto dp = domain(c);
    auto kernel = nlma::KernelSpec::parse(c.kernel);
    auto spec = nlma::BuilderSpec::parse(c.fn);
    if (c.at.empty()) throw nlma::ValidationError("eval needs at least one --at point");
    if (oracle && kernel.variant != nlma::KernelSpec::Variant::Full)
        throw nlma::ValidationError("--oracle evaluates the full kernel only");
    auto f = nlma::build_grid_function(spec, dp);
    const int d = f.dim();
    std::vector<nlma::Vec> pts;
    for (const auto& a : c.at) {
        pts.push_back(parse_point(a, d, "--at"));
        if (!f.grid().inside(pts.back())) throw nlma::ValidationError("--at '" + a + "' lies outside the box");
    }
    std::optional<nlma::Vec> b;
    if (!c.b.empty()) b = parse_point(c.b, d, "--b");
    auto op = nlma::OperatorParams::make(d, c.s);

    std::ostringstream csv;
    csv << nlma::ma_csv_header(d) << '\n';
    json rows = json::array();
    for (const auto& x : pts) {
        auto r = oracle ? nlma::eval_ma_oracle(f, x, op, b) : nlma::eval_ma(f, x, op, kernel, b);
        csv << nlma::ma_csv_row(r, d, kernel, c.s) << '\n';
        json row{{"x", vec_json(r.x, d)}, {"b", vec_json(r.b, d)}, {"value", ext(r.value)},
                 {"flags", nlma::flag_tokens(r.flags)}};
        if (r.value == -nlma::kInf) row["witness"] = vec_json(r.witness, d);
        rows.push_back(row);
    }
    emit(c.out, csv.str());
    emit_json(c.json_path, json{{"command", oracle ? "eval-oracle" : "eval"},
                                {"fn", spec.text()},
                                {"kernel", kernel.text()},
                                {"s", c.s},
                                {"dim", d},
                                {"box", f.grid().L},
                                {"h", f.grid().h},
                                {"results", rows}});
    return kOk;
}

int run_rearrange(const Common& c, int samples) {
    check_order(c.s);
    auto dp = domain(c);
    auto spec = nlma::BuilderSpec::parse(c.fn);
    if (c.at.size() != 1) throw nlma::ValidationError("rearrange needs exactly one --at point");
    if (samples < 2) throw nlma::ValidationError("--samples must be at least 2");
    auto f = nlma::build_grid_function(spec, dp);
    const int d = f.dim();
    auto x = parse_point(c.at.front(), d, "--at");
    if (!f.grid().inside(x)) throw nlma::ValidationError("--at lies outside the box");
    std::optional<nlma::Vec> b;
    if (!c.b.empty()) b = parse_point(c.b, d, "--b");
    if (!f.convex()) throw nlma::ValidationError("rearrange needs convex data");

    auto prof = nlma::section_profile(f, x, b);
    auto v = nlma::radial_rearrangement(prof);
    const double r0 = f.grid().h / 4.0, r1 = 4.0 * f.grid().L;
    std::ostringstream csv;
    csv << "r,v\n";
    for (const auto& [r, val] : v.table(r0, r1, samples))
        csv << nlma::format_extended(r) << ',' << nlma::format_extended(val) << '\n';
    emit(c.out, csv.str());

    auto op = nlma::OperatorParams::make(d, c.s);
    const double integral = v.zero() ? 0.0 : nlma::rearranged_integral(v, op);
    emit_json(c.json_path, json{{"command", "rearrange"},
                                {"fn", spec.text()},
                                {"x", vec_json(prof.x(), d)},
                                {"b", vec_json(prof.b(), d)},
                                {"flags", nlma::flag_tokens(prof.flags())},
                                {"t_inf", ext(prof.t_inf())},
                                {"zero", v.zero()},
                                {"s", c.s},
                                {"rearranged_integral", ext(integral)}});
    return kOk;
}

int run_limit(const Common& c, const std::string& s_list) {
    auto dp = domain(c);
    auto spec = nlma::BuilderSpec::parse(c.fn);
    auto orders = parse_numbers(s_list, "--s-list");
    for (double s : orders) check_order(s);
    if (c.at.size() > 1) throw nlma::ValidationError("limit takes at most one --at point");
    auto f = nlma::build_grid_function(spec, dp);
    const int d = f.dim();
    nlma::Vec x{};
    if (!c.at.empty()) x = parse_point(c.at.front(), d, "--at");
    if (!f.grid().inside(x)) throw nlma::ValidationError("--at lies outside the box");

    auto st = nlma::scaled_limit_study(f, x, orders);
    std::ostringstream csv;
    csv << "s,scaled,gap\n";
    for (std::size_t i = 0; i < st.s.size(); ++i) {
        csv << nlma::format_extended(st.s[i]) << ',' << nlma::format_extended(st.scaled[i]) << ',';
        if (i > 0) csv << nlma::format_extended(st.gaps[i - 1]);
        csv << '\n';
    }
    emit(c.out, csv.str());
    json scaled = json::array(), gaps = json::array();
    for (double v : st.scaled) scaled.push_back(ext(v));
    for (double v : st.gaps) gaps.push_back(ext(v));
    emit_json(c.json_path, json{{"command", "limit"},
                                {"fn", spec.text()},
                                {"x", vec_json(x, d)},
                                {"s", st.s},
                                {"scaled", scaled},
                                {"gaps", gaps},
                                {"gaps_decreasing", st.gaps_decreasing}});
    return kOk;
}

struct SolveFlags {
    double tol = 1e-3;
    int max_iters = 60;
    double tau0 = 0.5;
    double eps0 = 0.0;
    double eps_min = 0.0;
    std::string solution;
    std::string barrier;
};

int run_solve(const Common& c, const SolveFlags& sf) {
    check_order(c.s);
    auto dp = domain(c);
    auto spec = nlma::BuilderSpec::parse(c.fn);
    nlma::SolverConfig cfg;
    cfg.tol = sf.tol;
    cfg.max_iters = sf.max_iters;
    cfg.tau0 = sf.tau0;
    cfg.eps0 = sf.eps0;
    cfg.eps_min = sf.eps_min;
    if (!(cfg.tol > 0.0)) throw nlma::ValidationError("--tol must be positive");
    if (cfg.max_iters < 0) throw nlma::ValidationError("--max-iters must be nonnegative");
    if (!(cfg.tau0 > 0.0 && cfg.tau0 <= 1.0)) throw nlma::ValidationError("--tau0 must lie in (0, 1]");
    if (cfg.eps0 < 0.0 || cfg.eps_min < 0.0) throw nlma::ValidationError("--eps0 and --eps-min must be positive");
    if (cfg.eps0 > 0.0 && cfg.eps_min > 0.0 && cfg.eps0 < cfg.eps_min)
        throw nlma::ValidationError("--eps0 must not be smaller than --eps-min");
    auto phi = nlma::build_grid_function(spec, dp);

    std::ostringstream csv;
    csv << nlma::convergence_csv_header() << '\n';
    auto st = nlma::solve_global(phi, c.s, cfg, std::nullopt, [&](const nlma::IterationRecord& r) {
        csv << nlma::convergence_csv_row(r) << '\n';
    });
    emit(c.out, csv.str());
    if (!sf.solution.empty()) nlma::write_grid_file(sf.solution, st.u);
    if (!sf.barrier.empty())
        nlma::write_grid_file(sf.barrier, st.barrier.w, {true, st.barrier.C, st.barrier.exponent});

    const auto& g = phi.grid();
    emit_json(c.json_path,
              json{{"command", "solve"},
                   {"fn", spec.text()},
                   {"s", c.s},
                   {"dim", g.dim},
                   {"box", g.L},
                   {"h", g.h},
                   {"nodes", g.n[0]},
                   {"tol", cfg.tol},
                   {"max_iters", cfg.max_iters},
                   {"tau0", cfg.tau0},
                   {"status", st.converged ? "converged" : "not-converged"},
                   {"iterations", st.iter},
                   {"scale", st.scale},
                   {"far_kappa", st.far_kappa},
                   {"barrier", {{"C", st.barrier.C}, {"exponent", st.barrier.exponent}}},
                   {"certification",
                    {{"sup_residual", ext(st.cert.sup_residual)},
                     {"c11_u", st.cert.c11_u},
                     {"c11_phi", st.cert.c11_phi},
                     {"min_gap_lower", st.cert.min_gap_lower},
                     {"min_gap_upper", st.cert.min_gap_upper},
                     {"symmetry", st.cert.symmetry}}}});
    std::cerr << (st.converged ? "converged" : "not-converged") << " after " << st.iter
              << " iterations, sup residual " << nlma::format_extended(st.cert.sup_residual) << " (scale "
              << nlma::format_extended(st.scale) << ")\n";
    return st.converged ? kOk : kNotConverged;
}

int run_check(std::uint64_t seed, int instances, const std::string& json_path) {
    if (instances < 1) throw nlma::ValidationError("--instances must be positive");
    nlma::SuiteOptions opt;
    opt.seed = seed;
    opt.instances = instances;
    auto results = nlma::run_all_suites(opt);
    bool ok = true;
    json suites = json::array();
    for (const auto& r : results) {
        std::cout << r.name << ' ' << r.passed << '/' << r.total << (r.ok() ? " pass" : " FAIL") << '\n';
        if (!r.ok()) std::cout << "  " << r.detail << '\n';
        ok = ok && r.ok();
        suites.push_back(json{{"name", r.name}, {"passed", r.passed}, {"total", r.total}, {"worst", ext(r.worst)}});
    }
    emit_json(json_path, json{{"command", "check"}, {"seed", seed}, {"instances", instances}, {"suites", suites}});
    return ok ? kOk : kSuiteFailed;
}

int run_dirichlet(const Common& c, double rhs) {
    nlma::DirichletDemo demo;
    demo.s = c.s;
    if (c.box > 0.0) demo.L = c.box;
    if (c.h > 0.0) demo.h = c.h;
    demo.f = rhs;
    check_order(demo.s);
    if (c.dim != 1) throw nlma::ValidationError("demo-dirichlet runs in one dimension");
    auto rep = nlma::demo_dirichlet(demo);

    std::ostringstream csv;
    csv << "x1,ma,f\n";
    const auto& g = rep.envelope.grid();
    for (std::size_t i = 0; i < rep.nodes.size(); ++i)
        csv << nlma::format_extended(g.coord(rep.nodes[i])[0]) << ',' << nlma::format_extended(rep.ma[i]) << ','
            << nlma::format_extended(demo.f) << '\n';
    if (!c.out.empty()) emit(c.out, csv.str());

    const auto& v = rep.verdict;
    std::cout << "verdict " << nlma::verdict_token(v.verdict) << '\n';
    if (v.verdict == nlma::Verdict::NoSolutionWitness)
        std::cout << "x " << nlma::format_extended(v.x[0]) << "\nMA U " << nlma::format_extended(v.lhs) << "\nf "
                  << nlma::format_extended(v.rhs) << '\n';
    emit_json(c.json_path, json{{"command", "demo-dirichlet"},
                                {"s", demo.s},
                                {"box", demo.L},
                                {"h", demo.h},
                                {"f", demo.f},
                                {"verdict", nlma::verdict_token(v.verdict)},
                                {"x", v.x[0]},
                                {"ma", ext(v.lhs)},
                                {"detail", v.detail}});
    return kOk;
}

void add_domain(CLI::App* app, Common& c) {
    app->add_option("--fn", c.fn, "builder spec, name:key=val,...")->capture_default_str();
    app->add_option("--s", c.s, "order in (1, 2)")->capture_default_str();
    app->add_option("--dim", c.dim, "dimension 1, 2 or 3")->capture_default_str();
    app->add_option("--box", c.box, "box half-width L");
    app->add_option("--h", c.h, "grid spacing");
    app->add_option("--nodes", c.nodes, "nodes per axis (overrides --h)");
    app->add_option("--out", c.out, "CSV report path (default stdout)");
    app->add_option("--json", c.json_path, "JSON metadata path");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlocal Monge-Ampere evaluation and global solver"};
    // -h would clash with the grid spacing option.
    app.set_help_flag("--help", "print this help and exit");
    app.require_subcommand(1);
    Common c;

    auto* eval = app.add_subcommand("eval", "evaluate MA f at grid points");
    add_domain(eval, c);
    eval->add_option("--kernel", c.kernel, "full | nearpinned:eps=.. | capped:n=.. | localized:R=..")
        ->capture_default_str();
    eval->add_option("--at", c.at, "point, comma-separated coordinates (repeatable)");
    eval->add_option("--b", c.b, "slope, must be a subgradient");
    bool oracle = false;
    eval->add_flag("--oracle", oracle, "use the rearrangement quadrature");

    auto* rearr = app.add_subcommand("rearrange", "tabulate the radial rearrangement of the increment");
    add_domain(rearr, c);
    rearr->add_option("--at", c.at, "base point");
    rearr->add_option("--b", c.b, "slope");
    int samples = 64;
    rearr->add_option("--samples", samples, "table rows")->capture_default_str();

    auto* solve = app.add_subcommand("solve", "solve MA u = u - phi");
    add_domain(solve, c);
    SolveFlags sf;
    solve->add_option("--tol", sf.tol, "stopping tolerance relative to the scale")->capture_default_str();
    solve->add_option("--max-iters", sf.max_iters)->capture_default_str();
    solve->add_option("--tau0", sf.tau0, "initial damping")->capture_default_str();
    solve->add_option("--eps0", sf.eps0, "initial near-pinning radius (default 4h)");
    solve->add_option("--eps-min", sf.eps_min, "final near-pinning radius (default h)");
    solve->add_option("--solution", sf.solution, "grid file for u");
    solve->add_option("--barrier", sf.barrier, "grid file for the barrier w");

    auto* limit = app.add_subcommand("limit", "(2 - s) MA f(x) as s approaches 2");
    add_domain(limit, c);
    limit->add_option("--at", c.at, "base point (default origin)");
    std::string s_list = "1.9,1.95,1.99";
    limit->add_option("--s-list", s_list, "orders")->capture_default_str();

    auto* check = app.add_subcommand("check", "run the property suites");
    std::uint64_t seed = 7;
    int instances = 100;
    check->add_option("--seed", seed)->capture_default_str();
    check->add_option("--instances", instances, "random instances per suite")->capture_default_str();
    check->add_option("--json", c.json_path, "JSON metadata path");

    auto* dir = app.add_subcommand("demo-dirichlet", "exterior data |y| on B_1 with constant right-hand side");
    dir->add_option("--s", c.s)->capture_default_str();
    dir->add_option("--dim", c.dim)->capture_default_str();
    dir->add_option("--box", c.box, "box half-width (default 4)");
    dir->add_option("--h", c.h, "grid spacing (default 0.05)");
    double rhs = 0.01;
    dir->add_option("--f", rhs, "right-hand side")->capture_default_str();
    dir->add_option("--out", c.out, "CSV of MA U inside B_1");
    dir->add_option("--json", c.json_path, "JSON metadata path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kValidation;
    }

    try {
        if (*eval) return run_eval(c, oracle);
        if (*rearr) return run_rearrange(c, samples);
        if (*solve) return run_solve(c, sf);
        if (*limit) return run_limit(c, s_list);
        if (*check) return run_check(seed, instances, c.json_path);
        if (*dir) return run_dirichlet(c, rhs);
    } catch (const nlma::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kValidation;
}
