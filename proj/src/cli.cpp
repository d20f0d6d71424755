#include "qbrolin/cli.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "qbrolin/complex_dyn.hpp"
#include "qbrolin/delta_star.hpp"
#include "qbrolin/errors.hpp"
#include "qbrolin/io.hpp"
#include "qbrolin/measures.hpp"
#include "qbrolin/parallel.hpp"
#include "qbrolin/rng.hpp"
#include "qbrolin/slice_cases.hpp"
#include "qbrolin/stats.hpp"
#include "qbrolin/version.hpp"

namespace qbrolin::cli {

namespace fs = std::filesystem;

namespace {

// ---- validation helpers ----

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [k, v] : obj.items())
        if (!known.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

double num(const json& obj, const std::string& key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where + "." + key + " must be finite");
    return x;
}

long long integer(const json& obj, const std::string& key, const std::string& where, long long lo, long long hi) {
    const json& v = obj.at(key);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
    const long long x = v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(hi)
                            ? hi + 1
                            : v.get<long long>();
    if (x < lo || x > hi)
        throw ConfigError(where + "." + key + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
}

double positive(const json& obj, const std::string& key, const std::string& where) {
    const double x = num(obj, key, where);
    if (!(x > 0.0)) throw ConfigError(where + "." + key + " must be positive");
    return x;
}

std::vector<double> num_array(const json& obj, const std::string& key, const std::string& where, std::size_t n) {
    const json& v = obj.at(key);
    if (!v.is_array() || (n && v.size() != n) || v.empty())
        throw ConfigError(where + "." + key + (n ? " must be an array of " + std::to_string(n) + " numbers"
                                                 : " must be a non-empty array of numbers"));
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number() || !std::isfinite(x.get<double>()))
            throw ConfigError(where + "." + key + " must contain finite numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

NumericPolicy parse_policy(const json& j) {
    reject_unknown(j,
                   {"slice_tol", "cluster_rel", "residual_rel", "real_tol", "aberth_max_iter", "preimage_budget",
                    "degree_budget", "exceptional_depth", "burn_in", "clamp_fail_fraction"},
                   "policy");
    NumericPolicy p;
    const std::string w = "policy";
    if (j.contains("slice_tol")) p.slice_tol = positive(j, "slice_tol", w);
    if (j.contains("cluster_rel")) p.cluster_rel = positive(j, "cluster_rel", w);
    if (j.contains("residual_rel")) p.residual_rel = positive(j, "residual_rel", w);
    if (j.contains("real_tol")) p.real_tol = positive(j, "real_tol", w);
    if (j.contains("aberth_max_iter")) p.aberth_max_iter = static_cast<int>(integer(j, "aberth_max_iter", w, 1, 1000000));
    if (j.contains("preimage_budget"))
        p.preimage_budget = static_cast<std::size_t>(integer(j, "preimage_budget", w, 1, 1LL << 32));
    if (j.contains("degree_budget"))
        p.degree_budget = static_cast<std::size_t>(integer(j, "degree_budget", w, 1, 1LL << 24));
    if (j.contains("exceptional_depth"))
        p.exceptional_depth = static_cast<int>(integer(j, "exceptional_depth", w, 1, 64));
    if (j.contains("burn_in")) p.burn_in = static_cast<int>(integer(j, "burn_in", w, 1, 100000));
    if (j.contains("clamp_fail_fraction")) {
        p.clamp_fail_fraction = num(j, "clamp_fail_fraction", w);
        if (p.clamp_fail_fraction < 0.0 || p.clamp_fail_fraction > 1.0)
            throw ConfigError("policy.clamp_fail_fraction must lie in [0, 1]");
    }
    return p;
}

json policy_json(const NumericPolicy& p) {
    return {{"slice_tol", p.slice_tol},
            {"cluster_rel", p.cluster_rel},
            {"residual_rel", p.residual_rel},
            {"real_tol", p.real_tol},
            {"aberth_max_iter", p.aberth_max_iter},
            {"preimage_budget", p.preimage_budget},
            {"degree_budget", p.degree_budget},
            {"exceptional_depth", p.exceptional_depth},
            {"burn_in", p.burn_in},
            {"clamp_fail_fraction", p.clamp_fail_fraction}};
}

GridSpec parse_grid(const json& j) {
    reject_unknown(j, {"alpha_min", "alpha_max", "beta_min", "beta_max", "resolution"}, "grid");
    GridSpec g;
    if (j.contains("alpha_min")) g.alpha_min = num(j, "alpha_min", "grid");
    if (j.contains("alpha_max")) g.alpha_max = num(j, "alpha_max", "grid");
    if (j.contains("beta_min")) g.beta_min = num(j, "beta_min", "grid");
    if (j.contains("beta_max")) g.beta_max = num(j, "beta_max", "grid");
    if (j.contains("resolution")) g.resolution = static_cast<int>(integer(j, "resolution", "grid", 3, 16385));
    if (!(g.alpha_max > g.alpha_min) || !(g.beta_max > g.beta_min))
        throw ConfigError("grid: need alpha_max > alpha_min and beta_max > beta_min");
    return g;
}

SliceGrid make_grid(const GridSpec& g) {
    return SliceGrid(g.alpha_min, g.alpha_max, g.beta_min, g.beta_max,
                     (g.alpha_max - g.alpha_min) / (g.resolution - 1));
}

// Fills defaults and checks that user values have the default's type.
json merge_params(const std::string& mode, const json& user) {
    json out = default_params(mode);
    if (user.is_null()) return out;
    if (!user.is_object()) throw ConfigError("params must be an object");
    for (const auto& [k, v] : user.items()) {
        if (!out.contains(k)) throw ConfigError("unknown key '" + k + "' in params for mode '" + mode + "'");
        const json& d = out[k];
        const bool ok = d.is_null() || (d.is_number_integer() && v.is_number_integer()) ||
                        (d.is_number_float() && v.is_number()) || (d.is_boolean() && v.is_boolean()) ||
                        (d.is_string() && v.is_string()) || (d.is_array() && v.is_array());
        if (!ok) throw ConfigError("params." + k + " has the wrong type");
        out[k] = v;
    }
    return out;
}

bool needs_real(const std::string& mode) {
    return mode == "equilibrium" || mode == "delta-star" || mode == "lyapunov" || mode == "entropy" ||
           mode == "mixing" || mode == "clt";
}

void check_panel_id(const json& p, const std::string& key) {
    const std::string id = p.at(key).get<std::string>();
    for (const auto& f : standard_panel())
        if (f.id == id) return;
    throw ConfigError("params." + key + ": unknown panel function '" + id + "'");
}

void validate_mode(const RunConfig& c) {
    const json& p = c.params;
    const std::string w = "params";
    if (c.mode != "verify") {
        if (c.polynomial->degree() < 2) throw ConfigError("polynomial degree must be at least 2");
        if (needs_real(c.mode) && !c.polynomial->has_real_coefficients(c.policy.slice_tol))
            throw ConfigError("mode '" + c.mode + "' needs real coefficients; use one-slice or general-gap");
    }
    if (c.mode == "julia" || c.mode == "green") {
        const auto unit = io::unit_from_json(p.at("unit"), "params.unit");
        for (std::size_t k = 0; k < c.polynomial->coeffs().size(); ++k) {
            const double off = slice_distance(c.polynomial->coeffs()[k], unit);
            if (off > c.policy.slice_tol) throw CoefficientOffSlice(k, off);
        }
        integer(p, c.mode == "julia" ? "max_iter" : "depth", w, 1, 100000);
    } else if (c.mode == "equilibrium") {
        integer(p, "depth", w, 0, 64);
        num(p, "target", w);
    } else if (c.mode == "delta-star") {
        integer(p, "depth", w, 1, 64);
        integer(p, "compare_depth", w, 0, 64);
        num(p, "target", w);
        positive(p, "tolerance", w);
    } else if (c.mode == "lyapunov") {
        integer(p, "samples", w, 1, 100000000);
        integer(p, "sphere_n", w, 1, 10000);
        positive(p, "sphere_eps", w);
        const auto q = num_array(p, "sphere_point", w, 2);
        if (!(q[1] > 0.0)) throw ConfigError("params.sphere_point needs beta > 0");
    } else if (c.mode == "entropy") {
        integer(p, "n_max", w, 2, 64);
        for (double e : num_array(p, "eps", w, 0))
            if (!(e > 0.0)) throw ConfigError("params.eps entries must be positive");
        positive(p, "density", w);
        if (!p.at("box").is_null()) {
            const auto b = num_array(p, "box", w, 3);
            if (!(b[1] > b[0]) || !(b[2] >= 0.0)) throw ConfigError("params.box must be [alpha_min, alpha_max, beta_max]");
        }
        integer(p, "partition_cells", w, 0, 65534);
        integer(p, "partition_n_max", w, 2, 64);
        integer(p, "partition_samples", w, 10, 100000000);
    } else if (c.mode == "mixing") {
        integer(p, "n_max", w, 1, 64);
        integer(p, "samples", w, 1, 100000000);
        check_panel_id(p, "phi");
        check_panel_id(p, "psi");
    } else if (c.mode == "clt") {
        integer(p, "n_terms", w, 1, 100000);
        integer(p, "samples", w, 2, 100000000);
        integer(p, "replicates", w, 1, 100000);
        check_panel_id(p, "phi");
        if (!panel_function(p.at("phi").get<std::string>()).axial)
            throw ConfigError("params.phi must be axially symmetric");
    } else if (c.mode == "one-slice") {
        OneSlicePolynomial::from_qpolynomial(*c.polynomial);
        integer(p, "depth", w, 1, 64);
        integer(p, "real_mass_depth", w, 1, 64);
        num(p, "target", w);
        num(p, "other_target", w);
        positive(p, "bin_width", w);
        positive(p, "tolerance", w);
        positive(p, "real_mass_tolerance", w);
    } else if (c.mode == "general-gap") {
        if (num(p, "a", w) == num(p, "b", w)) throw ConfigError("params.a and params.b must differ");
        integer(p, "n_max", w, 1, 64);
        const auto b = num_array(p, "probe_box", w, 4);
        if (!(b[1] >= b[0]) || !(b[3] >= b[2])) throw ConfigError("params.probe_box must be [amin, amax, bmin, bmax]");
        integer(p, "probe_nx", w, 1, 100000);
        integer(p, "probe_ny", w, 1, 100000);
        integer(p, "horizon", w, 2, 64);
        integer(p, "monotone_from", w, 1, 64);
        positive(p, "tolerance", w);
    } else if (c.mode == "verify") {
        integer(p, "samples", w, 1000, 10000000);
    }
}

// ---- output ----

class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }
    void json_file(const std::string& name, const json& j) {
        io::save_json(dir_ / name, j);
        files_.push_back(name);
    }
    void csv(const std::string& name, const io::CsvWriter& w) {
        w.save(dir_ / name);
        files_.push_back(name);
    }
    void pgm(const std::string& name, const GridField& f, double lo, double hi) {
        io::save_pgm(dir_ / name, f, lo, hi);
        files_.push_back(name);
    }
    const std::vector<std::string>& files() const { return files_; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

struct Context {
    const RunConfig& config;
    const json& p;
    Outputs& out;
    std::ostream& log;
    json adjustments = json::array();
};

void progress(Context& ctx, const std::string& msg) { ctx.log << "[" << ctx.config.mode << "] " << msg << "\n"; }

SliceGrid grid_with_note(Context& ctx) {
    const SliceGrid g = make_grid(ctx.config.grid);
    const GridSpec& s = ctx.config.grid;
    if (g.alpha_max() != s.alpha_max || g.beta_max() != s.beta_max)
        ctx.adjustments.push_back({{"field", "grid"},
                                   {"reason", "upper bounds snapped to the node lattice"},
                                   {"alpha_max", g.alpha_max()},
                                   {"beta_max", g.beta_max()}});
    return g;
}

ComplexPoly slice_poly(const Context& ctx) {
    const ImaginaryUnit unit =
        ctx.p.contains("unit") ? io::unit_from_json(ctx.p.at("unit")) : ImaginaryUnit::i();
    return restrict_to_slice(*ctx.config.polynomial, unit);
}

double max_value(const GridField& f) {
    double m = 0.0;
    for (std::size_t k = 0; k < f.values.size(); ++k)
        if (!f.mask[k] && std::isfinite(f.values[k])) m = std::max(m, f.values[k]);
    return m > 0.0 ? m : 1.0;
}

json run_julia(Context& ctx) {
    const QPolynomial& P = *ctx.config.polynomial;
    const ComplexPoly pc = slice_poly(ctx);
    const auto esc = EscapeParams::for_poly(pc, ctx.p.at("max_iter").get<int>());
    const SliceGrid grid = grid_with_note(ctx);
    progress(ctx, "escape test on " + std::to_string(grid.nx()) + "x" + std::to_string(grid.ny()) + " nodes");
    const auto mask = filled_julia_mask(pc, grid, esc);
    GridField f(grid);
    std::size_t inside = 0;
    for (std::size_t k = 0; k < mask.size(); ++k) {
        f.values[k] = mask[k];
        inside += mask[k];
    }
    ctx.out.pgm("julia.pgm", f, 0.0, 1.0);
    json side = io::raster_sidecar(grid, P, esc);
    side["unit"] = ctx.p.at("unit");
    ctx.out.json_file("julia.json", side);
    if (ctx.p.at("csv").get<bool>()) ctx.out.csv("julia.csv", io::grid_csv(f));
    return {{"nodes", grid.size()}, {"filled_nodes", inside},
            {"filled_fraction", static_cast<double>(inside) / static_cast<double>(grid.size())}};
}

json run_green(Context& ctx) {
    const QPolynomial& P = *ctx.config.polynomial;
    const ComplexPoly pc = slice_poly(ctx);
    const int n = ctx.p.at("depth").get<int>();
    const SliceGrid grid = grid_with_note(ctx);
    progress(ctx, "G_" + std::to_string(n) + " on " + std::to_string(grid.size()) + " nodes");
    const auto g = green_raster(pc, grid, n);
    const double hi = max_value(g.field);
    ctx.out.pgm("green.pgm", g.field, 0.0, hi);
    json side = io::raster_sidecar(grid, P, EscapeParams::for_poly(pc, n));
    side["unit"] = ctx.p.at("unit");
    side["depth"] = n;
    side["pgm_range"] = {0.0, hi};
    ctx.out.json_file("green.json", side);
    ctx.out.csv("green.csv", io::grid_csv(g.field));
    return {{"max_green", hi}, {"nodes", grid.size()}};
}

json run_equilibrium(Context& ctx) {
    const int n = ctx.p.at("depth").get<int>();
    const double a = ctx.p.at("target").get<double>();
    progress(ctx, "Brolin pullback of " + io::format_number(a) + " at depth " + std::to_string(n));
    const auto m = brolin_pullback(*ctx.config.polynomial, a, n);
    ctx.out.json_file("measure.json", io::to_json(m));
    ctx.out.csv("measure.csv", io::measure_csv(m));
    const auto quad = sphere_quadrature(ctx.config.quadrature_level);
    json pairings = json::object();
    for (const auto& f : standard_panel()) pairings[f.id] = pair(m, f, quad);
    return {{"atoms", m.size()}, {"total_mass", m.total_mass()}, {"real_mass", m.real_mass()}, {"pairings", pairings}};
}

json run_delta_star(Context& ctx) {
    const QPolynomial& P = *ctx.config.polynomial;
    const int n = ctx.p.at("depth").get<int>();
    const SliceGrid grid = grid_with_note(ctx);
    progress(ctx, "density 2 Delta G_" + std::to_string(n) + " / pi on " + std::to_string(grid.size()) + " nodes");
    const auto r = measure_from_green(P, n, grid);
    const double hi = max_value(r.density);
    ctx.out.pgm("density.pgm", r.density, 0.0, hi);
    ctx.out.csv("density.csv", io::grid_csv(r.density));
    const auto quad = sphere_quadrature(ctx.config.quadrature_level);
    const int cn = ctx.p.at("compare_depth").get<int>();
    progress(ctx, "comparing with the depth-" + std::to_string(cn) + " preimage measure");
    const auto ref = brolin_pullback(P, ctx.p.at("target").get<double>(), cn);
    const double dist = weak_distance(raster_to_measure(r), ref, standard_panel(), quad);
    json report = {{"total_mass", r.total_mass},
                   {"clamped_mass", r.clamped_mass},
                   {"pgm_range", {0.0, hi}},
                   {"panel_distance", io::check_report(dist, 0.0, ctx.p.at("tolerance").get<double>())}};
    ctx.out.json_file("delta_star.json", report);
    return report;
}

json run_lyapunov(Context& ctx) {
    const QPolynomial& P = *ctx.config.polynomial;
    const ComplexPoly pc = restrict_to_slice(P, ImaginaryUnit::i());
    progress(ctx, "Birkhoff average over " + std::to_string(ctx.p.at("samples").get<long long>()) + " samples");
    const auto rep = lyapunov_slice(pc, ctx.p.at("samples").get<std::size_t>(), ctx.config.seed);
    const auto q = ctx.p.at("sphere_point").get<std::vector<double>>();
    const double sphere = lyapunov_sphere_direction(P, SlicePoint{q[0], q[1], ImaginaryUnit::i()},
                                                    ctx.p.at("sphere_n").get<int>(),
                                                    ctx.p.at("sphere_eps").get<double>());
    const double bound = 0.5 * std::log(static_cast<double>(pc.degree()));
    json report = {{"slice", rep.to_json()},
                   {"sphere_direction", sphere},
                   {"half_log_degree", bound},
                   {"above_half_log_degree", rep.value >= bound - 2.0 * rep.std_error}};
    ctx.out.json_file("lyapunov.json", report);
    return {{"lyapunov", rep.value}, {"stderr", rep.std_error}, {"sphere_direction", sphere}};
}

json run_entropy(Context& ctx) {
    const QPolynomial& P = *ctx.config.polynomial;
    const ComplexPoly pc = restrict_to_slice(P, ImaginaryUnit::i());
    const double R = pc.escape_radius();
    AxialBox box{-R, R, R};
    if (!ctx.p.at("box").is_null()) {
        const auto b = ctx.p.at("box").get<std::vector<double>>();
        box = {b[0], b[1], b[2]};
    }
    const int n_max = ctx.p.at("n_max").get<int>();
    progress(ctx, "separated sets for n = 1.." + std::to_string(n_max));
    const auto top = topological_entropy(P, box, n_max, ctx.p.at("eps").get<std::vector<double>>(),
                                         ctx.p.at("density").get<double>());
    io::CsvWriter counts({"eps", "n", "log_N"});
    for (const auto& e : top.params.at("per_eps")) {
        const auto c = e.at("counts").get<std::vector<std::size_t>>();
        for (std::size_t k = 0; k < c.size(); ++k)
            counts.row({e.at("eps").get<double>(), static_cast<double>(k + 1),
                        std::log(static_cast<double>(std::max<std::size_t>(c[k], 1)))});
    }
    ctx.out.csv("entropy_counts.csv", counts);
    json report = {{"topological", top.to_json()}};
    json summary = {{"topological", top.value}, {"topological_stderr", top.std_error}};
    const int cells = ctx.p.at("partition_cells").get<int>();
    if (cells > 0) {
        const std::size_t ns = ctx.p.at("partition_samples").get<std::size_t>();
        progress(ctx, "partition entropy from " + std::to_string(ns) + " samples");
        const auto samples = sample_mu(pc, ns, ctx.config.seed);
        const auto part = partition_entropy(pc, samples, interval_partition(-R, R, cells, R),
                                            ctx.p.at("partition_n_max").get<int>());
        const double slack = std::hypot(top.std_error, part.std_error);
        report["partition"] = part.to_json();
        report["variational"] = {{"partition", part.value},
                                 {"topological", top.value},
                                 {"combined_stderr", slack},
                                 {"pass", part.value <= top.value + slack}};
        summary["partition"] = part.value;
        summary["partition_stderr"] = part.std_error;
    }
    ctx.out.json_file("entropy.json", report);
    return summary;
}

json run_mixing(Context& ctx) {
    const ComplexPoly pc = restrict_to_slice(*ctx.config.polynomial, ImaginaryUnit::i());
    const int n_max = ctx.p.at("n_max").get<int>();
    progress(ctx, "correlations for n = 0.." + std::to_string(n_max));
    const auto r = mixing_correlation(pc, panel_function(ctx.p.at("phi").get<std::string>()),
                                      panel_function(ctx.p.at("psi").get<std::string>()), n_max,
                                      ctx.p.at("samples").get<std::size_t>(), ctx.config.seed);
    io::CsvWriter csv({"n", "correlation", "stderr"});
    for (const auto& c : r.series) csv.row({static_cast<double>(c.n), c.correlation, c.std_error});
    ctx.out.csv("mixing.csv", csv);
    json report = {{"name", "mixing_slope"},
                   {"value", r.fit.slope},
                   {"intercept", r.fit.intercept},
                   {"residual", r.fit.residual},
                   {"fit_from_n", r.series.at(r.fit.first).n},
                   {"seed", ctx.config.seed},
                   {"params", ctx.p}};
    ctx.out.json_file("mixing.json", report);
    return {{"slope", r.fit.slope}, {"residual", r.fit.residual}};
}

json run_clt(Context& ctx) {
    const ComplexPoly pc = restrict_to_slice(*ctx.config.polynomial, ImaginaryUnit::i());
    progress(ctx, "Birkhoff sums and null calibration");
    const auto r = clt_harness(pc, panel_function(ctx.p.at("phi").get<std::string>()),
                               ctx.p.at("n_terms").get<int>(), ctx.p.at("samples").get<std::size_t>(),
                               ctx.config.seed, ctx.p.at("replicates").get<int>());
    json report = {{"ks", r.ks},
                   {"sigma_hat", r.sigma_hat},
                   {"mean_phi", r.mean_phi},
                   {"null_p95", r.null_p95},
                   {"degenerate", r.degenerate},
                   {"n_samples", r.n_samples},
                   {"n_terms", r.n_terms},
                   {"seed", ctx.config.seed},
                   {"pass", !r.degenerate && r.ks <= r.null_p95}};
    ctx.out.json_file("clt.json", report);
    return {{"ks", r.ks}, {"null_p95", r.null_p95}, {"sigma_hat", r.sigma_hat}, {"degenerate", r.degenerate}};
}

json run_one_slice(Context& ctx) {
    const auto P = OneSlicePolynomial::from_qpolynomial(*ctx.config.polynomial);
    const auto quad = sphere_quadrature(ctx.config.quadrature_level);
    const int n = ctx.p.at("depth").get<int>();
    const double a = ctx.p.at("target").get<double>(), b = ctx.p.at("other_target").get<double>();
    const double bw = ctx.p.at("bin_width").get<double>();
    progress(ctx, "g_" + std::to_string(n) + " pullback and mu' estimate");
    const auto gm = gn_pullback_measure(P, a, n);
    const auto gm_b = gn_pullback_measure(P, b, n);
    const auto mp = mu_prime_estimate_tagged(P, quad, n, a, bw);
    const int nr = ctx.p.at("real_mass_depth").get<int>();
    const double real_mass = mu_prime_estimate(P, quad, nr, a, bw).real_mass();

    ctx.out.json_file("gn_measure.json", io::to_json(gm));
    ctx.out.csv("gn_measure.csv", io::measure_csv(gm));
    ctx.out.json_file("mu_prime.json", io::to_json(mp.measure));
    ctx.out.csv("mu_prime.csv", io::measure_csv(mp.measure));
    io::CsvWriter tagged({"alpha", "beta", "unit_x", "unit_y", "unit_z", "weight"});
    for (const auto& t : mp.tagged) tagged.row({t.alpha, t.beta, t.unit.x(), t.unit.y(), t.unit.z(), t.weight});
    ctx.out.csv("mu_prime_tagged.csv", tagged);

    const double tol = ctx.p.at("tolerance").get<double>();
    const double dist = weak_distance(gm, mp.measure, standard_panel(), quad);
    const double indep = weak_distance(gm, gm_b, standard_panel(), quad);
    json report = {{"gn_vs_mu_prime", io::check_report(dist, 0.0, tol)},
                   {"real_mass", io::check_report(real_mass, 0.0, ctx.p.at("real_mass_tolerance").get<double>())},
                   {"target_independence", io::check_report(indep, 0.0, tol)},
                   {"unit", io::to_json(P.unit)},
                   {"has_nonreal_coefficient", P.has_nonreal_coefficient}};
    ctx.out.json_file("one_slice.json", report);
    return {{"gn_vs_mu_prime", dist}, {"real_mass", real_mass}, {"target_independence", indep}};
}

json run_general_gap(Context& ctx) {
    const QPolynomial& P = *ctx.config.polynomial;
    const auto box = ctx.p.at("probe_box").get<std::vector<double>>();
    const auto probes =
        probe_grid(box[0], box[1], box[2], box[3], ctx.p.at("probe_nx").get<int>(), ctx.p.at("probe_ny").get<int>());
    const double a = ctx.p.at("a").get<double>(), b = ctx.p.at("b").get<double>();
    const int n_max = ctx.p.at("n_max").get<int>(), horizon = ctx.p.at("horizon").get<int>();
    const bool enforce = ctx.p.at("enforce_screen").get<bool>();
    progress(ctx, "gap for n = 1.." + std::to_string(n_max) + " on " + std::to_string(probes.size()) + " probes");
    io::CsvWriter csv({"n", "gap"});
    std::vector<double> gaps;
    json flagged = json::array(), used = json::array();
    for (int n = 1; n <= n_max; ++n) {
        const auto g = brolin3_gap(P, a, b, n, probes, horizon, enforce);
        gaps.push_back(g.gap);
        csv.row({static_cast<double>(n), g.gap});
        used.push_back(g.used);
        if (n == 1) flagged = g.finite_orbit_targets;
    }
    ctx.out.csv("gap.csv", csv);
    const int from = ctx.p.at("monotone_from").get<int>();
    bool monotone = true;
    for (int n = from + 1; n <= n_max; ++n) monotone = monotone && gaps[n - 1] <= gaps[n - 2];
    json report = {{"gaps", gaps},
                   {"probes_used", used},
                   {"horizon", horizon},
                   {"finite_orbit_targets", flagged},
                   {"monotone_from", from},
                   {"monotone", monotone},
                   {"final_gap", io::check_report(gaps.back(), 0.0, ctx.p.at("tolerance").get<double>())}};
    ctx.out.json_file("gap.json", report);
    return {{"final_gap", gaps.back()}, {"monotone", monotone}, {"finite_orbit_targets", flagged}};
}

// ---- verify: a fast invariant suite ----

struct Check {
    std::string name;
    double computed, expected, tolerance;
    bool pass() const { return std::abs(computed - expected) <= tolerance; }
};

Quaternion random_q(Rng& rng) { return {rng.normal(), rng.normal(), rng.normal(), rng.normal()}; }

QPolynomial random_poly(Rng& rng, int degree) {
    std::vector<Quaternion> c;
    for (int k = 0; k <= degree; ++k) c.push_back(random_q(rng));
    return QPolynomial(std::move(c));
}

double coeff_gap(const QPolynomial& f, const QPolynomial& g) {
    const std::size_t n = std::max(f.coeffs().size(), g.coeffs().size());
    double m = 0.0, s = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        const Quaternion a = k < f.coeffs().size() ? f.coeffs()[k] : Quaternion();
        const Quaternion b = k < g.coeffs().size() ? g.coeffs()[k] : Quaternion();
        m = std::max(m, (a - b).norm());
        s = std::max({s, a.norm(), b.norm()});
    }
    return m / s;
}

std::vector<Check> verify_checks(const RunConfig& c, std::ostream& log) {
    std::vector<Check> out;
    const auto quad = sphere_quadrature(c.quadrature_level);
    const auto step = [&](const std::string& s) { log << "[verify] " << s << "\n"; };

    step("algebra identities");
    {
        Rng rng(derive_seed(c.seed, 1));
        double conj_err = 0, real_err = 0, eval_err = 0, deg_err = 0;
        for (int t = 0; t < 200; ++t) {
            const auto f = random_poly(rng, 1 + static_cast<int>(rng.next() % 4));
            const auto g = random_poly(rng, 1 + static_cast<int>(rng.next() % 4));
            conj_err = std::max(conj_err, coeff_gap(conj(star_mul(f, g)), star_mul(conj(g), conj(f))));
            const auto fs = symmetrize(f);
            real_err = std::max(real_err, fs.max_imaginary() / std::max(1.0, fs.max_abs_coefficient()));
            const Quaternion q = random_q(rng);
            const Quaternion lhs = eval(star_mul(f, g), q);
            const Quaternion rhs = eval(f, q) * eval(g, star_conjugation_point(f, q));
            eval_err = std::max(eval_err, (lhs - rhs).norm() / std::max(1.0, lhs.norm()));
            const auto w = random_poly(rng, 1 + static_cast<int>(rng.next() % 3));
            deg_err = std::max(deg_err, std::abs(static_cast<double>(bullet_compose(g, w).degree() -
                                                                     g.degree() * w.degree())));
        }
        out.push_back({"star_conjugate_antihomomorphism", conj_err, 0.0, 1e-10});
        out.push_back({"symmetrization_is_real", real_err, 0.0, 1e-10});
        out.push_back({"star_evaluation_identity", eval_err, 0.0, 1e-10});
        out.push_back({"bullet_degree_law", deg_err, 0.0, 0.0});
    }

    step("fundamental solution of Delta_*");
    {
        const auto bump = gaussian_bump(cplx(0.3, 0.0), 1.0);
        const auto grid = SliceGrid::centered(cplx(0.3, 0.0), 6.0, 1.0 / 32);
        const auto k = fundamental_solution_check(0.3, bump, grid);
        out.push_back({"fundamental_solution_relative_error", std::abs(k.computed / k.expected - 1.0), 0.0, 0.01});
    }

    step("Brolin pullback for q^2 - 2");
    const auto cheb = QPolynomial::from_real(std::vector<double>{-2.0, 0.0, 1.0});
    {
        const auto m0 = brolin_pullback(cheb, 0.0, 8), m1 = brolin_pullback(cheb, 1.0, 8);
        out.push_back({"total_mass", m0.total_mass(), 1.0, 1e-12});
        out.push_back({"target_independence_n8", weak_distance(m0, m1, standard_panel(), quad), 0.0, 0.05});
        out.push_back({"pushforward_invariance_n8",
                       weak_distance(pushforward(cheb, m0), m0, standard_panel(), quad), 0.0, 0.05});
    }

    step("backward orbit sampler and Lyapunov exponent");
    {
        const std::size_t ns = c.params.at("samples").get<std::size_t>();
        const ComplexPoly z2({0.0, 0.0, 1.0});
        const auto rep = lyapunov_slice(z2, ns, derive_seed(c.seed, 2));
        out.push_back({"lyapunov_q2", rep.value, std::numbers::ln2, 0.01});
        // Arcsine law of q^2 - 2: F(x) = 1/2 + asin(x/2)/pi on [-2, 2].
        auto xs = sample_mu(restrict_to_slice(cheb, ImaginaryUnit::i()), ns, derive_seed(c.seed, 3));
        std::vector<double> re;
        for (auto z : xs) re.push_back(z.real());
        std::sort(re.begin(), re.end());
        double ks = 0.0;
        for (std::size_t k = 0; k < re.size(); ++k) {
            const double F = 0.5 + std::asin(std::clamp(re[k] / 2.0, -1.0, 1.0)) / std::numbers::pi;
            ks = std::max({ks, std::abs(F - static_cast<double>(k) / re.size()),
                           std::abs(F - static_cast<double>(k + 1) / re.size())});
        }
        out.push_back({"arcsine_ks", ks, 0.0, 2.0 / std::sqrt(static_cast<double>(ns))});
        const auto lam = transfer_powers(restrict_to_slice(cheb, ImaginaryUnit::i()), [](cplx) { return 1.0; },
                                         cplx(0.5, 0.0), 4);
        out.push_back({"transfer_operator_preserves_constants", lam.back(), 1.0, 1e-12});
    }

    step("one-slice and general coefficients");
    {
        const QPolynomial qi({Quaternion(0, 1, 0, 0), Quaternion(0.0), Quaternion(1.0)});
        const QPolynomial qj({Quaternion(0, 0, 1, 0), Quaternion(0.0), Quaternion(1.0)});
        const QPolynomial quartic = QPolynomial::from_real(std::vector<double>{1, 0, 0, 0, 1});
        const auto P = OneSlicePolynomial::from_qpolynomial(qi);
        out.push_back({"g1_of_q2_plus_i", coeff_gap(gn_build(P, 1), quartic), 0.0, 1e-12});
        out.push_back({"h1_of_q2_plus_j", coeff_gap(hn_build(qj, 1).h, quartic), 0.0, 1e-12});
        out.push_back({"mu_prime_total_mass", mu_prime_estimate(P, quad, 3, 0.0).total_mass(), 1.0, 1e-12});
        const auto probes = probe_grid(-2.0, 2.0, 0.0, 2.0, 5, 5);
        out.push_back({"gap_zero_for_equal_targets", brolin3_gap(qj, 0.5, 0.5, 3, probes).gap, 0.0, 0.0});
        out.push_back({"gap_n6_q2_plus_j", brolin3_gap(qj, 0.0, 1.0, 6, probes, 8, false).gap, 0.0, 0.02});
    }
    return out;
}

json run_verify(Context& ctx, int& exit_code) {
    const auto checks = verify_checks(ctx.config, ctx.log);
    io::CsvWriter csv({"check", "computed", "expected", "tolerance", "pass"});
    json rows = json::array();
    std::size_t passed = 0;
    for (const auto& c : checks) {
        csv.row(std::vector<std::string>{c.name, io::format_number(c.computed), io::format_number(c.expected),
                                         io::format_number(c.tolerance), c.pass() ? "1" : "0"});
        json r = io::check_report(c.computed, c.expected, c.tolerance);
        r["name"] = c.name;
        rows.push_back(r);
        passed += c.pass();
        ctx.log << (c.pass() ? "PASS " : "FAIL ") << c.name << "  computed=" << io::format_number(c.computed)
                << " expected=" << io::format_number(c.expected) << " tol=" << io::format_number(c.tolerance)
                << "\n";
    }
    ctx.out.csv("verify.csv", csv);
    const bool all = passed == checks.size();
    ctx.out.json_file("verify.json", {{"checks", rows}, {"passed", passed}, {"total", checks.size()}, {"all_pass", all}});
    exit_code = all ? 0 : 1;
    return {{"passed", passed}, {"total", checks.size()}, {"all_pass", all}};
}

}  // namespace

json default_params(const std::string& mode) {
    if (mode == "julia") return {{"max_iter", 256}, {"unit", {1.0, 0.0, 0.0}}, {"csv", false}};
    if (mode == "green") return {{"depth", 12}, {"unit", {1.0, 0.0, 0.0}}};
    if (mode == "equilibrium") return {{"depth", 10}, {"target", 0.0}};
    if (mode == "delta-star") return {{"depth", 10}, {"compare_depth", 10}, {"target", 0.0}, {"tolerance", 0.05}};
    if (mode == "lyapunov")
        return {{"samples", 100000}, {"sphere_n", 20}, {"sphere_eps", 1e-6}, {"sphere_point", {0.6, 0.8}}};
    if (mode == "entropy")
        return {{"n_max", 7},
                {"eps", {0.5, 1.0}},
                {"density", 8192.0},
                {"box", nullptr},
                {"partition_cells", 0},
                {"partition_n_max", 12},
                {"partition_samples", 100000}};
    if (mode == "mixing") return {{"n_max", 12}, {"samples", 100000}, {"phi", "re"}, {"psi", "norm2"}};
    if (mode == "clt") return {{"n_terms", 200}, {"samples", 10000}, {"phi", "re"}, {"replicates", 200}};
    if (mode == "one-slice")
        return {{"depth", 6},
                {"real_mass_depth", 8},
                {"target", 0.0},
                {"other_target", 1.0},
                {"bin_width", 1.0 / 128},
                {"tolerance", 0.05},
                {"real_mass_tolerance", 0.01}};
    if (mode == "general-gap")
        return {{"a", 0.0},
                {"b", 1.0},
                {"n_max", 8},
                {"probe_box", {-2.0, 2.0, 0.0, 2.0}},
                {"probe_nx", 10},
                {"probe_ny", 10},
                {"horizon", 8},
                {"enforce_screen", true},
                {"monotone_from", 3},
                {"tolerance", 0.02}};
    if (mode == "verify") return {{"samples", 20000}};
    throw ConfigError("unknown mode '" + mode + "'");
}

RunConfig RunConfig::from_json(const json& j) {
    reject_unknown(j,
                   {"mode", "polynomial", "policy", "grid", "quadrature_level", "seed", "output_dir", "workers",
                    "params"},
                   "config");
    RunConfig c;
    if (!j.contains("mode") || !j.at("mode").is_string()) throw ConfigError("config.mode must be a string");
    c.mode = j.at("mode").get<std::string>();
    if (std::find(modes().begin(), modes().end(), c.mode) == modes().end())
        throw ConfigError("unknown mode '" + c.mode + "'");
    if (j.contains("polynomial")) c.polynomial = io::qpolynomial_from_json(j.at("polynomial"));
    if (c.mode != "verify" && !c.polynomial) throw ConfigError("mode '" + c.mode + "' needs a polynomial");
    c.policy = parse_policy(j.value("policy", json::object()));
    c.grid = parse_grid(j.value("grid", json::object()));
    if (j.contains("quadrature_level")) c.quadrature_level = static_cast<int>(integer(j, "quadrature_level", "config", 1, 64));
    if (j.contains("seed")) {
        const json& s = j.at("seed");
        if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<long long>() < 0))
            throw ConfigError("config.seed must be a non-negative integer");
        c.seed = s.get<std::uint64_t>();
    }
    if (j.contains("output_dir")) {
        if (!j.at("output_dir").is_string() || j.at("output_dir").get<std::string>().empty())
            throw ConfigError("config.output_dir must be a non-empty string");
        c.output_dir = j.at("output_dir").get<std::string>();
    }
    if (j.contains("workers")) c.workers = static_cast<int>(integer(j, "workers", "config", 0, 4096));
    c.params = merge_params(c.mode, j.value("params", json()));
    validate_mode(c);
    return c;
}

json RunConfig::to_json() const {
    return {{"mode", mode},
            {"polynomial", polynomial ? io::to_json(*polynomial) : json()},
            {"policy", policy_json(policy)},
            {"grid",
             {{"alpha_min", grid.alpha_min},
              {"alpha_max", grid.alpha_max},
              {"beta_min", grid.beta_min},
              {"beta_max", grid.beta_max},
              {"resolution", grid.resolution}}},
            {"quadrature_level", quadrature_level},
            {"seed", seed},
            {"output_dir", output_dir.generic_string()},
            {"workers", workers},
            {"params", params}};
}

RunResult run(const RunConfig& config, std::ostream& log) {
    numeric_policy() = config.policy;
    set_worker_count(config.workers);
    Outputs out(config.output_dir);
    Context ctx{config, config.params, out, log};
    RunResult r;
    log << "[" << config.mode << "] " << kLibraryName << " " << kLibraryVersion << ", seed " << config.seed << "\n";
    const std::string& m = config.mode;
    if (m == "julia") r.summary = run_julia(ctx);
    else if (m == "green") r.summary = run_green(ctx);
    else if (m == "equilibrium") r.summary = run_equilibrium(ctx);
    else if (m == "delta-star") r.summary = run_delta_star(ctx);
    else if (m == "lyapunov") r.summary = run_lyapunov(ctx);
    else if (m == "entropy") r.summary = run_entropy(ctx);
    else if (m == "mixing") r.summary = run_mixing(ctx);
    else if (m == "clt") r.summary = run_clt(ctx);
    else if (m == "one-slice") r.summary = run_one_slice(ctx);
    else if (m == "general-gap") r.summary = run_general_gap(ctx);
    else r.summary = run_verify(ctx, r.exit_code);

    r.outputs = out.files();
    io::save_json(out.dir() / "manifest.json", {{"library", kLibraryName},
                                                {"version", kLibraryVersion},
                                                {"config", config.to_json()},
                                                {"outputs", r.outputs},
                                                {"adjustments", ctx.adjustments},
                                                {"summary", r.summary}});
    r.outputs.push_back("manifest.json");
    for (const auto& [k, v] : r.summary.items()) log << "  " << k << ": " << v.dump() << "\n";
    return r;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const NumericalFailure*>(&e)) return 3;
    if (dynamic_cast<const Error*>(&e)) return 2;
    if (dynamic_cast<const nlohmann::json::exception*>(&e)) return 2;
    return 3;
}

json error_json(const std::exception& e) {
    std::string kind = "InternalError";
    if (const auto* q = dynamic_cast<const Error*>(&e)) kind = q->kind();
    else if (dynamic_cast<const nlohmann::json::exception*>(&e)) kind = "ConfigError";
    return {{"error", kind}, {"message", e.what()}, {"exit_code", exit_code_for(e)}};
}

int run_guarded(const RunConfig& config, std::ostream& log, std::ostream& err) {
    try {
        return run(config, log).exit_code;
    } catch (const std::exception& e) {
        err << error_json(e).dump() << "\n";
        return exit_code_for(e);
    }
}

}  // namespace qbrolin::cli
