#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "qbrolin/cli.hpp"
#include "qbrolin/errors.hpp"
#include "qbrolin/io.hpp"
#include "qbrolin/measures.hpp"

using namespace qbrolin;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const json kQ2 = {{"coeffs", {{0, 0, 0, 0}, {0, 0, 0, 0}, {1, 0, 0, 0}}}};
const json kQ2PlusJ = {{"coeffs", {{0, 0, 1, 0}, {0, 0, 0, 0}, {1, 0, 0, 0}}}};

fs::path scratch_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("qbrolin_test_" + name);
    fs::remove_all(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

json config(const std::string& mode, const json& poly, const fs::path& out) {
    json j = {{"mode", mode}, {"output_dir", out.string()}};
    if (!poly.is_null()) j["polynomial"] = poly;
    return j;
}

}  // namespace

TEST_CASE("config validation") {
    using cli::RunConfig;
    const auto ok = config("julia", kQ2, "unused");
    const auto c = RunConfig::from_json(ok);
    CHECK(c.params.at("max_iter") == 256);
    CHECK(c.grid.resolution == 257);

    auto bad = ok;
    bad["colour"] = 1;
    CHECK_THROWS_AS(RunConfig::from_json(bad), ConfigError);
    bad = ok;
    bad["grid"] = {{"resolution", 65}, {"spacing", 0.1}};
    CHECK_THROWS_AS(RunConfig::from_json(bad), ConfigError);
    bad = ok;
    bad["params"] = {{"max_iter", "many"}};
    CHECK_THROWS_AS(RunConfig::from_json(bad), ConfigError);
    bad = ok;
    bad["params"] = {{"depth", 3}};
    CHECK_THROWS_AS(RunConfig::from_json(bad), ConfigError);
    bad = ok;
    bad["seed"] = -1;
    CHECK_THROWS_AS(RunConfig::from_json(bad), ConfigError);
    bad = ok;
    bad["grid"] = {{"alpha_min", 1}, {"alpha_max", -1}};
    CHECK_THROWS_AS(RunConfig::from_json(bad), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(config("julia", nullptr, "x")), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(config("fractal", kQ2, "x")), ConfigError);
    // Real-coefficient modes refuse q^2 + j; the bullet route accepts it.
    CHECK_THROWS_AS(RunConfig::from_json(config("clt", kQ2PlusJ, "x")), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(config("julia", kQ2PlusJ, "x")), CoefficientOffSlice);
    CHECK_NOTHROW(RunConfig::from_json(config("general-gap", kQ2PlusJ, "x")));
    const json two_slices = {{"coeffs", {{0, 0, 1, 0}, {0, 1, 0, 0}, {1, 0, 0, 0}}}};
    CHECK_THROWS_AS(RunConfig::from_json(config("one-slice", two_slices, "x")), CoefficientOffSlice);
    // The config echo parses back to itself.
    CHECK(RunConfig::from_json(c.to_json()).to_json() == c.to_json());
}

TEST_CASE("exit codes and error JSON") {
    CHECK(cli::exit_code_for(ConfigError("x")) == 2);
    CHECK(cli::exit_code_for(NumericalFailure("x")) == 3);
    CHECK(cli::exit_code_for(std::runtime_error("x")) == 3);
    const auto e = cli::error_json(ConfigError("bad key"));
    CHECK(e.at("error") == "ConfigError");
    CHECK(e.at("message") == "bad key");
    CHECK(e.at("exit_code") == 2);

    // The fiber of 0 under q^2 collapses, so the equilibrium pullback refuses it.
    auto j = config("equilibrium", kQ2, scratch_dir("exceptional"));
    j["params"] = {{"depth", 3}, {"target", 0.0}};
    std::ostringstream log, err;
    const int code = cli::run_guarded(cli::RunConfig::from_json(j), log, err);
    CHECK(code == 2);
    const auto ej = json::parse(err.str());
    CHECK(ej.at("error") == "ExceptionalTarget");
}

TEST_CASE("julia mode for q^2 fills the unit disk") {
    const auto dir = scratch_dir("julia");
    auto j = config("julia", kQ2, dir);
    j["grid"] = {{"resolution", 65}};
    j["params"] = {{"csv", true}};
    std::ostringstream log;
    const auto r = cli::run(cli::RunConfig::from_json(j), log);
    CHECK(r.exit_code == 0);
    // Oracle: nodes with |z| < 1 are filled, |z| > 1 escape; |z| = 1 is either.
    int inside = 0, boundary = 0;
    for (int iy = 0; iy < 65; ++iy)
        for (int ix = 0; ix < 65; ++ix) {
            const double a = -2.0 + ix / 16.0, b = -2.0 + iy / 16.0;
            const double r2 = a * a + b * b;
            inside += r2 < 1.0;
            boundary += r2 == 1.0;
        }
    const auto filled = r.summary.at("filled_nodes").get<int>();
    CHECK(filled >= inside);
    CHECK(filled <= inside + boundary);

    const std::string pgm = slurp(dir / "julia.pgm");
    const std::string header = "P5\n65 65\n255\n";
    REQUIRE(pgm.size() == header.size() + 65 * 65);
    CHECK(pgm.substr(0, header.size()) == header);
    CHECK(static_cast<unsigned char>(pgm[header.size() + 32 * 65 + 32]) == 255);  // the origin
    CHECK(static_cast<unsigned char>(pgm[header.size()]) == 0);                   // a corner

    const auto side = io::load_json(dir / "julia.json");
    CHECK(side.at("resolution").at("nx") == 65);
    const auto m = io::load_json(dir / "manifest.json");
    CHECK(m.at("library") == "qbrolin");
    CHECK(m.at("config").at("params").at("max_iter") == 256);
    CHECK(m.at("outputs") == json({"julia.pgm", "julia.json", "julia.csv"}));
    CHECK(m.at("adjustments").empty());
    const std::string csv = slurp(dir / "julia.csv");
    CHECK(csv.rfind("alpha,beta,value,masked\n", 0) == 0);
}

TEST_CASE("grid snapping is recorded") {
    const auto dir = scratch_dir("snap");
    auto j = config("julia", kQ2, dir);
    j["grid"] = {{"alpha_min", -2}, {"alpha_max", 2}, {"beta_min", -1}, {"beta_max", 1.3}, {"resolution", 9}};
    std::ostringstream log;
    cli::run(cli::RunConfig::from_json(j), log);
    const auto m = io::load_json(dir / "manifest.json");
    REQUIRE(m.at("adjustments").size() == 1);
    CHECK(m.at("adjustments")[0].at("beta_max").get<double>() >= 1.3);
}

TEST_CASE("verify mode is deterministic") {
    const auto d1 = scratch_dir("verify1"), d2 = scratch_dir("verify2");
    auto j = config("verify", nullptr, d1);
    j["seed"] = 4;
    std::ostringstream log;
    const auto r1 = cli::run(cli::RunConfig::from_json(j), log);
    j["output_dir"] = d2.string();
    const auto r2 = cli::run(cli::RunConfig::from_json(j), log);
    CHECK(r1.exit_code == 0);
    CHECK(r1.summary.at("all_pass") == true);
    CHECK(r1.outputs == r2.outputs);
    for (const auto& f : {"verify.csv", "verify.json"}) CHECK(slurp(d1 / f) == slurp(d2 / f));
}

TEST_CASE("serialization round trips") {
    const Quaternion q(0.1, -2.5, 1e-300, 3.0);
    CHECK(io::quaternion_from_json(io::to_json(q)) == q);
    const QPolynomial p({Quaternion(1.0 / 3, 0, 0.5, 0), Quaternion(0.0), Quaternion(1.0)});
    const auto p2 = io::qpolynomial_from_json(io::to_json(p));
    REQUIRE(p2.coeffs().size() == p.coeffs().size());
    for (std::size_t k = 0; k < p.coeffs().size(); ++k) CHECK(p2.coeffs()[k] == p.coeffs()[k]);
    CHECK_THROWS_AS(io::qpolynomial_from_json(json{{"coeffs", {{1, 0, 0}}}}), ConfigError);
    CHECK_THROWS_AS(io::qpolynomial_from_json(json{{"coeffs", {{1, 0, 0, 0}}}, {"x", 1}}), ConfigError);

    const EmpiricalMeasure m({AtomicMass::point(0.25, 0.5), AtomicMass::sphere(-0.1, 0.7, 0.5)});
    const auto m2 = io::measure_from_json(io::to_json(m));
    REQUIRE(m2.size() == 2);
    CHECK(m2.atoms()[1].kind == AtomKind::Sphere);
    CHECK(m2.atoms()[1].rho == 0.7);
    CHECK(m2.total_mass() == 1.0);

    // 17 significant digits survive a text round trip.
    const double x = 0.1 + 0.2;
    CHECK(std::stod(io::format_number(x)) == x);
    CHECK(io::format_number(std::numeric_limits<double>::infinity()) == "inf");
    io::CsvWriter w({"a", "b"});
    w.row(std::vector<double>{x, -1.0});
    CHECK(w.str() == "a,b\n" + io::format_number(x) + ",-1\n");
    CHECK_THROWS_AS(w.row(std::vector<double>{1.0}), PreconditionViolation);

    const auto rep = io::check_report(1.005, 1.0, 0.01);
    CHECK(rep.at("pass") == true);
    CHECK(io::check_report(1.02, 1.0, 0.01).at("pass") == false);
}
