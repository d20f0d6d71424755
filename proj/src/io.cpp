#include "qbrolin/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "qbrolin/errors.hpp"

namespace qbrolin::io {

namespace {

double number_at(const json& j, std::size_t k, const std::string& where) {
    if (!j.at(k).is_number()) throw ConfigError(where + ": entry " + std::to_string(k) + " is not a number");
    return j.at(k).get<double>();
}

void expect_array(const json& j, std::size_t n, const std::string& where) {
    if (!j.is_array() || j.size() != n)
        throw ConfigError(where + ": expected an array of " + std::to_string(n) + " numbers");
}

const json& coeff_array(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("coeffs")) throw ConfigError(where + ": expected {\"coeffs\": [...]}");
    for (const auto& [k, v] : j.items())
        if (k != "coeffs") throw ConfigError(where + ": unknown key '" + k + "'");
    const json& c = j.at("coeffs");
    if (!c.is_array() || c.empty()) throw ConfigError(where + ": coeffs must be a non-empty array");
    return c;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw PreconditionViolation("cannot open " + path.string() + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw PreconditionViolation("write failed for " + path.string());
}

}  // namespace

json to_json(const Quaternion& q) { return json::array({q.w, q.x, q.y, q.z}); }
json to_json(const ImaginaryUnit& u) { return json::array({u.x(), u.y(), u.z()}); }

json to_json(const QPolynomial& p) {
    json c = json::array();
    for (const auto& q : p.coeffs()) c.push_back(to_json(q));
    return {{"coeffs", c}};
}

json to_json(const ComplexPoly& p) {
    json c = json::array();
    for (const auto& z : p.coeffs()) c.push_back(json::array({z.real(), z.imag()}));
    return {{"coeffs", c}};
}

json to_json(const EmpiricalMeasure& m) {
    json atoms = json::array();
    for (const auto& a : m.atoms())
        atoms.push_back({{"kind", a.kind == AtomKind::Point ? "point" : "sphere"},
                         {"alpha", a.alpha},
                         {"rho", a.rho},
                         {"weight", a.weight}});
    return {{"atoms", atoms}, {"meta", m.meta().is_null() ? json::object() : m.meta()}};
}

Quaternion quaternion_from_json(const json& j, const std::string& where) {
    expect_array(j, 4, where);
    return {number_at(j, 0, where), number_at(j, 1, where), number_at(j, 2, where), number_at(j, 3, where)};
}

ImaginaryUnit unit_from_json(const json& j, const std::string& where) {
    expect_array(j, 3, where);
    const double x = number_at(j, 0, where), y = number_at(j, 1, where), z = number_at(j, 2, where);
    if (!(std::hypot(x, y, z) > 0.0)) throw ConfigError(where + ": zero vector is not a unit direction");
    return ImaginaryUnit(x, y, z);
}

QPolynomial qpolynomial_from_json(const json& j, const std::string& where) {
    std::vector<Quaternion> c;
    const json& arr = coeff_array(j, where);
    for (std::size_t k = 0; k < arr.size(); ++k)
        c.push_back(quaternion_from_json(arr[k], where + ".coeffs[" + std::to_string(k) + "]"));
    for (const auto& q : c)
        if (!q.is_finite()) throw ConfigError(where + ": coefficients must be finite");
    return QPolynomial(std::move(c));
}

ComplexPoly complex_poly_from_json(const json& j, const std::string& where) {
    std::vector<cplx> c;
    const json& arr = coeff_array(j, where);
    for (std::size_t k = 0; k < arr.size(); ++k) {
        const std::string at = where + ".coeffs[" + std::to_string(k) + "]";
        expect_array(arr[k], 2, at);
        c.emplace_back(number_at(arr[k], 0, at), number_at(arr[k], 1, at));
    }
    return ComplexPoly(std::move(c));
}

EmpiricalMeasure measure_from_json(const json& j) {
    if (!j.is_object() || !j.contains("atoms") || !j.at("atoms").is_array())
        throw ConfigError("measure: expected {\"atoms\": [...]}");
    std::vector<AtomicMass> atoms;
    for (const auto& a : j.at("atoms")) {
        try {
            const std::string kind = a.at("kind").get<std::string>();
            const double alpha = a.at("alpha").get<double>(), rho = a.value("rho", 0.0),
                         w = a.at("weight").get<double>();
            if (kind == "point")
                atoms.push_back(AtomicMass::point(alpha, w));
            else if (kind == "sphere")
                atoms.push_back(AtomicMass::sphere(alpha, rho, w));
            else
                throw ConfigError("measure: unknown atom kind '" + kind + "'");
        } catch (const json::exception& e) {
            throw ConfigError(std::string("measure: malformed atom: ") + e.what());
        }
    }
    return EmpiricalMeasure(std::move(atoms), j.value("meta", json::object()));
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

json check_report(double computed, double expected, double tolerance) {
    return {{"computed", computed},
            {"expected", expected},
            {"tolerance", tolerance},
            {"pass", std::abs(computed - expected) <= tolerance}};
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    if (header.empty()) throw PreconditionViolation("CSV needs at least one column");
    row(header);
}

void CsvWriter::row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_number(v));
    row(cells);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw PreconditionViolation("CSV row width does not match the header");
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) out_ += ',';
        out_ += cells[k];
    }
    out_ += '\n';
}

void CsvWriter::save(const std::filesystem::path& path) const { write_file(path, out_); }

CsvWriter measure_csv(const EmpiricalMeasure& m) {
    CsvWriter w({"kind", "alpha", "rho", "weight"});
    for (const auto& a : m.atoms())
        w.row(std::vector<std::string>{a.kind == AtomKind::Point ? "point" : "sphere", format_number(a.alpha),
                                       format_number(a.rho), format_number(a.weight)});
    return w;
}

void save_json(const std::filesystem::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

json load_json(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string pgm_bytes(const GridField& f, double lo, double hi) {
    if (!(hi > lo)) throw PreconditionViolation("PGM range must have hi > lo");
    const int nx = f.grid.nx(), ny = f.grid.ny();
    std::string out = "P5\n" + std::to_string(nx) + " " + std::to_string(ny) + "\n255\n";
    for (int iy = ny - 1; iy >= 0; --iy)
        for (int ix = 0; ix < nx; ++ix) {
            unsigned char px = 0;
            if (!f.masked(ix, iy)) {
                const double t = std::clamp((f.at(ix, iy) - lo) / (hi - lo), 0.0, 1.0);
                px = static_cast<unsigned char>(std::lround(255.0 * t));
            }
            out.push_back(static_cast<char>(px));
        }
    return out;
}

void save_pgm(const std::filesystem::path& path, const GridField& f, double lo, double hi) {
    write_file(path, pgm_bytes(f, lo, hi));
}

json raster_sidecar(const SliceGrid& grid, const QPolynomial& p, const EscapeParams& esc) {
    return {{"bounds", {grid.alpha_min(), grid.alpha_max(), grid.beta_min(), grid.beta_max()}},
            {"resolution", {{"nx", grid.nx()}, {"ny", grid.ny()}, {"h", grid.h()}}},
            {"polynomial", to_json(p)},
            {"escape", {{"radius", esc.radius}, {"max_iter", esc.max_iter}}}};
}

CsvWriter grid_csv(const GridField& f) {
    CsvWriter w({"alpha", "beta", "value", "masked"});
    for (int iy = 0; iy < f.grid.ny(); ++iy)
        for (int ix = 0; ix < f.grid.nx(); ++ix) {
            const cplx z = f.grid.node(ix, iy);
            w.row({z.real(), z.imag(), f.at(ix, iy), f.masked(ix, iy) ? 1.0 : 0.0});
        }
    return w;
}

}  // namespace qbrolin::io
