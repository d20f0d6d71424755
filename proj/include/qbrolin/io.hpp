#pragma once

// Serialization: JSON for quaternions, polynomials, measures and reports;
// CSV with 17 significant digits; binary PGM rasters with a JSON sidecar.
// Every writer produces the same bytes for the same inputs.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "qbrolin/complex_dyn.hpp"
#include "qbrolin/grid.hpp"
#include "qbrolin/measures.hpp"
#include "qbrolin/qpolynomial.hpp"
#include "qbrolin/quaternion.hpp"

namespace qbrolin::io {

using nlohmann::json;

json to_json(const Quaternion& q);
json to_json(const ImaginaryUnit& u);
json to_json(const QPolynomial& p);
json to_json(const ComplexPoly& p);
json to_json(const EmpiricalMeasure& m);

/// The readers throw ConfigError naming `where` on malformed input.
Quaternion quaternion_from_json(const json& j, const std::string& where = "quaternion");
ImaginaryUnit unit_from_json(const json& j, const std::string& where = "unit");
QPolynomial qpolynomial_from_json(const json& j, const std::string& where = "polynomial");
ComplexPoly complex_poly_from_json(const json& j, const std::string& where = "polynomial");
EmpiricalMeasure measure_from_json(const json& j);

/// %.17g, with "nan", "inf" and "-inf" spelled out.
std::string format_number(double x);

/// {computed, expected, tolerance, pass} with pass = |computed - expected| <= tolerance.
json check_report(double computed, double expected, double tolerance);

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    void row(const std::vector<double>& values);
    /// Mixed rows: strings are written verbatim.
    void row(const std::vector<std::string>& cells);
    std::string str() const { return out_; }
    void save(const std::filesystem::path& path) const;

private:
    std::size_t columns_;
    std::string out_;
};

/// alpha, rho, weight per atom with kind in the first column.
CsvWriter measure_csv(const EmpiricalMeasure& m);

/// Writes `j` with two-space indentation and a trailing newline.
void save_json(const std::filesystem::path& path, const json& j);
json load_json(const std::filesystem::path& path);

/// Values linearly mapped from [lo, hi] to 0..255 (clamped), row 0 of the
/// image at beta_max; masked nodes are written as 0.
std::string pgm_bytes(const GridField& f, double lo, double hi);
void save_pgm(const std::filesystem::path& path, const GridField& f, double lo, double hi);

/// {bounds, resolution, polynomial, escape} sidecar for a raster.
json raster_sidecar(const SliceGrid& grid, const QPolynomial& p, const EscapeParams& esc);

/// Node values as alpha, beta, value, masked.
CsvWriter grid_csv(const GridField& f);

}  // namespace qbrolin::io
