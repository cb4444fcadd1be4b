#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "sysid/controlled.hpp"
#include "sysid/core.hpp"
#include "sysid/sim.hpp"

namespace sysid {

using Json = nlohmann::ordered_json;

/// MatrixFile: {"rows": int, "cols": int, "data": [row-major reals]}.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, std::string_view name = "matrix");

Matrix load_matrix_file(const std::string& path, std::string_view name = "matrix");
void save_matrix_file(const std::string& path, const Matrix& m);

/// Shortest round-trip decimal form, independent of the C locale.
std::string format_double(double v);
/// Strict, locale-independent parse of a whole string; throws InputError naming `field`.
double parse_double(std::string_view s, std::string_view field);
std::int64_t parse_int(std::string_view s, std::string_view field);

Json to_json(const BoundReport& r);
Json to_json(const EmpiricalComplexity& e);
Json to_json(const TightnessReport& r);
TightnessReport tightness_from_json(const Json& j);
Json to_json(const InputDesign& d);

}  // namespace sysid
