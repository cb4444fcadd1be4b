#include "sysid/report_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <system_error>

namespace sysid {

Json matrix_to_json(const Matrix& m) {
  Json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  j["data"] = std::move(data);
  return j;
}

Matrix matrix_from_json(const Json& j, std::string_view name) {
  const std::string n(name);
  if (!j.is_object()) throw InputError(n + ": matrix file must be a JSON object");
  for (const char* key : {"rows", "cols", "data"}) {
    if (!j.contains(key)) throw InputError(n + ": missing field '" + key + "'");
  }
  if (!j["rows"].is_number_integer() || j["rows"].get<std::int64_t>() < 1) {
    throw InputError(n + ": field 'rows' must be a positive integer");
  }
  if (!j["cols"].is_number_integer() || j["cols"].get<std::int64_t>() < 1) {
    throw InputError(n + ": field 'cols' must be a positive integer");
  }
  if (!j["data"].is_array()) throw InputError(n + ": field 'data' must be an array");
  const auto rows = j["rows"].get<std::int64_t>();
  const auto cols = j["cols"].get<std::int64_t>();
  const auto& data = j["data"];
  if (static_cast<std::int64_t>(data.size()) != rows * cols) {
    throw InputError(n + ": field 'data' must hold rows*cols = " + std::to_string(rows * cols) +
                     " entries, found " + std::to_string(data.size()));
  }
  Matrix m(rows, cols);
  for (std::int64_t k = 0; k < rows * cols; ++k) {
    const auto& v = data[static_cast<std::size_t>(k)];
    if (!v.is_number()) throw InputError(n + ": field 'data' holds a non-numeric entry");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw InputError(n + ": field 'data' holds NaN or Inf");
    m(k / cols, k % cols) = x;
  }
  return m;
}

Matrix load_matrix_file(const std::string& path, std::string_view name) {
  std::ifstream in(path);
  if (!in) throw InputError(std::string(name) + ": cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string(name) + ": malformed JSON in '" + path + "': " + e.what());
  }
  return matrix_from_json(j, name);
}

void save_matrix_file(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << matrix_to_json(m).dump(2) << '\n';
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, std::string_view field) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw InputError(std::string(field) + ": '" + std::string(s) + "' is not a finite number");
  }
  return v;
}

std::int64_t parse_int(std::string_view s, std::string_view field) {
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InputError(std::string(field) + ": '" + std::string(s) + "' is not an integer");
  }
  return v;
}

Json to_json(const BoundReport& r) {
  Json j;
  j["method"] = std::string(to_string(r.method));
  j["tau"] = r.tau;
  j["threshold"] = r.threshold;
  j["trivial"] = r.trivial;
  j["norm"] = r.norm;
  Json curve = Json::array();
  for (const auto& p : r.curve) curve.push_back(Json::array({p.t, p.value}));
  j["curve"] = std::move(curve);
  return j;
}

namespace {

Json curve_json(const std::vector<SuccessPoint>& curve) {
  Json out = Json::array();
  for (const auto& p : curve) out.push_back(Json::array({p.t, p.fraction}));
  return out;
}

}  // namespace

Json to_json(const EmpiricalComplexity& e) {
  Json j;
  j["tau_hat"] = e.tau_hat;
  j["trials"] = e.trials;
  j["seed"] = e.seed;
  j["success_curve"] = curve_json(e.success_curve);
  return j;
}

Json to_json(const TightnessReport& r) {
  Json j;
  j["eps"] = r.eps;
  j["delta"] = r.delta;
  j["trials"] = r.trials;
  j["seed"] = r.seed;
  j["tmax"] = r.Tmax;
  j["prng"] = r.prng;
  j["tau_gramian"] = r.tau_gramian;
  j["tau_spectral"] = r.tau_spectral;
  j["tau_hat"] = r.tau_hat;
  j["ratio"] = r.ratio;
  j["success_curve"] = curve_json(r.success_curve);
  return j;
}

TightnessReport tightness_from_json(const Json& j) {
  try {
    TightnessReport r;
    r.eps = j.at("eps").get<double>();
    r.delta = j.at("delta").get<double>();
    r.trials = j.at("trials").get<std::int64_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.Tmax = j.at("tmax").get<std::int64_t>();
    r.prng = j.at("prng").get<std::string>();
    r.tau_gramian = j.at("tau_gramian").get<std::int64_t>();
    r.tau_spectral = j.at("tau_spectral").get<std::int64_t>();
    r.tau_hat = j.at("tau_hat").get<std::int64_t>();
    r.ratio = j.at("ratio").get<double>();
    for (const auto& p : j.at("success_curve")) {
      r.success_curve.push_back({p.at(0).get<std::int64_t>(), p.at(1).get<double>()});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed tightness report: ") + e.what());
  }
}

Json to_json(const InputDesign& d) {
  Json j;
  j["ustar"] = d.ustar;
  j["taustar"] = d.taustar;
  j["monotone"] = d.monotone;
  j["flat"] = d.flat;
  Json scan = Json::array();
  for (const auto& [u, tau] : d.scan) {
    scan.push_back(Json::array({u, tau >= 0 ? Json(tau) : Json(nullptr)}));
  }
  j["scan"] = std::move(scan);
  return j;
}

}  // namespace sysid
