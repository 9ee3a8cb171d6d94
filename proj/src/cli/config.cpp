#include "carnot/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>

namespace carnot::cli {

namespace {

using nlohmann::json;

double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
  return v;
}

int integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) throw ConfigError(field, "expected an integer");
  return j.get<int>();
}

Vec vector_of(const json& j, const std::string& field, std::optional<int> length = {}) {
  if (!j.is_array()) throw ConfigError(field, "expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = number(j[i], field + "[" + std::to_string(i) + "]");
  }
  if (length && v.size() != *length) {
    throw ConfigError(field, "expected " + std::to_string(*length) + " entries, got " +
                                 std::to_string(v.size()));
  }
  return v;
}

Mat matrix_of(const json& j, int k, const std::string& field) {
  if (!j.is_array()) throw ConfigError(field, "expected a row-major array");
  Mat a(k, k);
  if (!j.empty() && j[0].is_array()) {
    if (j.size() != static_cast<std::size_t>(k)) {
      throw ConfigError(field, "expected " + std::to_string(k) + " rows");
    }
    for (int r = 0; r < k; ++r) {
      a.row(r) = vector_of(j[r], field + "[" + std::to_string(r) + "]", k).transpose();
    }
    return a;
  }
  const Vec flat = vector_of(j, field, k * k);
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) a(r, c) = flat[r * k + c];
  }
  return a;
}

ControlBody body_of(const json& j, int k) {
  if (!j.is_object()) throw ConfigError("body", "expected an object");
  if (!j.contains("type") || !j["type"].is_string()) {
    throw ConfigError("body.type", "missing or not a string");
  }
  const std::string type = j["type"].get<std::string>();
  if (type == "ellipsoid") {
    if (!j.contains("A")) throw ConfigError("body.A", "missing");
    return ControlBody::ellipsoid(matrix_of(j["A"], k, "body.A"));
  }
  if (type == "lp_ball") {
    if (!j.contains("p")) throw ConfigError("body.p", "missing");
    const double p = number(j["p"], "body.p");
    const double r = j.contains("r") ? number(j["r"], "body.r") : 1.0;
    return ControlBody::lp_ball(k, p, r);
  }
  if (type == "translated_ellipsoid") {
    if (!j.contains("A")) throw ConfigError("body.A", "missing");
    if (!j.contains("c")) throw ConfigError("body.c", "missing");
    return ControlBody::translated_ellipsoid(matrix_of(j["A"], k, "body.A"),
                                             vector_of(j["c"], "body.c", k));
  }
  throw ConfigError("body.type", "unknown body type '" + type +
                                     "' (expected ellipsoid, lp_ball or translated_ellipsoid)");
}

SkewMatrix skew_of(const json& j, int k) {
  if (!j.is_object()) throw ConfigError("M", "expected an object mapping \"i,j\" to numbers");
  static const std::regex key_re(R"(\s*(\d+)\s*,\s*(\d+)\s*)");
  std::map<std::pair<int, int>, double> entries;
  for (const auto& [key, value] : j.items()) {
    const std::string field = "M.\"" + key + "\"";
    std::smatch match;
    if (!std::regex_match(key, match, key_re)) throw ConfigError(field, "key must look like \"i,j\"");
    const int i = std::stoi(match[1]);
    const int jj = std::stoi(match[2]);
    if (i < 1 || jj > k || i >= jj) {
      throw ConfigError(field, "indices must satisfy 1 <= i < j <= " + std::to_string(k));
    }
    if (!entries.emplace(std::make_pair(i, jj), number(value, field)).second) {
      throw ConfigError(field, "duplicate entry");
    }
  }
  return SkewMatrix::from_pairs(k, entries);
}

void tolerances_of(const json& j, Tolerances& t) {
  if (!j.is_object()) throw ConfigError("tolerances", "expected an object");
  const std::map<std::string, double*> fields = {
      {"rtol", &t.rtol},
      {"atol", &t.atol},
      {"max_drift", &t.max_drift},
      {"kernel_tau", &t.kernel_tau},
      {"parallel_tol", &t.parallel_tol},
      {"capture_radius", &t.capture_radius},
      {"event_tol", &t.event_tol},
      {"max_return_residual", &t.max_return_residual},
      {"t_max", &t.t_max},
      {"gradcheck_tol", &t.gradcheck_tol},
      {"fd_step", &t.fd_step},
  };
  for (const auto& [key, value] : j.items()) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError("tolerances." + key, "unknown tolerance");
    const double v = number(value, "tolerances." + key);
    if (v < 0.0 || (key != "t_max" && v == 0.0)) {
      throw ConfigError("tolerances." + key, "must be positive");
    }
    *it->second = v;
  }
}

}  // namespace

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("<root>", "expected a JSON object");
  static const std::vector<std::string> known = {
      "k",    "body",    "M",    "h0",    "sweep", "horizon", "samples", "seed",
      "gradcheck_points", "project_to_level", "threads", "tolerances"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(key, "unknown field");
    }
  }

  RunConfig cfg;
  if (!doc.contains("k")) throw ConfigError("k", "missing");
  cfg.k = integer(doc["k"], "k");
  if (cfg.k < 2) throw ConfigError("k", "need at least 2 generators");
  if (cfg.k > 64) throw ConfigError("k", "more than 64 generators is not supported");

  if (doc.contains("body")) cfg.body = body_of(doc["body"], cfg.k);
  cfg.m = doc.contains("M") ? skew_of(doc["M"], cfg.k) : SkewMatrix::zero(cfg.k);
  if (doc.contains("h0")) cfg.h0 = vector_of(doc["h0"], "h0", cfg.k);
  if (doc.contains("sweep")) {
    const json& s = doc["sweep"];
    if (!s.is_array()) throw ConfigError("sweep", "expected an array of covectors");
    for (std::size_t i = 0; i < s.size(); ++i) {
      cfg.sweep.push_back(vector_of(s[i], "sweep[" + std::to_string(i) + "]", cfg.k));
    }
  }
  if (doc.contains("horizon")) {
    cfg.horizon = number(doc["horizon"], "horizon");
    if (!(*cfg.horizon > 0.0)) throw ConfigError("horizon", "must be positive");
  }
  if (doc.contains("samples")) {
    cfg.samples = integer(doc["samples"], "samples");
    if (cfg.samples < 1) throw ConfigError("samples", "must be at least 1");
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("gradcheck_points")) {
    cfg.gradcheck_points = integer(doc["gradcheck_points"], "gradcheck_points");
    if (cfg.gradcheck_points < 1) throw ConfigError("gradcheck_points", "must be at least 1");
  }
  if (doc.contains("project_to_level")) {
    if (!doc["project_to_level"].is_boolean()) throw ConfigError("project_to_level", "expected a boolean");
    cfg.project_to_level = doc["project_to_level"].get<bool>();
  }
  if (doc.contains("threads")) {
    cfg.threads = integer(doc["threads"], "threads");
    if (cfg.threads < 0) throw ConfigError("threads", "must be non-negative");
  }
  if (doc.contains("tolerances")) tolerances_of(doc["tolerances"], cfg.tolerances);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

}  // namespace carnot::cli
