#pragma once

#include "carnot/convex_bodies.hpp"
#include "carnot/dopri5.hpp"
#include "carnot/errors.hpp"
#include "carnot/lie_structure.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace carnot::cli {

// Raised for any malformed config; `field` names the offending JSON path.
class ConfigError : public InputError {
 public:
  ConfigError(std::string field, const std::string& message)
      : InputError("config error: " + field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Every entry may be overridden under "tolerances" in the config file.
struct Tolerances {
  double rtol = kDefaultRtol;
  double atol = kDefaultAtol;
  double max_drift = 1e-7;
  double kernel_tau = 1e-10;
  double parallel_tol = 1e-9;
  double capture_radius = 1e-4;
  double event_tol = 1e-12;
  double max_return_residual = 1e-8;
  double t_max = 0.0;  // 0: 100 · 2π / σ_max(M)
  double gradcheck_tol = 1e-6;
  double fd_step = 1e-5;
};

struct RunConfig {
  int k = 0;
  // Present when the config has a "body" object; not yet validated.
  std::optional<ControlBody> body;
  SkewMatrix m = SkewMatrix::zero(2);
  std::optional<Vec> h0;
  std::vector<Vec> sweep;
  std::optional<double> horizon;
  int samples = 1000;
  std::uint64_t seed = 42;
  int gradcheck_points = 1000;
  bool project_to_level = false;
  int threads = 0;  // 0: hardware concurrency
  Tolerances tolerances;
};

// Config document:
// {
//   "k": 3,
//   "body": {"type": "ellipsoid", "A": [1,0,0, 0,1,0, 0,0,1]}        (row-major)
//         | {"type": "lp_ball", "p": 4, "r": 1}
//         | {"type": "translated_ellipsoid", "A": [...], "c": [...]},
//   "M": {"1,2": 1.0, "2,3": -0.5},       (1-based, i < j; omitted pairs are 0)
//   "h0": [1, 0, 0],
//   "sweep": [[...], ...],
//   "horizon": 6.283185307179586, "samples": 1000,
//   "seed": 42, "gradcheck_points": 1000, "project_to_level": false, "threads": 0,
//   "tolerances": {...}
// }
// "A" may also be given as nested rows.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace carnot::cli
