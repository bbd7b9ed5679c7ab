#pragma once

#include <optional>
#include <string>

#include "qcl/homotopy.hpp"
#include "qcl/objectives.hpp"

namespace qcl {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FieldConfig {
  enum class Kind { constant, random, values };
  Kind kind = Kind::constant;
  int steps = 64;
  RVec amplitudes;               // constant: one per channel
  int bandwidth = 4;             // random: Fourier modes
  double scale = 1.0;            // random: amplitude scale
  RMat values;                   // explicit K x m samples
  std::optional<RVec> shape;
};

struct ObjectiveConfig {
  bool gate = false;
  Mat rho0, theta;  // observable form
  Mat w;            // gate form
};

struct FlowConfig {
  bool gate = false;
  double s_max = 5.0;
  int steps = 100;
  std::optional<Mat> u0;
};

struct OptimizeConfig {
  int max_steps = 2000;
  double grad_tol = 1e-6;
  double step0 = 0.2;
  std::optional<double> stop_at_value;
};

struct MorphTargetConfig {
  Mat h0;
  std::vector<Mat> dipoles;
};

struct TrackCurveConfig {
  std::string kind = "constant";  // constant | sin
  double amplitude = 0.0;
};

struct DmorphConfig {
  std::string mode = "level_set";  // level_set | morph | track
  int s_steps = 100;
  double tolerance = 1e-4;
  FreeFunctionSpec free_fn;
  TrackCurveConfig track;
  std::optional<MorphTargetConfig> morph_target;
  int hessian_trace_stride = 0;
};

struct TrackConfig {
  std::string kind = "geodesic";
  Mat w;
  int s_steps = 150;
  double tolerance = 1e-3;
  double ridge = 0.0;
  double condition_cap = 1e8;
};

struct RankConfig {
  int depth_cap = 16;
};

struct OracleConfig {
  std::string kind = "three_level";  // three_level | trilinear
  double t_final = 1.0;
  double theta = 2.0 * M_PI;
  double j_coupling = 1.0;
};

struct OpenConfig {
  Mat rho_env;
  int starts = 30;
  double flow_s_max = 20.0;
  int flow_steps = 400;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string output;

  std::optional<ControlSystem> system;
  std::optional<FieldConfig> field;
  std::optional<ObjectiveConfig> objective;
  std::optional<PenaltySpec> penalty;

  std::optional<FlowConfig> flow;
  std::optional<OptimizeConfig> optimize;
  std::optional<DmorphConfig> dmorph;
  std::optional<TrackConfig> track;
  std::optional<RankConfig> rank;
  std::optional<OracleConfig> oracle;
  std::optional<OpenConfig> open;
};

// Strict parser: unknown keys are rejected with a path diagnostic, complex
// entries are written as [re, im] pairs.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& config);

// Builds the concrete field from its config (seeded for the random kind).
ControlField realize_field(const FieldConfig& cfg, double horizon, int channels,
                           std::uint64_t seed);

// FNV-1a hash of the raw config bytes, for output manifests.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace qcl
