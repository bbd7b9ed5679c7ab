#include "qcl/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace qcl {

using json = nlohmann::ordered_json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw ConfigError(path + ": unknown field '" + item.key() + "'");
}

const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path + ": missing field '" + key + "'");
  return j.at(key);
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j)
      row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path + ": expected a nonempty matrix");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j.at(0).size());
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const json& row = j.at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      throw ConfigError(path + ": ragged matrix rows");
    for (int c = 0; c < cols; ++c) {
      const json& entry = row.at(c);
      if (!entry.is_array() || entry.size() != 2)
        throw ConfigError(path + ": complex entries must be [re, im] pairs");
      m(i, c) = cxd(entry.at(0).get<double>(), entry.at(1).get<double>());
    }
  }
  return m;
}

json rvec_to_json(const RVec& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

RVec rvec_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array");
  RVec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = j.at(i).get<double>();
  return v;
}

json rmat_to_json(const RMat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

RMat rmat_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path + ": expected a nonempty real matrix");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j.at(0).size());
  RMat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j.at(i).size()) != cols) throw ConfigError(path + ": ragged rows");
    for (int c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  }
  return m;
}

ControlSystem system_from_json(const json& j, const std::string& path) {
  check_keys(j, {"h0", "dipoles", "horizon"}, path);
  ControlSystem sys;
  sys.h0 = mat_from_json(require(j, "h0", path), path + ".h0");
  sys.dim = static_cast<int>(sys.h0.rows());
  const json& dips = require(j, "dipoles", path);
  if (!dips.is_array() || dips.empty()) throw ConfigError(path + ".dipoles: expected a nonempty array");
  for (std::size_t c = 0; c < dips.size(); ++c)
    sys.dipoles.push_back(mat_from_json(dips.at(c), path + ".dipoles[" + std::to_string(c) + "]"));
  sys.horizon = require(j, "horizon", path).get<double>();
  sys.validate();
  return sys;
}

json system_to_json(const ControlSystem& sys) {
  json j;
  j["h0"] = mat_to_json(sys.h0);
  json dips = json::array();
  for (const Mat& mu : sys.dipoles) dips.push_back(mat_to_json(mu));
  j["dipoles"] = std::move(dips);
  j["horizon"] = sys.horizon;
  return j;
}

FieldConfig field_from_json(const json& j, const std::string& path) {
  check_keys(j, {"kind", "steps", "amplitudes", "bandwidth", "scale", "values", "shape"}, path);
  FieldConfig f;
  const std::string kind = require(j, "kind", path).get<std::string>();
  if (kind == "constant") f.kind = FieldConfig::Kind::constant;
  else if (kind == "random") f.kind = FieldConfig::Kind::random;
  else if (kind == "values") f.kind = FieldConfig::Kind::values;
  else throw ConfigError(path + ".kind: must be constant|random|values");
  if (j.contains("steps")) f.steps = j.at("steps").get<int>();
  if (j.contains("amplitudes")) f.amplitudes = rvec_from_json(j.at("amplitudes"), path + ".amplitudes");
  if (j.contains("bandwidth")) f.bandwidth = j.at("bandwidth").get<int>();
  if (j.contains("scale")) f.scale = j.at("scale").get<double>();
  if (j.contains("values")) f.values = rmat_from_json(j.at("values"), path + ".values");
  if (j.contains("shape")) f.shape = rvec_from_json(j.at("shape"), path + ".shape");
  return f;
}

json field_to_json(const FieldConfig& f) {
  json j;
  switch (f.kind) {
    case FieldConfig::Kind::constant:
      j["kind"] = "constant";
      j["steps"] = f.steps;
      j["amplitudes"] = rvec_to_json(f.amplitudes);
      break;
    case FieldConfig::Kind::random:
      j["kind"] = "random";
      j["steps"] = f.steps;
      j["bandwidth"] = f.bandwidth;
      j["scale"] = f.scale;
      break;
    case FieldConfig::Kind::values:
      j["kind"] = "values";
      j["steps"] = f.steps;
      j["values"] = rmat_to_json(f.values);
      break;
  }
  if (f.shape) j["shape"] = rvec_to_json(*f.shape);
  return j;
}

ObjectiveConfig objective_from_json(const json& j, const std::string& path) {
  ObjectiveConfig o;
  const std::string kind = require(j, "kind", path).get<std::string>();
  if (kind == "observable") {
    check_keys(j, {"kind", "rho0", "theta"}, path);
    o.gate = false;
    o.rho0 = mat_from_json(require(j, "rho0", path), path + ".rho0");
    o.theta = mat_from_json(require(j, "theta", path), path + ".theta");
  } else if (kind == "gate") {
    check_keys(j, {"kind", "w"}, path);
    o.gate = true;
    o.w = mat_from_json(require(j, "w", path), path + ".w");
  } else {
    throw ConfigError(path + ".kind: must be observable|gate");
  }
  return o;
}

json objective_to_json(const ObjectiveConfig& o) {
  json j;
  if (o.gate) {
    j["kind"] = "gate";
    j["w"] = mat_to_json(o.w);
  } else {
    j["kind"] = "observable";
    j["rho0"] = mat_to_json(o.rho0);
    j["theta"] = mat_to_json(o.theta);
  }
  return j;
}

FreeFunctionSpec free_fn_from_json(const json& j, const std::string& path) {
  check_keys(j, {"kind", "rate", "modes", "amplitude", "seed"}, path);
  FreeFunctionSpec f;
  const std::string kind = require(j, "kind", path).get<std::string>();
  if (kind == "zero") f.kind = FreeFunctionKind::zero;
  else if (kind == "fluence_min") f.kind = FreeFunctionKind::fluence_min;
  else if (kind == "fluence_max") f.kind = FreeFunctionKind::fluence_max;
  else if (kind == "random_null") f.kind = FreeFunctionKind::random_null;
  else throw ConfigError(path + ".kind: must be zero|fluence_min|fluence_max|random_null");
  if (j.contains("rate")) f.rate = j.at("rate").get<double>();
  if (j.contains("modes")) f.modes = j.at("modes").get<int>();
  if (j.contains("amplitude")) f.amplitude = j.at("amplitude").get<double>();
  if (j.contains("seed")) f.seed = j.at("seed").get<std::uint64_t>();
  return f;
}

json free_fn_to_json(const FreeFunctionSpec& f) {
  json j;
  switch (f.kind) {
    case FreeFunctionKind::zero: j["kind"] = "zero"; break;
    case FreeFunctionKind::fluence_min: j["kind"] = "fluence_min"; break;
    case FreeFunctionKind::fluence_max: j["kind"] = "fluence_max"; break;
    case FreeFunctionKind::random_null: j["kind"] = "random_null"; break;
  }
  j["rate"] = f.rate;
  j["modes"] = f.modes;
  j["amplitude"] = f.amplitude;
  j["seed"] = f.seed;
  return j;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  check_keys(j, {"seed", "output", "system", "field", "objective", "penalty", "flow",
                 "optimize", "dmorph", "track", "rank", "oracle", "open"},
             "config");

  RunConfig cfg;
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
  if (j.contains("system")) cfg.system = system_from_json(j.at("system"), "system");
  if (j.contains("field")) cfg.field = field_from_json(j.at("field"), "field");
  if (j.contains("objective")) cfg.objective = objective_from_json(j.at("objective"), "objective");

  if (j.contains("penalty")) {
    const json& p = j.at("penalty");
    check_keys(p, {"lambda", "shape"}, "penalty");
    PenaltySpec pen;
    if (p.contains("lambda")) pen.lambda = p.at("lambda").get<double>();
    if (p.contains("shape")) pen.shape = rvec_from_json(p.at("shape"), "penalty.shape");
    cfg.penalty = pen;
  }
  if (j.contains("flow")) {
    const json& p = j.at("flow");
    check_keys(p, {"kind", "s_max", "steps", "u0"}, "flow");
    FlowConfig f;
    const std::string kind = require(p, "kind", "flow").get<std::string>();
    if (kind == "gate") f.gate = true;
    else if (kind == "observable") f.gate = false;
    else throw ConfigError("flow.kind: must be observable|gate");
    if (p.contains("s_max")) f.s_max = p.at("s_max").get<double>();
    if (p.contains("steps")) f.steps = p.at("steps").get<int>();
    if (p.contains("u0")) f.u0 = mat_from_json(p.at("u0"), "flow.u0");
    cfg.flow = f;
  }
  if (j.contains("optimize")) {
    const json& p = j.at("optimize");
    check_keys(p, {"max_steps", "grad_tol", "step0", "stop_at_value"}, "optimize");
    OptimizeConfig o;
    if (p.contains("max_steps")) o.max_steps = p.at("max_steps").get<int>();
    if (p.contains("grad_tol")) o.grad_tol = p.at("grad_tol").get<double>();
    if (p.contains("step0")) o.step0 = p.at("step0").get<double>();
    if (p.contains("stop_at_value")) o.stop_at_value = p.at("stop_at_value").get<double>();
    cfg.optimize = o;
  }
  if (j.contains("dmorph")) {
    const json& p = j.at("dmorph");
    check_keys(p, {"mode", "s_steps", "tolerance", "free_function", "track", "morph_target",
                   "hessian_trace_stride"},
               "dmorph");
    DmorphConfig d;
    d.mode = require(p, "mode", "dmorph").get<std::string>();
    if (d.mode != "level_set" && d.mode != "morph" && d.mode != "track")
      throw ConfigError("dmorph.mode: must be level_set|morph|track");
    if (p.contains("s_steps")) d.s_steps = p.at("s_steps").get<int>();
    if (p.contains("tolerance")) d.tolerance = p.at("tolerance").get<double>();
    if (p.contains("free_function")) d.free_fn = free_fn_from_json(p.at("free_function"), "dmorph.free_function");
    if (p.contains("track")) {
      const json& t = p.at("track");
      check_keys(t, {"kind", "amplitude"}, "dmorph.track");
      d.track.kind = require(t, "kind", "dmorph.track").get<std::string>();
      if (d.track.kind != "constant" && d.track.kind != "sin")
        throw ConfigError("dmorph.track.kind: must be constant|sin");
      if (t.contains("amplitude")) d.track.amplitude = t.at("amplitude").get<double>();
    }
    if (p.contains("morph_target")) {
      const json& t = p.at("morph_target");
      check_keys(t, {"h0", "dipoles"}, "dmorph.morph_target");
      MorphTargetConfig m;
      m.h0 = mat_from_json(require(t, "h0", "dmorph.morph_target"), "dmorph.morph_target.h0");
      const json& dips = require(t, "dipoles", "dmorph.morph_target");
      for (std::size_t c = 0; c < dips.size(); ++c)
        m.dipoles.push_back(mat_from_json(dips.at(c), "dmorph.morph_target.dipoles"));
      d.morph_target = std::move(m);
    }
    if (p.contains("hessian_trace_stride"))
      d.hessian_trace_stride = p.at("hessian_trace_stride").get<int>();
    cfg.dmorph = d;
  }
  if (j.contains("track")) {
    const json& p = j.at("track");
    check_keys(p, {"kind", "w", "s_steps", "tolerance", "ridge", "condition_cap"}, "track");
    TrackConfig t;
    t.kind = require(p, "kind", "track").get<std::string>();
    if (t.kind != "geodesic") throw ConfigError("track.kind: only geodesic is configurable");
    t.w = mat_from_json(require(p, "w", "track"), "track.w");
    if (p.contains("s_steps")) t.s_steps = p.at("s_steps").get<int>();
    if (p.contains("tolerance")) t.tolerance = p.at("tolerance").get<double>();
    if (p.contains("ridge")) t.ridge = p.at("ridge").get<double>();
    if (p.contains("condition_cap")) t.condition_cap = p.at("condition_cap").get<double>();
    cfg.track = t;
  }
  if (j.contains("rank")) {
    const json& p = j.at("rank");
    check_keys(p, {"depth_cap"}, "rank");
    RankConfig r;
    if (p.contains("depth_cap")) r.depth_cap = p.at("depth_cap").get<int>();
    cfg.rank = r;
  }
  if (j.contains("oracle")) {
    const json& p = j.at("oracle");
    check_keys(p, {"kind", "t_final", "theta", "j_coupling"}, "oracle");
    OracleConfig o;
    o.kind = require(p, "kind", "oracle").get<std::string>();
    if (o.kind != "three_level" && o.kind != "trilinear")
      throw ConfigError("oracle.kind: must be three_level|trilinear");
    if (p.contains("t_final")) o.t_final = p.at("t_final").get<double>();
    if (p.contains("theta")) o.theta = p.at("theta").get<double>();
    if (p.contains("j_coupling")) o.j_coupling = p.at("j_coupling").get<double>();
    cfg.oracle = o;
  }
  if (j.contains("open")) {
    const json& p = j.at("open");
    check_keys(p, {"rho_env", "starts", "flow_s_max", "flow_steps"}, "open");
    OpenConfig o;
    o.rho_env = mat_from_json(require(p, "rho_env", "open"), "open.rho_env");
    if (p.contains("starts")) o.starts = p.at("starts").get<int>();
    if (p.contains("flow_s_max")) o.flow_s_max = p.at("flow_s_max").get<double>();
    if (p.contains("flow_steps")) o.flow_steps = p.at("flow_steps").get<int>();
    cfg.open = o;
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  if (!cfg.output.empty()) j["output"] = cfg.output;
  if (cfg.system) j["system"] = system_to_json(*cfg.system);
  if (cfg.field) j["field"] = field_to_json(*cfg.field);
  if (cfg.objective) j["objective"] = objective_to_json(*cfg.objective);
  if (cfg.penalty) {
    json p;
    p["lambda"] = cfg.penalty->lambda;
    if (cfg.penalty->shape) p["shape"] = rvec_to_json(*cfg.penalty->shape);
    j["penalty"] = std::move(p);
  }
  if (cfg.flow) {
    json p;
    p["kind"] = cfg.flow->gate ? "gate" : "observable";
    p["s_max"] = cfg.flow->s_max;
    p["steps"] = cfg.flow->steps;
    if (cfg.flow->u0) p["u0"] = mat_to_json(*cfg.flow->u0);
    j["flow"] = std::move(p);
  }
  if (cfg.optimize) {
    json p;
    p["max_steps"] = cfg.optimize->max_steps;
    p["grad_tol"] = cfg.optimize->grad_tol;
    p["step0"] = cfg.optimize->step0;
    if (cfg.optimize->stop_at_value) p["stop_at_value"] = *cfg.optimize->stop_at_value;
    j["optimize"] = std::move(p);
  }
  if (cfg.dmorph) {
    json p;
    p["mode"] = cfg.dmorph->mode;
    p["s_steps"] = cfg.dmorph->s_steps;
    p["tolerance"] = cfg.dmorph->tolerance;
    p["free_function"] = free_fn_to_json(cfg.dmorph->free_fn);
    json t;
    t["kind"] = cfg.dmorph->track.kind;
    t["amplitude"] = cfg.dmorph->track.amplitude;
    p["track"] = std::move(t);
    if (cfg.dmorph->morph_target) {
      json m;
      m["h0"] = mat_to_json(cfg.dmorph->morph_target->h0);
      json dips = json::array();
      for (const Mat& mu : cfg.dmorph->morph_target->dipoles) dips.push_back(mat_to_json(mu));
      m["dipoles"] = std::move(dips);
      p["morph_target"] = std::move(m);
    }
    p["hessian_trace_stride"] = cfg.dmorph->hessian_trace_stride;
    j["dmorph"] = std::move(p);
  }
  if (cfg.track) {
    json p;
    p["kind"] = cfg.track->kind;
    p["w"] = mat_to_json(cfg.track->w);
    p["s_steps"] = cfg.track->s_steps;
    p["tolerance"] = cfg.track->tolerance;
    p["ridge"] = cfg.track->ridge;
    p["condition_cap"] = cfg.track->condition_cap;
    j["track"] = std::move(p);
  }
  if (cfg.rank) {
    json p;
    p["depth_cap"] = cfg.rank->depth_cap;
    j["rank"] = std::move(p);
  }
  if (cfg.oracle) {
    json p;
    p["kind"] = cfg.oracle->kind;
    p["t_final"] = cfg.oracle->t_final;
    p["theta"] = cfg.oracle->theta;
    p["j_coupling"] = cfg.oracle->j_coupling;
    j["oracle"] = std::move(p);
  }
  if (cfg.open) {
    json p;
    p["rho_env"] = mat_to_json(cfg.open->rho_env);
    p["starts"] = cfg.open->starts;
    p["flow_s_max"] = cfg.open->flow_s_max;
    p["flow_steps"] = cfg.open->flow_steps;
    j["open"] = std::move(p);
  }
  return j.dump(2);
}

ControlField realize_field(const FieldConfig& cfg, double horizon, int channels,
                           std::uint64_t seed) {
  ControlField field;
  switch (cfg.kind) {
    case FieldConfig::Kind::constant: {
      RVec amps = cfg.amplitudes.size() == channels ? cfg.amplitudes : RVec::Zero(channels);
      if (cfg.amplitudes.size() != 0 && cfg.amplitudes.size() != channels)
        throw ConfigError("field.amplitudes: channel count mismatch");
      field = ControlField::constant(horizon, cfg.steps, amps);
      break;
    }
    case FieldConfig::Kind::random: {
      RandomStream rng = RandomStream(seed).fork("field/random");
      RMat a(cfg.bandwidth, channels), b(cfg.bandwidth, channels);
      for (int m = 0; m < cfg.bandwidth; ++m)
        for (int c = 0; c < channels; ++c) {
          a(m, c) = rng.normal();
          b(m, c) = rng.normal();
        }
      field = ControlField::sampled(
          horizon, cfg.steps,
          [&](double t) {
            RVec v = RVec::Zero(channels);
            for (int m = 0; m < cfg.bandwidth; ++m) {
              const double w = 2.0 * M_PI * (m + 1) * t / horizon;
              for (int c = 0; c < channels; ++c)
                v(c) += cfg.scale * (a(m, c) * std::cos(w) + b(m, c) * std::sin(w)) /
                        std::sqrt(static_cast<double>(cfg.bandwidth));
            }
            return v;
          },
          channels);
      break;
    }
    case FieldConfig::Kind::values: {
      if (cfg.values.cols() != channels) throw ConfigError("field.values: channel count mismatch");
      field.grid = RVec::LinSpaced(static_cast<int>(cfg.values.rows()) + 1, 0.0, horizon);
      field.values = cfg.values;
      break;
    }
  }
  if (cfg.shape) field.shape = cfg.shape;
  field.validate();
  return field;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : bytes) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace qcl
