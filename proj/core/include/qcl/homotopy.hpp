#pragma once

#include <functional>

#include "qcl/objectives.hpp"

namespace qcl {

enum class HomotopyMode { level_set, morph, track };

enum class HomotopyStatus { ok, gamma_abort, step_floor_abort, divergence, infeasible_track };

enum class FreeFunctionKind { zero, fluence_min, fluence_max, random_null };

struct FreeFunctionSpec {
  FreeFunctionKind kind = FreeFunctionKind::zero;
  double rate = 1.0;       // decay/growth rate for the fluence kinds
  int modes = 4;           // Fourier modes for random_null
  double amplitude = 1.0;  // amplitude for random_null
  std::uint64_t seed = 0;
};

// Provider of the free function f(s, t); fluence kinds read the current
// field, random_null is a fixed seeded band-limited profile with exactly
// zero grid mean per channel.
using FreeFunction = std::function<RMat(double s, const ControlField& field)>;

FreeFunction make_free_function(const FreeFunctionSpec& spec);

struct HomotopyProblem {
  std::function<ControlSystem(double)> system_path;  // s in [0, 1]
  Mat rho0;
  Mat theta;
  HomotopyMode mode = HomotopyMode::level_set;
  FreeFunctionSpec free_fn;
  int s_steps = 100;
  std::function<double(double)> track;  // target P(s) when mode == track
  double tolerance = 1e-4;              // observable drift budget
  bool projection = true;               // Newton correction along a0 after each step
  bool adaptive = true;                 // halve ds on drift violations
  double ds_floor = 1e-8;
  double path_derivative_step = 1e-5;   // central-difference step along the system path
  int hessian_trace_stride = 0;         // 0 = off; record trace every this many nodes
};

// The scalar homotopy coefficients at (s, field): db<Theta>/ds =
// int (a0 deps/ds + a1 eps + a2) dt, all evaluated exactly against the
// discrete propagation map.
struct MorphCoefficients {
  RMat a0;   // K x m, = d<Theta>/deps
  RMat a1;   // K x m, response to d(mu)/ds
  RVec a2;   // K, response to d(h0)/ds
  double b;  // -int (a1 eps + a2) dt
};

MorphCoefficients morph_coefficients(const HomotopyProblem& problem, double s,
                                     const ControlField& field, const Trajectory& traj);

struct DmorphStepResult {
  ControlField field;
  HomotopyStatus status = HomotopyStatus::ok;
  double gamma = 0.0;
  double big_gamma = 0.0;
};

// Single explicit Euler step of size ds; dp_ds carries the imposed track
// derivative (zero on a level set).
DmorphStepResult dmorph_step(const HomotopyProblem& problem, double s, const ControlField& field,
                             double ds, double dp_ds);

struct HomotopyTrajectory {
  RVec s;
  std::vector<RMat> fields;
  RVec observable;
  RVec fluence;
  RVec drift;           // |<Theta>(s_j) - target(s_j)|
  RVec hessian_trace;   // sampled when requested, NaN elsewhere
  HomotopyStatus status = HomotopyStatus::ok;
  double fail_s = -1.0;
  ControlField final_field;
};

HomotopyTrajectory explore_level_set(const HomotopyProblem& problem, const ControlField& field0);
HomotopyTrajectory morph_hamiltonian(const HomotopyProblem& problem, const ControlField& field0);
HomotopyTrajectory track_observable(const HomotopyProblem& problem, const ControlField& field0);

}  // namespace qcl
