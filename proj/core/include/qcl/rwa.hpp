#pragma once

#include "qcl/system.hpp"

namespace qcl {

// Rotating-frame bookkeeping for a drift-eliminated system. Each channel is
// tied to one transition (j, k) of the diagonal drift; envelope fields in
// the rotated frame map to carrier-modulated lab fields and back.
struct RotatingFrame {
  RVec energies;                              // diagonal of the original drift
  std::vector<std::pair<int, int>> channel_pairs;  // coupled transition per channel
  RVec carrier;                               // E_k - E_j per channel
  bool trivial = false;                       // drift already zero

  // exp(-i D t), the coordinate change between frames
  Mat frame_unitary(double t) const;
};

struct RwaSystem {
  ControlSystem system;  // zero drift, same dipole operators
  RotatingFrame frame;
};

// Eliminates a diagonal drift for channels whose dipole couples a single
// transition frequency: in the rotated frame H'(t) = e^{iDt} V(t) e^{-iDt}
// with the rapidly oscillating terms dropped, the envelope couples through
// the same dipole with no drift. Requires h0 diagonal (pre-diagonalize with
// diagonalize_system) and off-diagonal dipoles.
RwaSystem rwa_transform(const ControlSystem& system, double tol = 1e-10);

// Rotate a system into the eigenbasis of its drift.
ControlSystem diagonalize_system(const ControlSystem& system);

// Synthesizes the lab-frame field for an envelope field in the rotated
// frame: eps_lab(t) = 2 * env_c(t) * cos(carrier_c * t), sampled on a grid
// refined by `oversample`.
ControlField lab_field_from_envelope(const RotatingFrame& frame, const ControlField& envelope,
                                     int oversample);

}  // namespace qcl
