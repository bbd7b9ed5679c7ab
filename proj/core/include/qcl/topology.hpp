#pragma once

#include "qcl/objectives.hpp"

namespace qcl {

struct EnumerationBoundError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sorted spectra, degeneracy blocks and diagonalizers of a control pair
// (rho0, theta). Eigenvalues are stored in descending order; q and r hold
// the matching eigenvector columns.
struct SpectrumData {
  RVec rho_eigs;
  RVec theta_eigs;
  std::vector<int> rho_blocks;    // multiplicities, summing to N
  std::vector<int> theta_blocks;
  Mat q;  // rho0 = q * diag(rho_eigs) * q^
  Mat r;  // theta = r * diag(theta_eigs) * r^
  int dim() const { return static_cast<int>(rho_eigs.size()); }
};

SpectrumData analyze_spectra(const ObservableSpec& spec, double degeneracy_tol = 1e-10);

// One critical class of the expectation-value landscape: the permutation
// pairing the two spectra, its value, manifold dimension on U(N) and the
// (h+, h0, h-) direction counts.
struct CriticalManifoldRecord {
  std::vector<int> permutation;
  double value = 0.0;
  int dimension = 0;
  int h_plus = 0, h_zero = 0, h_minus = 0;
  Mat representative;
  int multiplicity = 1;  // permutations merged into this record under degeneracy
};

// Kinematic critical classes of the gate-distance landscape, indexed by the
// number m of +1 eigenvalues of W^ U.
struct GateCriticalClass {
  int m = 0;
  double value = 0.0;   // 4 (N - m)
  int h_plus = 0, h_zero = 0, h_minus = 0;
};

enum class CriticalCountCase { nondegenerate, projector_pair, gate };

// Full enumeration over permutations (N <= 8), with records of equal value
// and overlap pattern merged under spectral degeneracy.
std::vector<CriticalManifoldRecord> enumerate_observable_critical_manifolds(
    const ObservableSpec& spec);

// d(M) = sum D_s^2 + sum E_t^2 - sum o_l^2 with o_l the block overlap counts
// induced by the permutation.
int manifold_dimension(const SpectrumData& spectra, const std::vector<int>& permutation);

// Direction counts from the pairwise products (theta_pi(j)-theta_pi(k)) *
// (rho_j - rho_k); returns {h_plus, h_zero, h_minus} on U(N).
std::array<int, 3> observable_critical_signature(const SpectrumData& spectra,
                                                 const std::vector<int>& permutation);

// Representative unitary r * P_pi * q^ mapping rho eigenvectors onto theta
// eigenvectors according to the permutation.
Mat critical_representative(const SpectrumData& spectra, const std::vector<int>& permutation);

std::vector<GateCriticalClass> gate_critical_classes(int n);

// N!, 2, or N+1 depending on the case (count only; no enumeration).
std::uint64_t count_critical_values(int n, CriticalCountCase c);

}  // namespace qcl
