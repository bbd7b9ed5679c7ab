#include "qcl/topology.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace qcl {

namespace {

std::vector<int> degeneracy_blocks(const RVec& sorted_desc, double tol) {
  std::vector<int> blocks;
  const int n = static_cast<int>(sorted_desc.size());
  int start = 0;
  for (int i = 1; i <= n; ++i) {
    if (i == n || std::abs(sorted_desc(i) - sorted_desc(start)) > tol) {
      blocks.push_back(i - start);
      start = i;
    }
  }
  return blocks;
}

// block index of eigenvalue slot i given multiplicities
std::vector<int> block_of_index(const std::vector<int>& blocks) {
  std::vector<int> owner;
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (int r = 0; r < blocks[b]; ++r) owner.push_back(static_cast<int>(b));
  return owner;
}

}  // namespace

SpectrumData analyze_spectra(const ObservableSpec& spec, double degeneracy_tol) {
  spec.validate();
  HermitianEig rho = eig_hermitian(spec.rho0);
  HermitianEig theta = eig_hermitian(spec.theta);
  const int n = static_cast<int>(rho.values.size());

  SpectrumData data;
  data.rho_eigs = RVec(n);
  data.theta_eigs = RVec(n);
  data.q = Mat(n, n);
  data.r = Mat(n, n);
  for (int i = 0; i < n; ++i) {  // flip ascending -> descending
    data.rho_eigs(i) = rho.values(n - 1 - i);
    data.theta_eigs(i) = theta.values(n - 1 - i);
    data.q.col(i) = rho.vectors.col(n - 1 - i);
    data.r.col(i) = theta.vectors.col(n - 1 - i);
  }
  const double rho_tol = degeneracy_tol * std::max(1.0, data.rho_eigs.cwiseAbs().maxCoeff());
  const double theta_tol = degeneracy_tol * std::max(1.0, data.theta_eigs.cwiseAbs().maxCoeff());
  data.rho_blocks = degeneracy_blocks(data.rho_eigs, rho_tol);
  data.theta_blocks = degeneracy_blocks(data.theta_eigs, theta_tol);
  return data;
}

int manifold_dimension(const SpectrumData& spectra, const std::vector<int>& permutation) {
  const int n = spectra.dim();
  if (static_cast<int>(permutation.size()) != n)
    throw InvalidInput("manifold_dimension: bad permutation size");
  const std::vector<int> rho_owner = block_of_index(spectra.rho_blocks);
  const std::vector<int> theta_owner = block_of_index(spectra.theta_blocks);

  int dim = 0;
  for (int d : spectra.rho_blocks) dim += d * d;
  for (int e : spectra.theta_blocks) dim += e * e;

  std::map<std::pair<int, int>, int> overlap;
  for (int i = 0; i < n; ++i) overlap[{rho_owner[i], theta_owner[permutation[i]]}] += 1;
  for (const auto& [key, o] : overlap) dim -= o * o;
  return dim;
}

std::array<int, 3> observable_critical_signature(const SpectrumData& spectra,
                                                 const std::vector<int>& permutation) {
  const int n = spectra.dim();
  const double tol = 1e-12 * std::max({1.0, spectra.rho_eigs.cwiseAbs().maxCoeff(),
                                       spectra.theta_eigs.cwiseAbs().maxCoeff()});
  int plus = 0, minus = 0;
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      const double prod = (spectra.theta_eigs(permutation[j]) - spectra.theta_eigs(permutation[k])) *
                          (spectra.rho_eigs(j) - spectra.rho_eigs(k));
      if (prod > tol) minus += 2;
      else if (prod < -tol) plus += 2;
    }
  return {plus, n * n - plus - minus, minus};
}

Mat critical_representative(const SpectrumData& spectra, const std::vector<int>& permutation) {
  const int n = spectra.dim();
  Mat u = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) u += spectra.r.col(permutation[i]) * spectra.q.col(i).adjoint();
  return u;
}

std::vector<CriticalManifoldRecord> enumerate_observable_critical_manifolds(
    const ObservableSpec& spec) {
  SpectrumData spectra = analyze_spectra(spec);
  const int n = spectra.dim();
  if (n > 8)
    throw EnumerationBoundError("critical manifold enumeration is capped at N = 8 (N! growth)");

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);

  // merge key: (value bucket, sorted overlap pattern)
  const double value_scale = std::max(1.0, spectra.rho_eigs.cwiseAbs().maxCoeff() *
                                               spectra.theta_eigs.cwiseAbs().maxCoeff() * n);
  std::map<std::pair<std::int64_t, std::vector<int>>, std::size_t> merged;
  std::vector<CriticalManifoldRecord> records;

  const std::vector<int> rho_owner = block_of_index(spectra.rho_blocks);
  const std::vector<int> theta_owner = block_of_index(spectra.theta_blocks);

  do {
    double value = 0.0;
    for (int i = 0; i < n; ++i) value += spectra.rho_eigs(i) * spectra.theta_eigs(perm[i]);

    std::map<std::pair<int, int>, int> overlap;
    for (int i = 0; i < n; ++i) overlap[{rho_owner[i], theta_owner[perm[i]]}] += 1;
    std::vector<int> pattern;
    for (const auto& [key, o] : overlap) pattern.push_back(o);
    std::sort(pattern.begin(), pattern.end());

    const auto bucket = static_cast<std::int64_t>(std::llround(value / (1e-12 * value_scale)));
    auto key = std::make_pair(bucket, pattern);
    auto it = merged.find(key);
    if (it != merged.end()) {
      records[it->second].multiplicity += 1;
      continue;
    }
    CriticalManifoldRecord rec;
    rec.permutation = perm;
    rec.value = value;
    rec.dimension = manifold_dimension(spectra, perm);
    auto sig = observable_critical_signature(spectra, perm);
    rec.h_plus = sig[0];
    rec.h_zero = sig[1];
    rec.h_minus = sig[2];
    rec.representative = critical_representative(spectra, perm);
    merged.emplace(std::move(key), records.size());
    records.push_back(std::move(rec));
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.value > b.value; });
  return records;
}

std::vector<GateCriticalClass> gate_critical_classes(int n) {
  if (n < 1) throw InvalidInput("gate_critical_classes: N must be >= 1");
  std::vector<GateCriticalClass> classes;
  classes.reserve(n + 1);
  for (int m = n; m >= 0; --m) {
    GateCriticalClass c;
    c.m = m;
    c.value = 4.0 * (n - m);
    c.h_plus = m * m;
    c.h_minus = (n - m) * (n - m);
    c.h_zero = n * n - c.h_plus - c.h_minus;
    classes.push_back(c);
  }
  return classes;
}

std::uint64_t count_critical_values(int n, CriticalCountCase c) {
  switch (c) {
    case CriticalCountCase::nondegenerate: {
      if (n > 12) throw EnumerationBoundError("factorial count capped at N = 12");
      std::uint64_t f = 1;
      for (int i = 2; i <= n; ++i) f *= static_cast<std::uint64_t>(i);
      return f;
    }
    case CriticalCountCase::projector_pair:
      return 2;
    case CriticalCountCase::gate:
      return static_cast<std::uint64_t>(n) + 1;
  }
  throw InvalidInput("count_critical_values: unknown case");
}

}  // namespace qcl
