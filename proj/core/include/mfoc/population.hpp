#pragma once

#include "mfoc/model.hpp"
#include "mfoc/types.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace mfoc {

struct Atom {
  Vector x;
  Vector y;
  double w = 1.0;
};

/// Compares (x, y, w) lexicographically; the canonical atom order used by
/// every deterministic reduction over finite-support measures.
bool atom_less(const Atom& a, const Atom& b);

/// Finite-support input-target distribution. Construction validates the
/// weights (nonnegative, summing to 1 within 1e-12, then renormalized
/// exactly), checks the support bound, and sorts the atoms into canonical
/// lexicographic order so that downstream sums are permutation-invariant.
class PopulationSpec {
 public:
  PopulationSpec(std::vector<Atom> atoms, double support_bound);

  std::span<const Atom> atoms() const { return atoms_; }
  double support_bound() const { return bound_; }
  int state_dim() const { return static_cast<int>(atoms_.front().x.size()); }
  int target_dim() const { return static_cast<int>(atoms_.front().y.size()); }

 private:
  std::vector<Atom> atoms_;
  double bound_;
};

/// N i.i.d. points with uniform weights 1/N.
struct EmpiricalMeasure {
  std::vector<std::pair<Vector, Vector>> points;  // (x, y)
  int size() const { return static_cast<int>(points.size()); }
};

/// i.i.d. categorical draws over the atoms. Draw i inverts the atom-order CDF
/// at a counter-based uniform keyed by (seed, i), so identical
/// (spec, n, seed) give bit-identical output everywhere.
EmpiricalMeasure draw_samples(const PopulationSpec& spec, int n, std::uint64_t seed);

/// Exact W2 between equal-size empirical measures: sorted matching when the
/// points are scalars, otherwise an exact optimal assignment on the N x N
/// squared-cost matrix (N <= 512). The matched squared costs are summed in
/// ascending order, which makes the distance exactly symmetric in its
/// arguments.
double wasserstein2(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

/// Exact expectation over atoms, summed sequentially in canonical order.
double expect(const PopulationSpec& spec,
              const std::function<double(const Vector& x, const Vector& y)>& g);

/// Scalar test function on the concatenated variable w = (x, y), with its
/// gradient.
struct TestFunctional {
  std::function<double(const Vector& w)> value;
  std::function<Vector(const Vector& w)> gradient;
};

/// Max over grid nodes of the defect in
///   E[psi(w_t)] = E[psi(w_0)] + int_0^t E[grad psi(w_s) . f_bar(w_s, theta_s)] ds
/// with the time integral by the trapezoid rule on each control interval
/// (theta constant within the interval). f_bar = (f, 0): the target block
/// never evolves.
double chain_rule_probe(const Model& m, const PopulationSpec& spec, const ControlPath& ctrl,
                        const TestFunctional& psi);

namespace detail {
/// Exact minimum-cost assignment on an n x n matrix; returns the column
/// matched to each row. O(n^3) shortest augmenting paths.
std::vector<int> solve_assignment(const Matrix& cost);
}  // namespace detail

}  // namespace mfoc
