#pragma once

#include "mfoc/model.hpp"
#include "mfoc/ode.hpp"
#include "mfoc/population.hpp"
#include "mfoc/types.hpp"

#include <cstdint>
#include <vector>

namespace mfoc {

/// Weighted input-target samples feeding the solver. Canonicalized to
/// lexicographic atom order on construction; together with the pairwise-tree
/// reductions this makes residual and loss bit-identical under any input
/// permutation.
class SampleSet {
 public:
  explicit SampleSet(std::vector<Atom> samples);
  static SampleSet from_population(const PopulationSpec& spec);
  static SampleSet from_empirical(const EmpiricalMeasure& em);

  std::span<const Atom> samples() const { return samples_; }
  int size() const { return static_cast<int>(samples_.size()); }
  int state_dim() const { return static_cast<int>(samples_.front().x.size()); }

 private:
  std::vector<Atom> samples_;
};

/// Forward state path and backward costate path of one sample.
struct TrajectoryBundle {
  Atom sample;
  StatePath states;
  CostatePath costates;
};

enum class Maximizer { kClosedFormQuadratic, kProjectedGradient };

struct SolverConfig {
  int max_iter = 200;
  double tol = 1e-8;      // sup-norm residual
  double damping = 0.5;   // beta in (0, 1]
  Maximizer maximizer = Maximizer::kClosedFormQuadratic;
  int pg_inner_iters = 50;
  double pg_step = 0.1;
  int threads = 1;

  void validate() const {
    require(max_iter >= 1, "SolverConfig: max_iter must be >= 1");
    require(tol > 0.0, "SolverConfig: tol must be positive");
    require(damping > 0.0 && damping <= 1.0, "SolverConfig: damping must be in (0,1]");
  }
};

struct PMPSolution {
  ControlPath control;
  std::vector<TrajectoryBundle> bundles;
  std::vector<double> residual_history;
  bool converged = false;
};

/// Time-indexed residual of the first-order PMP condition. values[k] is the
/// exact per-time-unit derivative -dJ/dtheta_k / dt of the discrete objective
/// (the discrete realization of E grad_theta H along the sweeps); for box
/// control sets the projected composite clamp(theta + F) - theta is reported,
/// which reduces to F at interior points. sup_norm is the max over intervals
/// of the Euclidean norm.
struct ResidualPath {
  std::vector<Vector> values;
  double sup_norm = 0.0;
};

ResidualPath pmp_residual(const Model& m, const SampleSet& samples, const ControlPath& ctrl,
                          int threads = 1);

/// Per-time-unit gradient density of the loss: exactly -F(theta).
std::vector<Vector> adjoint_gradient(const Model& m, const SampleSet& samples,
                                     const ControlPath& ctrl, int threads = 1);

/// J = sum_i w_i [ Phi(x_T^i, y^i) + sum_k L(x_k^i, theta_k) dt ], with
/// left-endpoint quadrature for the running cost.
double loss(const Model& m, const SampleSet& samples, const ControlPath& ctrl, int threads = 1);

/// Successive approximation: forward sweep, backward sweep, then per-interval
/// maximization of the averaged Hamiltonian with damped update
/// theta <- (1-beta) theta + beta theta_hat. Returns the best iterate by
/// residual; converged=false when the tolerance was never reached.
PMPSolution msa_solve(const Model& m, const SampleSet& samples, const ControlPath& ctrl0,
                      const SolverConfig& cfg);

/// max_k E H(x_k, p_k, theta_k) - min_k over the solution's grid nodes.
double hamiltonian_constancy(const Model& m, const PMPSolution& sol);

struct HessianCheck {
  bool pass = false;
  double worst_eigenvalue = 0.0;  // max over nodes of the largest eigenvalue
};

/// Passes iff at every node the largest eigenvalue of E grad^2_theta H is
/// <= -lambda0 (non-strict at equality).
HessianCheck hessian_check(const Model& m, const PMPSolution& sol, double lambda0);

struct StabilityEstimate {
  double k_hat = 0.0;
  bool stable = true;
  int pairs = 0;
};

/// Probes the stability constant of the residual map near theta_star: samples
/// seeded pairs in the per-interval L-inf ball of radius rho (clamped to the
/// control set) and returns the max of ||y - z|| / ||F(y) - F(z)|| in the
/// sup-over-intervals norm. Flags non-stable when any denominator falls below
/// 1e-14; coincident pairs are regenerated, not counted.
StabilityEstimate estimate_stability_constant(const Model& m, const SampleSet& samples,
                                              const ControlPath& theta_star, double rho,
                                              int probe_pairs, std::uint64_t seed,
                                              int threads = 1);

}  // namespace mfoc
