#pragma once

#include "mfoc/model.hpp"
#include "mfoc/pmp.hpp"
#include "mfoc/population.hpp"
#include "mfoc/types.hpp"

#include <utility>
#include <vector>

namespace mfoc {

/// Tabulated classical value function v(t_k, x_j) for the single-atom 1-D
/// reduction, with the theta grid it was built from and the fixed target y.
struct ValueGrid {
  TimeGrid tgrid;
  double x_lo = 0.0, x_hi = 1.0;
  int x_nodes = 2;
  double theta_lo = 0.0, theta_hi = 0.0;
  int theta_nodes = 1;
  Vector y;
  std::vector<std::vector<double>> v;  // (n_steps+1) slices of x_nodes values

  double hx() const { return (x_hi - x_lo) / (x_nodes - 1); }
  double x_at(int j) const { return x_lo + j * hx(); }
};

struct HjbGridSpec {
  double x_lo = -1.0, x_hi = 1.0;
  int x_nodes = 101;
  double theta_lo = -1.0, theta_hi = 1.0;
  int theta_nodes = 101;
};

/// Semi-Lagrangian backward induction
///   v(t_k, x) = min_theta [ L(x, theta) dt + v(t_{k+1}, x + f(x, theta) dt) ]
/// with linear interpolation in x. Feet inside the one-cell margin are
/// clamped to the domain edge (constant extension); feet beyond the margin
/// raise DomainTooSmallError. The terminal slice is Phi(x_j, y) exactly.
/// Requires d = 1.
ValueGrid solve_classical_hjb_1d(const Model& m, const Vector& y, const HjbGridSpec& gs,
                                 const TimeGrid& tg);

/// A coarse piecewise-constant control family: `blocks` equal time blocks,
/// each block's value drawn from a uniform theta grid, integrated with
/// `steps_per_block` RK4 steps per block. Requires m = 1.
struct CoarseControlSpec {
  int blocks = 1;
  double theta_lo = -1.0, theta_hi = 1.0;
  int theta_nodes = 101;
  int steps_per_block = 16;
};

/// Brute-force value: minimum of the exact finite-support objective over
/// every control in the coarse family on [t_start, horizon]. Refuses when
/// theta_nodes^blocks exceeds 1e6 combinations.
double value_by_search(const Model& m, const PopulationSpec& spec, double t_start, double horizon,
                       const CoarseControlSpec& coarse);

struct DPPReport {
  double t = 0.0, t_hat = 0.0;
  std::vector<double> candidate_rhs;  // one per first-segment control
  double v_left = 0.0;
  double best_rhs = 0.0;
  double residual = 0.0;
};

struct DppSpec {
  int first_blocks = 1;      // blocks on [t, t_hat]
  int tail_blocks = 1;       // blocks on [t_hat, T]
  double theta_lo = -1.0, theta_hi = 1.0;
  int theta_nodes = 101;     // left family and rhs first segment
  int tail_theta_nodes = 0;  // rhs tail grid; 0 means matched to theta_nodes
  int steps_per_block = 16;
};

/// Compares v(t) against min over first-segment controls of
/// [running cost on [t, t_hat] + v(t_hat) at the propagated atoms], both
/// sides by exhaustive search. With matched enumeration families the residual
/// is roundoff; a coarser t_hat-side grid surfaces the resolution gap.
DPPReport dpp_check(const Model& m, const PopulationSpec& spec, double t, double t_hat,
                    double horizon, const DppSpec& spec_dpp);

/// max_k | p_k + dv/dx(t_k, x_k) | along a single-atom 1-D PMP solution,
/// dv/dx by central differences on the value grid (linearly interpolated
/// between the bracketing nodes). The trajectory must stay one cell inside
/// the grid.
double costate_consistency(const Model& m, const PMPSolution& sol, const ValueGrid& vg);

struct Scenario {
  double t;
  PopulationSpec spec;
};

/// max over supplied scenario pairs of |v - v_hat| / (|t - t_hat| + W2),
/// values by value_by_search, W2 after weight-splitting the atoms into unit
/// replicas at a common denominator (capped at 64). Identical pairs are
/// skipped.
double lipschitz_probe(const Model& m, const std::vector<std::pair<Scenario, Scenario>>& pairs,
                       double horizon, const CoarseControlSpec& coarse);

/// Weight-splitting used by lipschitz_probe, exposed for tests: the smallest
/// common replica count L <= 64 with all w_i * L integral (within 1e-9).
EmpiricalMeasure split_to_replicas(const PopulationSpec& spec, int replicas);
int common_replica_count(const PopulationSpec& a, const PopulationSpec& b);

}  // namespace mfoc
