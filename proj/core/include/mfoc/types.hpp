#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfoc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Uniform time grid on [0, horizon]. Node times are computed as
/// k*horizon/n_steps rather than by repeated addition, so node k is the same
/// double no matter how the grid is traversed.
struct TimeGrid {
  double horizon = 1.0;
  int n_steps = 1;
  int substeps = 1;  // integration substeps per control interval

  double dt() const { return horizon / n_steps; }
  double node_time(int k) const { return (k * horizon) / n_steps; }

  void validate() const {
    if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
    if (n_steps < 1) throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
    if (substeps < 1) throw std::invalid_argument("TimeGrid: substeps must be >= 1");
  }

  bool same_as(const TimeGrid& o) const {
    return horizon == o.horizon && n_steps == o.n_steps && substeps == o.substeps;
  }
};

/// Piecewise-constant control: values[k] holds on [t_k, t_{k+1}).
struct ControlPath {
  TimeGrid grid;
  std::vector<Vector> values;

  static ControlPath constant(const TimeGrid& g, const Vector& theta) {
    ControlPath c;
    c.grid = g;
    c.values.assign(static_cast<std::size_t>(g.n_steps), theta);
    return c;
  }
};

struct StatePath {
  TimeGrid grid;
  std::vector<Vector> nodes;  // n_steps + 1 entries
};

struct CostatePath {
  TimeGrid grid;
  std::vector<Vector> nodes;  // n_steps + 1 entries
};

// ---------------------------------------------------------------------------
// Error types

/// Integration produced a non-finite or absurdly large state.
class BlowUpError : public std::runtime_error {
 public:
  explicit BlowUpError(int step)
      : std::runtime_error("integration blow-up at step " + std::to_string(step)), step_index(step) {}
  int step_index;
};

class UnboundedMaximizationError : public std::runtime_error {
 public:
  UnboundedMaximizationError() : std::runtime_error("Hamiltonian maximization is unbounded (lambda <= 0)") {}
};

class EmptySampleError : public std::runtime_error {
 public:
  EmptySampleError() : std::runtime_error("empty sample set") {}
};

/// Wasserstein distance between empirical measures of unequal size.
class PairingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Semi-Lagrangian characteristic foot left the padded spatial domain.
class DomainTooSmallError : public std::runtime_error {
 public:
  DomainTooSmallError(double t_, double x_, double theta_)
      : std::runtime_error("HJB domain too small: characteristic from (t=" + std::to_string(t_) +
                           ", x=" + std::to_string(x_) + ", theta=" + std::to_string(theta_) +
                           ") leaves the padded grid"),
        t(t_), x(x_), theta(theta_) {}
  double t, x, theta;
};

/// Exhaustive control search would enumerate too many combinations.
class SearchBudgetError : public std::runtime_error {
 public:
  explicit SearchBudgetError(std::uint64_t n)
      : std::runtime_error("control search budget exceeded: " + std::to_string(n) +
                           " combinations (limit 1000000)"),
        combinations(n) {}
  std::uint64_t combinations;
};

/// Trajectory left the interior band of a value grid.
class TrajectoryExitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace mfoc
