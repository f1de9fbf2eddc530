#pragma once

#include "mfoc/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>

namespace mfoc {

/// Axis-aligned box constraint for the control set.
struct ThetaBox {
  Vector lo, hi;

  Vector clamp(const Vector& v) const {
    return v.cwiseMax(lo).cwiseMin(hi);
  }
  bool contains(const Vector& v, double tol = 0.0) const {
    return (v.array() >= lo.array() - tol).all() && (v.array() <= hi.array() + tol).all();
  }
  static ThetaBox cube(int m, double lo_, double hi_) {
    ThetaBox b;
    b.lo = Vector::Constant(m, lo_);
    b.hi = Vector::Constant(m, hi_);
    return b;
  }
};

/// Dynamics f, running cost L, terminal loss Phi and the first derivatives
/// the PMP and HJB machinery needs. All evaluators are pure; identical inputs
/// give bit-identical outputs.
///
/// Jacobian conventions: dynamics_jac_state is d x d with (i,j) = df_i/dx_j,
/// dynamics_jac_param is d x m with (i,j) = df_i/dtheta_j.
class Model {
 public:
  virtual ~Model() = default;

  virtual int state_dim() const = 0;   // d
  virtual int target_dim() const = 0;  // l
  virtual int param_dim() const = 0;   // m

  const std::optional<ThetaBox>& theta_set() const { return theta_set_; }

  /// Models whose dynamics violate the boundedness assumption; admitted as
  /// analytic oracles only and excluded from theorem-asserting experiments.
  virtual bool analytic_only() const { return false; }

  virtual Vector dynamics(const Vector& x, const Vector& theta) const = 0;
  virtual Matrix dynamics_jac_state(const Vector& x, const Vector& theta) const = 0;
  virtual Matrix dynamics_jac_param(const Vector& x, const Vector& theta) const = 0;

  virtual double running_cost(const Vector& x, const Vector& theta) const = 0;
  virtual Vector running_cost_grad_state(const Vector& x, const Vector& theta) const = 0;
  virtual Vector running_cost_grad_param(const Vector& x, const Vector& theta) const = 0;

  virtual double terminal_loss(const Vector& x, const Vector& y) const = 0;
  virtual Vector terminal_loss_grad_state(const Vector& x, const Vector& y) const = 0;

  /// Hessian of H in theta, when the model can report it. For dynamics linear
  /// in theta with quadratic regularization this is the exact constant
  /// -2*lambda*I.
  virtual std::optional<Matrix> hamiltonian_hessian_param(const Vector& x, const Vector& p,
                                                          const Vector& theta) const {
    (void)x; (void)p; (void)theta;
    return std::nullopt;
  }

  /// Weight of a pure quadratic running cost L = lambda*||theta||^2, when the
  /// model has that form; enables the closed-form Hamiltonian maximization.
  virtual std::optional<double> quadratic_cost_weight() const { return std::nullopt; }

  /// Declared sup-norm bound on f over (all states) x Theta, available when
  /// theta_set is a box and f is bounded there.
  virtual std::optional<double> dynamics_bound() const { return std::nullopt; }

 protected:
  std::optional<ThetaBox> theta_set_;
};

void check_model_dims(const Model& m, const Vector& x, const Vector& theta);

/// H(x, p, theta) = p . f(x, theta) - L(x, theta)
double hamiltonian(const Model& m, const Vector& x, const Vector& p, const Vector& theta);

struct HamiltonianGradient {
  Vector state;  // (grad_x f)^T p - grad_x L
  Vector param;  // (grad_theta f)^T p - grad_theta L
};
HamiltonianGradient grad_hamiltonian(const Model& m, const Vector& x, const Vector& p,
                                     const Vector& theta);

/// Maximizes theta -> g . theta - lambda*||theta||^2 over Theta. The
/// objective is separable and concave, so box constraints are handled by a
/// per-coordinate clamp of the unconstrained maximizer g/(2*lambda).
Vector argmax_hamiltonian_quadratic(const Vector& g, double lambda,
                                    const std::optional<ThetaBox>& theta_set);

/// Randomized check of the declared dynamics bound: samples (x, theta) with x
/// in [-state_radius, state_radius]^d and theta in the box, and verifies
/// ||f||_inf never exceeds the bound. Requires a box control set and a
/// declared bound.
bool probe_dynamics_bound(const Model& m, double state_radius, int n_probes, std::uint64_t seed);

}  // namespace mfoc
