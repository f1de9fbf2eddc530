#pragma once

#include "mfoc/model.hpp"

#include <memory>
#include <string>

namespace mfoc {

/// f(x, theta) = Theta_mat * tanh(x), with theta the row-major flattening of
/// the d x d matrix Theta_mat; L = lambda*||theta||^2, Phi = 0.5*||x - y||^2.
class TanhBilinearModel final : public Model {
 public:
  TanhBilinearModel(int dim, double lambda, std::optional<ThetaBox> box = std::nullopt);

  int state_dim() const override { return d_; }
  int target_dim() const override { return d_; }
  int param_dim() const override { return d_ * d_; }

  Vector dynamics(const Vector& x, const Vector& theta) const override;
  Matrix dynamics_jac_state(const Vector& x, const Vector& theta) const override;
  Matrix dynamics_jac_param(const Vector& x, const Vector& theta) const override;
  double running_cost(const Vector& x, const Vector& theta) const override;
  Vector running_cost_grad_state(const Vector& x, const Vector& theta) const override;
  Vector running_cost_grad_param(const Vector& x, const Vector& theta) const override;
  double terminal_loss(const Vector& x, const Vector& y) const override;
  Vector terminal_loss_grad_state(const Vector& x, const Vector& y) const override;
  std::optional<Matrix> hamiltonian_hessian_param(const Vector&, const Vector&,
                                                  const Vector&) const override;
  std::optional<double> quadratic_cost_weight() const override { return lambda_; }
  std::optional<double> dynamics_bound() const override;

  double lambda() const { return lambda_; }

 private:
  int d_;
  double lambda_;
};

/// d = m = 1, f = theta*x, L = 0, Phi = 0.5*(x - y)^2. The dynamics are
/// unbounded in x, so the model is flagged analytic-only.
class LinearScalarModel final : public Model {
 public:
  LinearScalarModel() = default;

  int state_dim() const override { return 1; }
  int target_dim() const override { return 1; }
  int param_dim() const override { return 1; }
  bool analytic_only() const override { return true; }

  Vector dynamics(const Vector& x, const Vector& theta) const override;
  Matrix dynamics_jac_state(const Vector& x, const Vector& theta) const override;
  Matrix dynamics_jac_param(const Vector& x, const Vector& theta) const override;
  double running_cost(const Vector&, const Vector&) const override { return 0.0; }
  Vector running_cost_grad_state(const Vector&, const Vector&) const override {
    return Vector::Zero(1);
  }
  Vector running_cost_grad_param(const Vector&, const Vector&) const override {
    return Vector::Zero(1);
  }
  double terminal_loss(const Vector& x, const Vector& y) const override;
  Vector terminal_loss_grad_state(const Vector& x, const Vector& y) const override;
  std::optional<Matrix> hamiltonian_hessian_param(const Vector&, const Vector&,
                                                  const Vector&) const override {
    return Matrix::Zero(1, 1);
  }
  std::optional<double> quadratic_cost_weight() const override { return 0.0; }
};

/// d = m, f = theta, L = lambda*||theta||^2, Phi = 0.5*||x - y||^2.
class ConstantDriveModel final : public Model {
 public:
  ConstantDriveModel(int dim, double lambda, std::optional<ThetaBox> box = std::nullopt);

  int state_dim() const override { return d_; }
  int target_dim() const override { return d_; }
  int param_dim() const override { return d_; }

  Vector dynamics(const Vector& x, const Vector& theta) const override;
  Matrix dynamics_jac_state(const Vector&, const Vector&) const override;
  Matrix dynamics_jac_param(const Vector&, const Vector&) const override;
  double running_cost(const Vector&, const Vector& theta) const override;
  Vector running_cost_grad_state(const Vector&, const Vector&) const override;
  Vector running_cost_grad_param(const Vector&, const Vector& theta) const override;
  double terminal_loss(const Vector& x, const Vector& y) const override;
  Vector terminal_loss_grad_state(const Vector& x, const Vector& y) const override;
  std::optional<Matrix> hamiltonian_hessian_param(const Vector&, const Vector&,
                                                  const Vector&) const override;
  std::optional<double> quadratic_cost_weight() const override { return lambda_; }
  std::optional<double> dynamics_bound() const override;

  double lambda() const { return lambda_; }

 private:
  int d_;
  double lambda_;
};

/// Factory keyed by the config names tanh_bilinear / linear_scalar /
/// constant_drive.
std::shared_ptr<Model> make_builtin_model(const std::string& name, double lambda, int dim,
                                          std::optional<ThetaBox> box = std::nullopt);

}  // namespace mfoc
