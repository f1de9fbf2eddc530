#include "mfoc/models_builtin.hpp"

#include <cmath>
#include <stdexcept>

namespace mfoc {

// ---------------------------------------------------------------------------
// TanhBilinear

TanhBilinearModel::TanhBilinearModel(int dim, double lambda, std::optional<ThetaBox> box)
    : d_(dim), lambda_(lambda) {
  require(dim >= 1, "TanhBilinear: dim must be >= 1");
  require(lambda >= 0.0, "TanhBilinear: lambda must be >= 0");
  if (box) require(box->lo.size() == dim * dim, "TanhBilinear: theta box dimension mismatch");
  theta_set_ = std::move(box);
}

Vector TanhBilinearModel::dynamics(const Vector& x, const Vector& theta) const {
  Eigen::Map<const Matrix> tm(theta.data(), d_, d_);
  // map is column-major over row-major data: tm(j, i) = Theta_mat(i, j)
  return tm.transpose() * x.array().tanh().matrix();
}

Matrix TanhBilinearModel::dynamics_jac_state(const Vector& x, const Vector& theta) const {
  Eigen::Map<const Matrix> tm(theta.data(), d_, d_);
  Vector sech2 = 1.0 - x.array().tanh().square();
  return tm.transpose() * sech2.asDiagonal();
}

Matrix TanhBilinearModel::dynamics_jac_param(const Vector& x, const Vector& theta) const {
  (void)theta;
  Matrix j = Matrix::Zero(d_, d_ * d_);
  const Vector s = x.array().tanh();
  for (int i = 0; i < d_; ++i)
    for (int c = 0; c < d_; ++c) j(i, i * d_ + c) = s[c];
  return j;
}

double TanhBilinearModel::running_cost(const Vector&, const Vector& theta) const {
  return lambda_ * theta.squaredNorm();
}

Vector TanhBilinearModel::running_cost_grad_state(const Vector&, const Vector&) const {
  return Vector::Zero(d_);
}

Vector TanhBilinearModel::running_cost_grad_param(const Vector&, const Vector& theta) const {
  return 2.0 * lambda_ * theta;
}

double TanhBilinearModel::terminal_loss(const Vector& x, const Vector& y) const {
  return 0.5 * (x - y).squaredNorm();
}

Vector TanhBilinearModel::terminal_loss_grad_state(const Vector& x, const Vector& y) const {
  return x - y;
}

std::optional<Matrix> TanhBilinearModel::hamiltonian_hessian_param(const Vector&, const Vector&,
                                                                   const Vector&) const {
  return Matrix(-2.0 * lambda_ * Matrix::Identity(d_ * d_, d_ * d_));
}

std::optional<double> TanhBilinearModel::dynamics_bound() const {
  if (!theta_set_) return std::nullopt;
  // |f_i| <= sum_j |Theta_ij| * |tanh| < d * max|box|
  const double mx = std::max(theta_set_->lo.cwiseAbs().maxCoeff(),
                             theta_set_->hi.cwiseAbs().maxCoeff());
  return static_cast<double>(d_) * mx;
}

// ---------------------------------------------------------------------------
// LinearScalar

Vector LinearScalarModel::dynamics(const Vector& x, const Vector& theta) const {
  return theta[0] * x;
}

Matrix LinearScalarModel::dynamics_jac_state(const Vector&, const Vector& theta) const {
  Matrix j(1, 1);
  j(0, 0) = theta[0];
  return j;
}

Matrix LinearScalarModel::dynamics_jac_param(const Vector& x, const Vector&) const {
  Matrix j(1, 1);
  j(0, 0) = x[0];
  return j;
}

double LinearScalarModel::terminal_loss(const Vector& x, const Vector& y) const {
  return 0.5 * (x - y).squaredNorm();
}

Vector LinearScalarModel::terminal_loss_grad_state(const Vector& x, const Vector& y) const {
  return x - y;
}

// ---------------------------------------------------------------------------
// ConstantDrive

ConstantDriveModel::ConstantDriveModel(int dim, double lambda, std::optional<ThetaBox> box)
    : d_(dim), lambda_(lambda) {
  require(dim >= 1, "ConstantDrive: dim must be >= 1");
  require(lambda >= 0.0, "ConstantDrive: lambda must be >= 0");
  if (box) require(box->lo.size() == dim, "ConstantDrive: theta box dimension mismatch");
  theta_set_ = std::move(box);
}

Vector ConstantDriveModel::dynamics(const Vector&, const Vector& theta) const { return theta; }

Matrix ConstantDriveModel::dynamics_jac_state(const Vector&, const Vector&) const {
  return Matrix::Zero(d_, d_);
}

Matrix ConstantDriveModel::dynamics_jac_param(const Vector&, const Vector&) const {
  return Matrix::Identity(d_, d_);
}

double ConstantDriveModel::running_cost(const Vector&, const Vector& theta) const {
  return lambda_ * theta.squaredNorm();
}

Vector ConstantDriveModel::running_cost_grad_state(const Vector&, const Vector&) const {
  return Vector::Zero(d_);
}

Vector ConstantDriveModel::running_cost_grad_param(const Vector&, const Vector& theta) const {
  return 2.0 * lambda_ * theta;
}

double ConstantDriveModel::terminal_loss(const Vector& x, const Vector& y) const {
  return 0.5 * (x - y).squaredNorm();
}

Vector ConstantDriveModel::terminal_loss_grad_state(const Vector& x, const Vector& y) const {
  return x - y;
}

std::optional<Matrix> ConstantDriveModel::hamiltonian_hessian_param(const Vector&, const Vector&,
                                                                    const Vector&) const {
  return Matrix(-2.0 * lambda_ * Matrix::Identity(d_, d_));
}

std::optional<double> ConstantDriveModel::dynamics_bound() const {
  if (!theta_set_) return std::nullopt;
  return std::max(theta_set_->lo.cwiseAbs().maxCoeff(), theta_set_->hi.cwiseAbs().maxCoeff());
}

// ---------------------------------------------------------------------------

std::shared_ptr<Model> make_builtin_model(const std::string& name, double lambda, int dim,
                                          std::optional<ThetaBox> box) {
  if (name == "tanh_bilinear") return std::make_shared<TanhBilinearModel>(dim, lambda, std::move(box));
  if (name == "linear_scalar") return std::make_shared<LinearScalarModel>();
  if (name == "constant_drive")
    return std::make_shared<ConstantDriveModel>(dim, lambda, std::move(box));
  throw std::invalid_argument("unknown model name: " + name);
}

}  // namespace mfoc
