#include "mfoc/ode.hpp"

#include <cmath>

namespace mfoc {

namespace {

constexpr double kBlowUpThreshold = 1e12;

bool bad(const Vector& v) {
  for (int i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || std::abs(v[i]) > kBlowUpThreshold) return true;
  }
  return false;
}

// One classical RK4 step. The stage combination is evaluated as
// dt*((k1 + 2k2 + 2k3 + k4)/6) in this exact order; keep it in sync with the
// stage recomputation in the adjoint sweep.
Vector rk4_step(const Model& m, const Vector& x, const Vector& theta, double h) {
  const Vector k1 = m.dynamics(x, theta);
  const Vector k2 = m.dynamics(x + (0.5 * h) * k1, theta);
  const Vector k3 = m.dynamics(x + (0.5 * h) * k2, theta);
  const Vector k4 = m.dynamics(x + h * k3, theta);
  return x + h * ((k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0);
}

void validate_ctrl(const Model& m, const ControlPath& ctrl) {
  ctrl.grid.validate();
  require(static_cast<int>(ctrl.values.size()) == ctrl.grid.n_steps,
          "ControlPath: values length must equal n_steps");
  for (const Vector& v : ctrl.values)
    require(v.size() == m.param_dim(), "ControlPath: parameter dimension mismatch");
}

}  // namespace

namespace detail {

void integrate_range(const Model& m, const ControlPath& ctrl, int from, int to,
                     std::vector<Vector>& out) {
  const double h = ctrl.grid.dt() / ctrl.grid.substeps;
  for (int k = from; k < to; ++k) {
    Vector x = out.back();
    for (int s = 0; s < ctrl.grid.substeps; ++s) {
      x = rk4_step(m, x, ctrl.values[static_cast<std::size_t>(k)], h);
      if (bad(x)) throw BlowUpError(k);
    }
    out.push_back(std::move(x));
  }
}

}  // namespace detail

StatePath integrate_state(const Model& m, const Vector& x0, const ControlPath& ctrl) {
  validate_ctrl(m, ctrl);
  require(x0.size() == m.state_dim(), "integrate_state: x0 dimension mismatch");
  require(x0.allFinite(), "integrate_state: x0 must be finite");

  StatePath path;
  path.grid = ctrl.grid;
  path.nodes.reserve(static_cast<std::size_t>(ctrl.grid.n_steps) + 1);
  path.nodes.push_back(x0);
  detail::integrate_range(m, ctrl, 0, ctrl.grid.n_steps, path.nodes);
  return path;
}

AdjointSweep adjoint_sweep(const Model& m, const StatePath& states, const Vector& y0,
                           const ControlPath& ctrl) {
  validate_ctrl(m, ctrl);
  require(states.grid.same_as(ctrl.grid), "adjoint_sweep: state/control grids differ");
  require(static_cast<int>(states.nodes.size()) == ctrl.grid.n_steps + 1,
          "adjoint_sweep: state path length mismatch");
  require(y0.size() == m.target_dim(), "adjoint_sweep: target dimension mismatch");

  const int n = ctrl.grid.n_steps;
  const int ss = ctrl.grid.substeps;
  const double dt = ctrl.grid.dt();
  const double h = dt / ss;

  AdjointSweep sweep;
  sweep.costates.grid = ctrl.grid;
  sweep.costates.nodes.assign(static_cast<std::size_t>(n) + 1, Vector());
  sweep.loss_grad_param.assign(static_cast<std::size_t>(n), Vector());

  // lambda_k = dJ/dx_k; the costate is its negation.
  Vector lam = m.terminal_loss_grad_state(states.nodes.back(), y0);
  sweep.costates.nodes[static_cast<std::size_t>(n)] = -lam;

  std::vector<Vector> substarts(static_cast<std::size_t>(ss));
  for (int k = n - 1; k >= 0; --k) {
    const Vector& theta = ctrl.values[static_cast<std::size_t>(k)];

    // Recompute the substep start states of interval k; bit-identical to the
    // forward pass since they start from the same node state and replay the
    // same step arithmetic.
    substarts[0] = states.nodes[static_cast<std::size_t>(k)];
    for (int s = 1; s < ss; ++s)
      substarts[static_cast<std::size_t>(s)] =
          rk4_step(m, substarts[static_cast<std::size_t>(s - 1)], theta, h);

    Vector gtheta = Vector::Zero(m.param_dim());
    for (int s = ss - 1; s >= 0; --s) {
      const Vector& xa = substarts[static_cast<std::size_t>(s)];
      const Vector k1 = m.dynamics(xa, theta);
      const Vector x2 = xa + (0.5 * h) * k1;
      const Vector k2 = m.dynamics(x2, theta);
      const Vector x3 = xa + (0.5 * h) * k2;
      const Vector k3 = m.dynamics(x3, theta);
      const Vector x4 = xa + h * k3;

      // Reverse pass through x_b = x_a + h*((k1 + 2k2 + 2k3 + k4)/6).
      Vector k1b = (h / 6.0) * lam;
      Vector k2b = (h / 3.0) * lam;
      Vector k3b = (h / 3.0) * lam;
      const Vector k4b = (h / 6.0) * lam;
      Vector la = lam;

      const Vector x4b = m.dynamics_jac_state(x4, theta).transpose() * k4b;
      gtheta.noalias() += m.dynamics_jac_param(x4, theta).transpose() * k4b;
      la += x4b;
      k3b += h * x4b;

      const Vector x3b = m.dynamics_jac_state(x3, theta).transpose() * k3b;
      gtheta.noalias() += m.dynamics_jac_param(x3, theta).transpose() * k3b;
      la += x3b;
      k2b += (0.5 * h) * x3b;

      const Vector x2b = m.dynamics_jac_state(x2, theta).transpose() * k2b;
      gtheta.noalias() += m.dynamics_jac_param(x2, theta).transpose() * k2b;
      la += x2b;
      k1b += (0.5 * h) * x2b;

      la += m.dynamics_jac_state(xa, theta).transpose() * k1b;
      gtheta.noalias() += m.dynamics_jac_param(xa, theta).transpose() * k1b;

      lam = std::move(la);
      if (bad(lam)) throw BlowUpError(k);
    }

    // Left-endpoint running-cost quadrature: J holds dt * L(x_k, theta_k).
    const Vector& xk = states.nodes[static_cast<std::size_t>(k)];
    sweep.loss_grad_param[static_cast<std::size_t>(k)] =
        gtheta + dt * m.running_cost_grad_param(xk, theta);
    lam += dt * m.running_cost_grad_state(xk, theta);
    sweep.costates.nodes[static_cast<std::size_t>(k)] = -lam;
  }
  return sweep;
}

CostatePath integrate_costate(const Model& m, const StatePath& states, const Vector& y0,
                              const ControlPath& ctrl) {
  return adjoint_sweep(m, states, y0, ctrl).costates;
}

double restart_consistency(const Model& m, const Vector& x0, const ControlPath& ctrl,
                           int split_node) {
  require(split_node >= 0 && split_node <= ctrl.grid.n_steps,
          "restart_consistency: split node out of range");
  const StatePath full = integrate_state(m, x0, ctrl);

  std::vector<Vector> restarted;
  restarted.reserve(static_cast<std::size_t>(ctrl.grid.n_steps - split_node) + 1);
  restarted.push_back(full.nodes[static_cast<std::size_t>(split_node)]);
  detail::integrate_range(m, ctrl, split_node, ctrl.grid.n_steps, restarted);

  double sup = 0.0;
  for (std::size_t i = 0; i < restarted.size(); ++i) {
    const Vector diff =
        restarted[i] - full.nodes[static_cast<std::size_t>(split_node) + i];
    sup = std::max(sup, diff.cwiseAbs().maxCoeff());
  }
  return sup;
}

}  // namespace mfoc
