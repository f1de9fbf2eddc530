#include "mfoc/model.hpp"

#include "mfoc/rng.hpp"

#include <cmath>

namespace mfoc {

void check_model_dims(const Model& m, const Vector& x, const Vector& theta) {
  require(x.size() == m.state_dim(), "state dimension mismatch");
  require(theta.size() == m.param_dim(), "parameter dimension mismatch");
  if (m.theta_set()) {
    require(m.theta_set()->lo.size() == m.param_dim(), "theta box dimension mismatch");
  }
}

double hamiltonian(const Model& m, const Vector& x, const Vector& p, const Vector& theta) {
  check_model_dims(m, x, theta);
  require(p.size() == m.state_dim(), "costate dimension mismatch");
  return p.dot(m.dynamics(x, theta)) - m.running_cost(x, theta);
}

HamiltonianGradient grad_hamiltonian(const Model& m, const Vector& x, const Vector& p,
                                     const Vector& theta) {
  check_model_dims(m, x, theta);
  require(p.size() == m.state_dim(), "costate dimension mismatch");
  HamiltonianGradient g;
  g.state = m.dynamics_jac_state(x, theta).transpose() * p - m.running_cost_grad_state(x, theta);
  g.param = m.dynamics_jac_param(x, theta).transpose() * p - m.running_cost_grad_param(x, theta);
  return g;
}

Vector argmax_hamiltonian_quadratic(const Vector& g, double lambda,
                                    const std::optional<ThetaBox>& theta_set) {
  if (!(lambda > 0.0)) throw UnboundedMaximizationError();
  Vector theta = g / (2.0 * lambda);
  if (theta_set) theta = theta_set->clamp(theta);
  return theta;
}

bool probe_dynamics_bound(const Model& m, double state_radius, int n_probes, std::uint64_t seed) {
  require(m.theta_set().has_value(), "bound probe requires a box control set");
  require(m.dynamics_bound().has_value(), "model declares no dynamics bound");
  const double bound = *m.dynamics_bound();
  const ThetaBox& box = *m.theta_set();
  rng::Counter rc(seed);
  Vector x(m.state_dim()), theta(m.param_dim());
  for (int i = 0; i < n_probes; ++i) {
    for (int j = 0; j < m.state_dim(); ++j) x[j] = rc.uniform(-state_radius, state_radius);
    for (int j = 0; j < m.param_dim(); ++j) theta[j] = rc.uniform(box.lo[j], box.hi[j]);
    if (m.dynamics(x, theta).cwiseAbs().maxCoeff() > bound) return false;
  }
  return true;
}

}  // namespace mfoc
