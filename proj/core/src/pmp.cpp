#include "mfoc/pmp.hpp"

#include "mfoc/reduce.hpp"
#include "mfoc/rng.hpp"
#include "mfoc/threading.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfoc {

SampleSet::SampleSet(std::vector<Atom> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) throw EmptySampleError();
  const auto d = samples_.front().x.size();
  const auto l = samples_.front().y.size();
  for (const Atom& s : samples_) {
    require(s.x.size() == d && s.y.size() == l, "SampleSet: inconsistent dimensions");
    require(s.w >= 0.0, "SampleSet: weights must be nonnegative");
  }
  std::sort(samples_.begin(), samples_.end(), atom_less);
}

SampleSet SampleSet::from_population(const PopulationSpec& spec) {
  return SampleSet(std::vector<Atom>(spec.atoms().begin(), spec.atoms().end()));
}

SampleSet SampleSet::from_empirical(const EmpiricalMeasure& em) {
  std::vector<Atom> atoms;
  atoms.reserve(em.points.size());
  const double w = 1.0 / static_cast<double>(em.points.size());
  for (const auto& [x, y] : em.points) atoms.push_back(Atom{x, y, w});
  return SampleSet(std::move(atoms));
}

namespace {

struct Sweep {
  std::vector<TrajectoryBundle> bundles;
  std::vector<Vector> avg_loss_grad;  // sum_i w_i dJ_i/dtheta_k, per interval
};

Sweep run_sweeps(const Model& m, const SampleSet& samples, const ControlPath& ctrl, int threads) {
  const std::size_t ns = static_cast<std::size_t>(samples.size());
  const std::size_t n = static_cast<std::size_t>(ctrl.grid.n_steps);

  std::vector<TrajectoryBundle> bundles(ns);
  std::vector<std::vector<Vector>> grads(ns);
  parallel_for(ns, threads, [&](std::size_t i) {
    const Atom& s = samples.samples()[i];
    StatePath states = integrate_state(m, s.x, ctrl);
    AdjointSweep adj = adjoint_sweep(m, states, s.y, ctrl);
    bundles[i] = TrajectoryBundle{s, std::move(states), std::move(adj.costates)};
    grads[i] = std::move(adj.loss_grad_param);
  });

  Sweep sweep;
  sweep.bundles = std::move(bundles);
  sweep.avg_loss_grad.resize(n);
  std::vector<Vector> terms(ns);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < ns; ++i)
      terms[i] = samples.samples()[i].w * grads[i][k];
    sweep.avg_loss_grad[k] = pairwise_sum(std::span<const Vector>(terms));
  }
  return sweep;
}

// F_k = -avg dJ/dtheta_k / dt : the unprojected residual.
std::vector<Vector> residual_raw(const Sweep& sweep, const ControlPath& ctrl) {
  const double dt = ctrl.grid.dt();
  std::vector<Vector> f(sweep.avg_loss_grad.size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = -sweep.avg_loss_grad[k] / dt;
  return f;
}

ResidualPath project_residual(const Model& m, const ControlPath& ctrl, std::vector<Vector> f) {
  ResidualPath r;
  if (m.theta_set()) {
    for (std::size_t k = 0; k < f.size(); ++k)
      f[k] = m.theta_set()->clamp(ctrl.values[k] + f[k]) - ctrl.values[k];
  }
  r.sup_norm = 0.0;
  for (const Vector& v : f) r.sup_norm = std::max(r.sup_norm, v.norm());
  r.values = std::move(f);
  return r;
}

void validate_feasible(const Model& m, const ControlPath& ctrl) {
  if (!m.theta_set()) return;
  for (const Vector& v : ctrl.values)
    require(m.theta_set()->contains(v, 1e-12), "control outside the admissible box");
}

// E grad_theta L(x_k, theta) over samples at the stored node states.
Vector avg_running_cost_grad_param(const Model& m, const std::vector<TrajectoryBundle>& bundles,
                                   std::size_t k, const Vector& theta) {
  std::vector<Vector> terms(bundles.size());
  for (std::size_t i = 0; i < bundles.size(); ++i)
    terms[i] = bundles[i].sample.w * m.running_cost_grad_param(bundles[i].states.nodes[k], theta);
  return pairwise_sum(std::span<const Vector>(terms));
}

Vector maximize_interval(const Model& m, const SolverConfig& cfg,
                         const std::vector<TrajectoryBundle>& bundles, std::size_t k,
                         const Vector& theta_k, const Vector& linear_coeff) {
  if (cfg.maximizer == Maximizer::kClosedFormQuadratic) {
    const auto lambda = m.quadratic_cost_weight();
    require(lambda.has_value(), "closed-form maximizer needs a quadratic running cost");
    return argmax_hamiltonian_quadratic(linear_coeff, *lambda, m.theta_set());
  }
  // Projected gradient ascent on theta -> linear_coeff . theta - E L(x_k, theta),
  // initialized at the current control for continuity of iterates.
  Vector theta = theta_k;
  for (int it = 0; it < cfg.pg_inner_iters; ++it) {
    Vector g = linear_coeff - avg_running_cost_grad_param(m, bundles, k, theta);
    theta += cfg.pg_step * g;
    if (m.theta_set()) theta = m.theta_set()->clamp(theta);
  }
  return theta;
}

}  // namespace

ResidualPath pmp_residual(const Model& m, const SampleSet& samples, const ControlPath& ctrl,
                          int threads) {
  validate_feasible(m, ctrl);
  const Sweep sweep = run_sweeps(m, samples, ctrl, threads);
  return project_residual(m, ctrl, residual_raw(sweep, ctrl));
}

std::vector<Vector> adjoint_gradient(const Model& m, const SampleSet& samples,
                                     const ControlPath& ctrl, int threads) {
  const Sweep sweep = run_sweeps(m, samples, ctrl, threads);
  std::vector<Vector> g = residual_raw(sweep, ctrl);
  for (Vector& v : g) v = -v;
  return g;
}

double loss(const Model& m, const SampleSet& samples, const ControlPath& ctrl, int threads) {
  const std::size_t ns = static_cast<std::size_t>(samples.size());
  const double dt = ctrl.grid.dt();
  std::vector<double> terms(ns);
  parallel_for(ns, threads, [&](std::size_t i) {
    const Atom& s = samples.samples()[i];
    const StatePath states = integrate_state(m, s.x, ctrl);
    double running = 0.0;
    for (int k = 0; k < ctrl.grid.n_steps; ++k)
      running += m.running_cost(states.nodes[static_cast<std::size_t>(k)],
                                ctrl.values[static_cast<std::size_t>(k)]) *
                 dt;
    terms[i] = s.w * (m.terminal_loss(states.nodes.back(), s.y) + running);
  });
  return pairwise_sum(std::span<const double>(terms));
}

PMPSolution msa_solve(const Model& m, const SampleSet& samples, const ControlPath& ctrl0,
                      const SolverConfig& cfg) {
  cfg.validate();
  validate_feasible(m, ctrl0);

  ControlPath ctrl = ctrl0;
  const std::size_t n = static_cast<std::size_t>(ctrl.grid.n_steps);

  PMPSolution best;
  best.control = ctrl;
  double best_res = std::numeric_limits<double>::infinity();
  std::vector<double> history;

  for (int it = 0; it < cfg.max_iter; ++it) {
    Sweep sweep = run_sweeps(m, samples, ctrl, cfg.threads);
    std::vector<Vector> f = residual_raw(sweep, ctrl);
    const ResidualPath res = project_residual(m, ctrl, std::vector<Vector>(f));
    history.push_back(res.sup_norm);

    if (res.sup_norm < best_res) {
      best_res = res.sup_norm;
      best.control = ctrl;
      best.bundles = sweep.bundles;
    }
    if (res.sup_norm <= cfg.tol) {
      best.converged = true;
      break;
    }
    if (it + 1 == cfg.max_iter) break;

    // Averaged-Hamiltonian maximization. For dynamics linear in theta the
    // averaged Hamiltonian at interval k with frozen sweeps is
    // g_k . theta - E L(x_k, theta) with g_k = F_k + E grad_theta L(x_k, theta_k).
    for (std::size_t k = 0; k < n; ++k) {
      const Vector g_k =
          f[k] + avg_running_cost_grad_param(m, sweep.bundles, k, ctrl.values[k]);
      const Vector theta_hat = maximize_interval(m, cfg, sweep.bundles, k, ctrl.values[k], g_k);
      ctrl.values[k] = (1.0 - cfg.damping) * ctrl.values[k] + cfg.damping * theta_hat;
    }
  }

  best.residual_history = std::move(history);
  return best;
}

double hamiltonian_constancy(const Model& m, const PMPSolution& sol) {
  require(!sol.bundles.empty(), "hamiltonian_constancy: solution has no bundles");
  const int n = sol.control.grid.n_steps;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::vector<double> terms(sol.bundles.size());
  for (int k = 0; k <= n; ++k) {
    const Vector& theta = sol.control.values[static_cast<std::size_t>(std::min(k, n - 1))];
    for (std::size_t i = 0; i < sol.bundles.size(); ++i) {
      const TrajectoryBundle& b = sol.bundles[i];
      terms[i] = b.sample.w * hamiltonian(m, b.states.nodes[static_cast<std::size_t>(k)],
                                          b.costates.nodes[static_cast<std::size_t>(k)], theta);
    }
    const double h = pairwise_sum(std::span<const double>(terms));
    lo = std::min(lo, h);
    hi = std::max(hi, h);
  }
  return hi - lo;
}

HessianCheck hessian_check(const Model& m, const PMPSolution& sol, double lambda0) {
  require(!sol.bundles.empty(), "hessian_check: solution has no bundles");
  const int n = sol.control.grid.n_steps;
  const int mm = m.param_dim();
  HessianCheck out;
  out.worst_eigenvalue = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    const Vector& theta = sol.control.values[static_cast<std::size_t>(k)];
    Matrix acc = Matrix::Zero(mm, mm);
    for (const TrajectoryBundle& b : sol.bundles) {
      const auto h = m.hamiltonian_hessian_param(b.states.nodes[static_cast<std::size_t>(k)],
                                                 b.costates.nodes[static_cast<std::size_t>(k)],
                                                 theta);
      if (!h) throw std::invalid_argument("hessian_check: model reports no theta-Hessian");
      acc += b.sample.w * (*h);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(acc);
    out.worst_eigenvalue = std::max(out.worst_eigenvalue, eig.eigenvalues().maxCoeff());
  }
  out.pass = out.worst_eigenvalue <= -lambda0;
  return out;
}

StabilityEstimate estimate_stability_constant(const Model& m, const SampleSet& samples,
                                              const ControlPath& theta_star, double rho,
                                              int probe_pairs, std::uint64_t seed, int threads) {
  require(rho > 0.0, "stability probe: rho must be positive");
  require(probe_pairs >= 1, "stability probe: need at least one pair");

  const std::size_t n = static_cast<std::size_t>(theta_star.grid.n_steps);
  const int mm = m.param_dim();
  rng::Counter rc(seed);

  const auto perturb = [&] {
    ControlPath c = theta_star;
    for (std::size_t k = 0; k < n; ++k) {
      for (int j = 0; j < mm; ++j) c.values[k][j] += rc.uniform(-rho, rho);
      if (m.theta_set()) c.values[k] = m.theta_set()->clamp(c.values[k]);
    }
    return c;
  };
  const auto sup_dist = [n](const ControlPath& a, const ControlPath& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s = std::max(s, (a.values[k] - b.values[k]).norm());
    return s;
  };

  StabilityEstimate est;
  est.k_hat = 0.0;
  for (int pair = 0; pair < probe_pairs; ++pair) {
    ControlPath y = perturb();
    ControlPath z = perturb();
    int attempts = 0;
    while (sup_dist(y, z) == 0.0 && attempts++ < 64) z = perturb();
    if (sup_dist(y, z) == 0.0) continue;  // degenerate direction, not counted

    const ResidualPath fy = pmp_residual(m, samples, y, threads);
    const ResidualPath fz = pmp_residual(m, samples, z, threads);
    double denom = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      denom = std::max(denom, (fy.values[k] - fz.values[k]).norm());
    if (denom < 1e-14) {
      est.stable = false;
      est.k_hat = std::numeric_limits<double>::infinity();
      return est;
    }
    est.k_hat = std::max(est.k_hat, sup_dist(y, z) / denom);
    ++est.pairs;
  }
  return est;
}

}  // namespace mfoc
