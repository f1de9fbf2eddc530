#include "mfoc/hjb.hpp"

#include "mfoc/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfoc {

namespace {

double interp_clamped(const std::vector<double>& slice, double x_lo, double hx, double x) {
  const int nx = static_cast<int>(slice.size());
  const double x_hi = x_lo + (nx - 1) * hx;
  const double q = std::clamp(x, x_lo, x_hi);
  int j = static_cast<int>((q - x_lo) / hx);
  j = std::clamp(j, 0, nx - 2);
  const double w = (q - (x_lo + j * hx)) / hx;
  return (1.0 - w) * slice[static_cast<std::size_t>(j)] +
         w * slice[static_cast<std::size_t>(j + 1)];
}

std::vector<double> theta_grid(double lo, double hi, int nodes) {
  require(nodes >= 1, "theta grid needs at least one node");
  std::vector<double> g(static_cast<std::size_t>(nodes));
  if (nodes == 1) {
    g[0] = lo;
    return g;
  }
  const double h = (hi - lo) / (nodes - 1);
  for (int i = 0; i < nodes; ++i) g[static_cast<std::size_t>(i)] = lo + i * h;
  return g;
}

std::uint64_t ipow_checked(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > 2'000'000 || r * base < r) return std::numeric_limits<std::uint64_t>::max();
    r *= base;
  }
  return r;
}

}  // namespace

ValueGrid solve_classical_hjb_1d(const Model& m, const Vector& y, const HjbGridSpec& gs,
                                 const TimeGrid& tg) {
  require(m.state_dim() == 1, "solve_classical_hjb_1d: requires d = 1");
  require(m.param_dim() == 1, "solve_classical_hjb_1d: requires m = 1");
  require(gs.x_nodes >= 3, "solve_classical_hjb_1d: needs at least 3 x-nodes");
  tg.validate();

  ValueGrid vg;
  vg.tgrid = tg;
  vg.x_lo = gs.x_lo;
  vg.x_hi = gs.x_hi;
  vg.x_nodes = gs.x_nodes;
  vg.theta_lo = gs.theta_lo;
  vg.theta_hi = gs.theta_hi;
  vg.theta_nodes = gs.theta_nodes;
  vg.y = y;
  vg.v.assign(static_cast<std::size_t>(tg.n_steps) + 1,
              std::vector<double>(static_cast<std::size_t>(gs.x_nodes), 0.0));

  const double hx = vg.hx();
  const double dt = tg.dt();
  const std::vector<double> thetas = theta_grid(gs.theta_lo, gs.theta_hi, gs.theta_nodes);

  Vector xv(1), tv(1);
  for (int j = 0; j < gs.x_nodes; ++j) {
    xv[0] = vg.x_at(j);
    vg.v[static_cast<std::size_t>(tg.n_steps)][static_cast<std::size_t>(j)] =
        m.terminal_loss(xv, y);
  }

  for (int k = tg.n_steps - 1; k >= 0; --k) {
    const std::vector<double>& next = vg.v[static_cast<std::size_t>(k) + 1];
    std::vector<double>& cur = vg.v[static_cast<std::size_t>(k)];
    for (int j = 0; j < gs.x_nodes; ++j) {
      const double x = vg.x_at(j);
      xv[0] = x;
      double best = std::numeric_limits<double>::infinity();
      for (double th : thetas) {
        tv[0] = th;
        const double foot = x + m.dynamics(xv, tv)[0] * dt;
        if (foot < gs.x_lo - hx || foot > gs.x_hi + hx)
          throw DomainTooSmallError(tg.node_time(k), x, th);
        const double cand = m.running_cost(xv, tv) * dt + interp_clamped(next, gs.x_lo, hx, foot);
        best = std::min(best, cand);
      }
      cur[static_cast<std::size_t>(j)] = best;
    }
  }
  return vg;
}

double value_by_search(const Model& m, const PopulationSpec& spec, double t_start, double horizon,
                       const CoarseControlSpec& coarse) {
  require(m.param_dim() == 1, "value_by_search: requires m = 1");
  require(t_start >= 0.0 && t_start < horizon, "value_by_search: t_start outside [0, T)");
  require(coarse.blocks >= 1, "value_by_search: needs at least one block");

  const std::uint64_t combos =
      ipow_checked(static_cast<std::uint64_t>(coarse.theta_nodes), coarse.blocks);
  if (combos > 1'000'000) throw SearchBudgetError(combos);

  const std::vector<double> thetas =
      theta_grid(coarse.theta_lo, coarse.theta_hi, coarse.theta_nodes);
  const SampleSet samples = SampleSet::from_population(spec);

  ControlPath ctrl;
  ctrl.grid.horizon = horizon - t_start;
  ctrl.grid.n_steps = coarse.blocks * coarse.steps_per_block;
  ctrl.grid.substeps = 1;
  ctrl.values.assign(static_cast<std::size_t>(ctrl.grid.n_steps), Vector::Zero(1));

  double best = std::numeric_limits<double>::infinity();
  std::vector<int> idx(static_cast<std::size_t>(coarse.blocks), 0);
  for (std::uint64_t c = 0; c < combos; ++c) {
    for (int b = 0; b < coarse.blocks; ++b) {
      const double th = thetas[static_cast<std::size_t>(idx[static_cast<std::size_t>(b)])];
      for (int s = 0; s < coarse.steps_per_block; ++s)
        ctrl.values[static_cast<std::size_t>(b * coarse.steps_per_block + s)][0] = th;
    }
    best = std::min(best, loss(m, samples, ctrl));
    for (int b = coarse.blocks - 1; b >= 0; --b) {
      if (++idx[static_cast<std::size_t>(b)] < coarse.theta_nodes) break;
      idx[static_cast<std::size_t>(b)] = 0;
    }
  }
  return best;
}

DPPReport dpp_check(const Model& m, const PopulationSpec& spec, double t, double t_hat,
                    double horizon, const DppSpec& sd) {
  require(0.0 <= t && t <= t_hat && t_hat <= horizon, "dpp_check: need 0 <= t <= t_hat <= T");
  require(m.param_dim() == 1, "dpp_check: requires m = 1");

  DPPReport rep;
  rep.t = t;
  rep.t_hat = t_hat;

  const int tail_nodes = sd.tail_theta_nodes > 0 ? sd.tail_theta_nodes : sd.theta_nodes;
  const CoarseControlSpec tail{sd.tail_blocks, sd.theta_lo, sd.theta_hi, tail_nodes,
                               sd.steps_per_block};

  if (t == t_hat || t_hat == horizon) {
    // Degenerate split: both sides reduce to one search over the same family
    // (or to the bare terminal expectation when t = T), so the residual is
    // exactly zero.
    double v;
    if (t == horizon) {
      v = 0.0;
      for (const Atom& a : spec.atoms()) v += a.w * m.terminal_loss(a.x, a.y);
    } else if (t == t_hat) {
      v = value_by_search(m, spec, t, horizon, tail);
    } else {
      const CoarseControlSpec whole{sd.first_blocks, sd.theta_lo, sd.theta_hi, sd.theta_nodes,
                                    sd.steps_per_block};
      v = value_by_search(m, spec, t, horizon, whole);
    }
    rep.v_left = v;
    rep.best_rhs = v;
    rep.candidate_rhs = {v};
    rep.residual = 0.0;
    return rep;
  }

  // Left side: exhaustive search over the concatenated family
  // (first_blocks on [t, t_hat]) x (tail_blocks on [t_hat, T]).
  const std::vector<double> g_first = theta_grid(sd.theta_lo, sd.theta_hi, sd.theta_nodes);
  const std::uint64_t combos_first =
      ipow_checked(static_cast<std::uint64_t>(sd.theta_nodes), sd.first_blocks);
  const std::uint64_t combos_tail =
      ipow_checked(static_cast<std::uint64_t>(sd.theta_nodes), sd.tail_blocks);
  if (combos_first > 2000 || combos_first * combos_tail > 1'000'000)
    throw SearchBudgetError(combos_first * combos_tail);

  const SampleSet samples = SampleSet::from_population(spec);
  const double first_len = t_hat - t;
  const double tail_len = horizon - t_hat;

  ControlPath cfirst;
  cfirst.grid.horizon = first_len;
  cfirst.grid.n_steps = sd.first_blocks * sd.steps_per_block;
  cfirst.grid.substeps = 1;
  cfirst.values.assign(static_cast<std::size_t>(cfirst.grid.n_steps), Vector::Zero(1));

  ControlPath ctail;
  ctail.grid.horizon = tail_len;
  ctail.grid.n_steps = sd.tail_blocks * sd.steps_per_block;
  ctail.grid.substeps = 1;
  ctail.values.assign(static_cast<std::size_t>(ctail.grid.n_steps), Vector::Zero(1));

  const double dt_first = cfirst.grid.dt();

  rep.v_left = std::numeric_limits<double>::infinity();
  rep.best_rhs = std::numeric_limits<double>::infinity();
  rep.candidate_rhs.reserve(static_cast<std::size_t>(combos_first));

  std::vector<int> fidx(static_cast<std::size_t>(sd.first_blocks), 0);
  for (std::uint64_t cf = 0; cf < combos_first; ++cf) {
    for (int b = 0; b < sd.first_blocks; ++b) {
      const double th = g_first[static_cast<std::size_t>(fidx[static_cast<std::size_t>(b)])];
      for (int s = 0; s < sd.steps_per_block; ++s)
        cfirst.values[static_cast<std::size_t>(b * sd.steps_per_block + s)][0] = th;
    }

    // Propagate every atom through the first segment once; accumulate the
    // first-segment running cost (left-endpoint quadrature, atom-weighted).
    double run_cost = 0.0;
    std::vector<Atom> propagated;
    propagated.reserve(spec.atoms().size());
    double prop_bound = 0.0;
    for (const Atom& a : spec.atoms()) {
      const StatePath path = integrate_state(m, a.x, cfirst);
      double rc = 0.0;
      for (int k = 0; k < cfirst.grid.n_steps; ++k)
        rc += m.running_cost(path.nodes[static_cast<std::size_t>(k)],
                             cfirst.values[static_cast<std::size_t>(k)]) *
              dt_first;
      run_cost += a.w * rc;
      propagated.push_back(Atom{path.nodes.back(), a.y, a.w});
      prop_bound = std::max(prop_bound, path.nodes.back().norm() + a.y.norm());
    }
    const PopulationSpec prop_spec(std::move(propagated), prop_bound + 1.0);

    // RHS candidate: running cost + tail value at the propagated measure.
    const double rhs = run_cost + value_by_search(m, prop_spec, t_hat, horizon, tail);
    rep.candidate_rhs.push_back(rhs);
    rep.best_rhs = std::min(rep.best_rhs, rhs);

    // Left side shares the propagation: enumerate tail controls from the
    // propagated states with the left (fine) grid.
    const SampleSet prop_samples = SampleSet::from_population(prop_spec);
    std::vector<int> tidx(static_cast<std::size_t>(sd.tail_blocks), 0);
    for (std::uint64_t ct = 0; ct < combos_tail; ++ct) {
      for (int b = 0; b < sd.tail_blocks; ++b) {
        const double th = g_first[static_cast<std::size_t>(tidx[static_cast<std::size_t>(b)])];
        for (int s = 0; s < sd.steps_per_block; ++s)
          ctail.values[static_cast<std::size_t>(b * sd.steps_per_block + s)][0] = th;
      }
      rep.v_left = std::min(rep.v_left, run_cost + loss(m, prop_samples, ctail));
      for (int b = sd.tail_blocks - 1; b >= 0; --b) {
        if (++tidx[static_cast<std::size_t>(b)] < sd.theta_nodes) break;
        tidx[static_cast<std::size_t>(b)] = 0;
      }
    }

    for (int b = sd.first_blocks - 1; b >= 0; --b) {
      if (++fidx[static_cast<std::size_t>(b)] < sd.theta_nodes) break;
      fidx[static_cast<std::size_t>(b)] = 0;
    }
  }

  rep.residual = std::abs(rep.v_left - rep.best_rhs);
  return rep;
}

double costate_consistency(const Model& m, const PMPSolution& sol, const ValueGrid& vg) {
  require(sol.bundles.size() == 1, "costate_consistency: needs a single-atom solution");
  require(m.state_dim() == 1, "costate_consistency: requires d = 1");
  require(sol.control.grid.n_steps == vg.tgrid.n_steps &&
              sol.control.grid.horizon == vg.tgrid.horizon,
          "costate_consistency: PMP and value grids must share the time grid");

  const TrajectoryBundle& b = sol.bundles.front();
  const double hx = vg.hx();
  const int nx = vg.x_nodes;

  double worst = 0.0;
  for (int k = 0; k <= vg.tgrid.n_steps; ++k) {
    const double x = b.states.nodes[static_cast<std::size_t>(k)][0];
    if (x < vg.x_lo + hx || x > vg.x_hi - hx)
      throw TrajectoryExitError("costate_consistency: trajectory leaves the grid interior");
    const std::vector<double>& slice = vg.v[static_cast<std::size_t>(k)];
    int j = static_cast<int>((x - vg.x_lo) / hx);
    j = std::clamp(j, 1, nx - 3);
    const double d0 = (slice[static_cast<std::size_t>(j + 1)] -
                       slice[static_cast<std::size_t>(j - 1)]) /
                      (2.0 * hx);
    const double d1 = (slice[static_cast<std::size_t>(j + 2)] -
                       slice[static_cast<std::size_t>(j)]) /
                      (2.0 * hx);
    const double w = (x - vg.x_at(j)) / hx;
    const double dv = (1.0 - w) * d0 + w * d1;
    const double p = b.costates.nodes[static_cast<std::size_t>(k)][0];
    worst = std::max(worst, std::abs(p + dv));
  }
  return worst;
}

EmpiricalMeasure split_to_replicas(const PopulationSpec& spec, int replicas) {
  EmpiricalMeasure em;
  em.points.reserve(static_cast<std::size_t>(replicas));
  for (const Atom& a : spec.atoms()) {
    const double cnt = a.w * replicas;
    const int c = static_cast<int>(std::lround(cnt));
    require(std::abs(cnt - c) <= 1e-9 * replicas, "weight splitting: non-integral replica count");
    for (int i = 0; i < c; ++i) em.points.emplace_back(a.x, a.y);
  }
  require(static_cast<int>(em.points.size()) == replicas, "weight splitting: replica mismatch");
  return em;
}

int common_replica_count(const PopulationSpec& a, const PopulationSpec& b) {
  const auto fits = [](const PopulationSpec& s, int l) {
    for (const Atom& at : s.atoms()) {
      const double c = at.w * l;
      if (std::abs(c - std::lround(c)) > 1e-9 * l) return false;
    }
    return true;
  };
  for (int l = 1; l <= 64; ++l)
    if (fits(a, l) && fits(b, l)) return l;
  throw std::invalid_argument("weight splitting: no common replica count <= 64");
}

double lipschitz_probe(const Model& m, const std::vector<std::pair<Scenario, Scenario>>& pairs,
                       double horizon, const CoarseControlSpec& coarse) {
  require(!pairs.empty(), "lipschitz_probe: no scenario pairs");
  double worst = 0.0;
  for (const auto& [sa, sb] : pairs) {
    const int l = common_replica_count(sa.spec, sb.spec);
    const double w2 = wasserstein2(split_to_replicas(sa.spec, l), split_to_replicas(sb.spec, l));
    const double denom = std::abs(sa.t - sb.t) + w2;
    if (denom < 1e-14) continue;  // identical pair, skipped
    const double va = value_by_search(m, sa.spec, sa.t, horizon, coarse);
    const double vb = value_by_search(m, sb.spec, sb.t, horizon, coarse);
    worst = std::max(worst, std::abs(va - vb) / denom);
  }
  return worst;
}

}  // namespace mfoc
