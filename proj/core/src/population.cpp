#include "mfoc/population.hpp"

#include "mfoc/ode.hpp"
#include "mfoc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mfoc {

namespace {

int lex_compare(const Vector& a, const Vector& b) {
  for (int i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (a[i] < b[i]) return -1;
    if (a[i] > b[i]) return 1;
  }
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  return 0;
}

}  // namespace

bool atom_less(const Atom& a, const Atom& b) {
  if (int c = lex_compare(a.x, b.x); c != 0) return c < 0;
  if (int c = lex_compare(a.y, b.y); c != 0) return c < 0;
  return a.w < b.w;
}

PopulationSpec::PopulationSpec(std::vector<Atom> atoms, double support_bound)
    : atoms_(std::move(atoms)), bound_(support_bound) {
  require(!atoms_.empty(), "PopulationSpec: needs at least one atom");
  const int d = static_cast<int>(atoms_.front().x.size());
  const int l = static_cast<int>(atoms_.front().y.size());
  double wsum = 0.0;
  for (const Atom& a : atoms_) {
    require(a.x.size() == d && a.y.size() == l, "PopulationSpec: inconsistent atom dimensions");
    require(a.x.allFinite() && a.y.allFinite(), "PopulationSpec: atoms must be finite");
    require(a.w >= 0.0, "PopulationSpec: weights must be nonnegative");
    require(a.x.norm() + a.y.norm() <= bound_, "PopulationSpec: atom outside support bound");
    wsum += a.w;
  }
  require(std::abs(wsum - 1.0) <= 1e-12, "PopulationSpec: weights must sum to 1 within 1e-12");
  for (Atom& a : atoms_) a.w /= wsum;
  std::sort(atoms_.begin(), atoms_.end(), atom_less);
}

EmpiricalMeasure draw_samples(const PopulationSpec& spec, int n, std::uint64_t seed) {
  if (n < 1) throw EmptySampleError();
  std::vector<double> cdf;
  cdf.reserve(spec.atoms().size());
  double acc = 0.0;
  for (const Atom& a : spec.atoms()) {
    acc += a.w;
    cdf.push_back(acc);
  }
  cdf.back() = 1.0;

  EmpiricalMeasure out;
  out.points.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = rng::uniform01(seed, static_cast<std::uint64_t>(i));
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const std::size_t idx =
        std::min(static_cast<std::size_t>(it - cdf.begin()), spec.atoms().size() - 1);
    out.points.emplace_back(spec.atoms()[idx].x, spec.atoms()[idx].y);
  }
  return out;
}

namespace detail {

std::vector<int> solve_assignment(const Matrix& cost) {
  // Jonker-Volgenant style shortest augmenting path with potentials.
  const int n = static_cast<int>(cost.rows());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);  // column -> row (1-based)
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);

  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = match[static_cast<std::size_t>(j0)];
      double delta = kInf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    row_to_col[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return row_to_col;
}

}  // namespace detail

double wasserstein2(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.size() != b.size())
    throw PairingError("wasserstein2: unequal-size transport is unsupported");
  const int n = a.size();
  require(n >= 1, "wasserstein2: empty measures");
  const auto dim = [](const EmpiricalMeasure& m) {
    return m.points.front().first.size() + m.points.front().second.size();
  };
  require(dim(a) == dim(b), "wasserstein2: dimension mismatch");
  require(n <= 512, "wasserstein2: N > 512 is past desk scale");

  std::vector<double> matched(static_cast<std::size_t>(n));
  const auto sq = [](const Vector& ax, const Vector& ay, const Vector& bx, const Vector& by) {
    return (ax - bx).squaredNorm() + (ay - by).squaredNorm();
  };

  if (dim(a) == 1) {
    // Scalar points: the sorted matching is optimal.
    const auto flat = [](const EmpiricalMeasure& m) {
      std::vector<double> v(m.points.size());
      for (std::size_t i = 0; i < m.points.size(); ++i)
        v[i] = m.points[i].first.size() == 1 ? m.points[i].first[0] : m.points[i].second[0];
      return v;
    };
    std::vector<double> va = flat(a), vb = flat(b);
    std::sort(va.begin(), va.end());
    std::sort(vb.begin(), vb.end());
    for (int i = 0; i < n; ++i) {
      const double d = va[static_cast<std::size_t>(i)] - vb[static_cast<std::size_t>(i)];
      matched[static_cast<std::size_t>(i)] = d * d;
    }
  } else {
    Matrix cost(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        cost(i, j) = sq(a.points[static_cast<std::size_t>(i)].first,
                        a.points[static_cast<std::size_t>(i)].second,
                        b.points[static_cast<std::size_t>(j)].first,
                        b.points[static_cast<std::size_t>(j)].second);
    const std::vector<int> col = detail::solve_assignment(cost);
    for (int i = 0; i < n; ++i)
      matched[static_cast<std::size_t>(i)] = cost(i, col[static_cast<std::size_t>(i)]);
  }

  std::sort(matched.begin(), matched.end());
  double total = 0.0;
  for (double c : matched) total += c;
  return std::sqrt(total / n);
}

double expect(const PopulationSpec& spec,
              const std::function<double(const Vector& x, const Vector& y)>& g) {
  double acc = 0.0;
  for (const Atom& a : spec.atoms()) acc += a.w * g(a.x, a.y);
  return acc;
}

double chain_rule_probe(const Model& m, const PopulationSpec& spec, const ControlPath& ctrl,
                        const TestFunctional& psi) {
  const int n = ctrl.grid.n_steps;
  const double dt = ctrl.grid.dt();
  const int d = m.state_dim();
  const int l = m.target_dim();
  require(spec.state_dim() == d && spec.target_dim() == l,
          "chain_rule_probe: population/model dimension mismatch");

  // Per-node exact expectations over atoms (sequential, canonical order).
  std::vector<double> lhs(static_cast<std::size_t>(n) + 1, 0.0);  // E psi(w_k)
  // integrand g_k^{(j)} = E[grad psi(w_k) . f_bar(w_k, theta_j)] for the two
  // endpoint evaluations of interval j.
  std::vector<double> g_left(static_cast<std::size_t>(n), 0.0);
  std::vector<double> g_right(static_cast<std::size_t>(n), 0.0);

  Vector w(d + l);
  for (const Atom& a : spec.atoms()) {
    const StatePath path = integrate_state(m, a.x, ctrl);
    for (int k = 0; k <= n; ++k) {
      w.head(d) = path.nodes[static_cast<std::size_t>(k)];
      w.tail(l) = a.y;
      lhs[static_cast<std::size_t>(k)] += a.w * psi.value(w);
      const Vector grad = psi.gradient(w);
      require(grad.size() == d + l, "chain_rule_probe: psi gradient dimension mismatch");
      if (k < n) {
        g_left[static_cast<std::size_t>(k)] +=
            a.w * grad.head(d).dot(
                      m.dynamics(path.nodes[static_cast<std::size_t>(k)],
                                 ctrl.values[static_cast<std::size_t>(k)]));
      }
      if (k > 0) {
        g_right[static_cast<std::size_t>(k - 1)] +=
            a.w * grad.head(d).dot(
                      m.dynamics(path.nodes[static_cast<std::size_t>(k)],
                                 ctrl.values[static_cast<std::size_t>(k - 1)]));
      }
    }
  }

  double defect = 0.0;
  double integral = 0.0;
  for (int k = 0; k <= n; ++k) {
    defect = std::max(defect, std::abs(lhs[static_cast<std::size_t>(k)] - lhs[0] - integral));
    if (k < n)
      integral += 0.5 * dt *
                  (g_left[static_cast<std::size_t>(k)] + g_right[static_cast<std::size_t>(k)]);
  }
  return defect;
}

}  // namespace mfoc
