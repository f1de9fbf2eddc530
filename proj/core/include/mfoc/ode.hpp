#pragma once

#include "mfoc/model.hpp"
#include "mfoc/types.hpp"

namespace mfoc {

/// Fixed-step RK4 on the control grid: `substeps` RK4 steps per control
/// interval, the control held constant within each interval. Aborts with
/// BlowUpError when any state component goes non-finite or past 1e12.
StatePath integrate_state(const Model& m, const Vector& x0, const ControlPath& ctrl);

/// Forward + backward pass in one object. `costates` are the PMP costates
/// p_k = -dJ/dx_k; `loss_grad_param[k]` is the exact derivative of the
/// discrete objective
///   J = Phi(x_n, y) + sum_k dt * L(x_k, theta_k)
/// with respect to theta_k.
struct AdjointSweep {
  CostatePath costates;
  std::vector<Vector> loss_grad_param;
};

/// Backward sweep of the costate equation p' = -grad_x H. The reverse pass
/// re-evaluates the forward RK4 stage states from the stored nodes (the same
/// arithmetic as the forward pass, so the stages are bit-identical) and
/// applies the transposed stage Jacobians. This is the exact adjoint of the
/// discrete forward map: the gradient identity against finite differences of
/// the discrete loss holds to roundoff, not just to O(dt).
AdjointSweep adjoint_sweep(const Model& m, const StatePath& states, const Vector& y0,
                           const ControlPath& ctrl);

CostatePath integrate_costate(const Model& m, const StatePath& states, const Vector& y0,
                              const ControlPath& ctrl);

/// Sup-norm gap between the full-path node values and the path obtained by
/// integrating to node `split_node`, restarting from that state, and
/// integrating on. Node-aligned splits replay the identical step sequence, so
/// the gap is exactly zero.
double restart_consistency(const Model& m, const Vector& x0, const ControlPath& ctrl,
                           int split_node);

namespace detail {
/// Integrates intervals [from, to) starting from x at node `from`, appending
/// node states to `out` (which must already hold the node-`from` state).
/// Shared by integrate_state and restart_consistency so both legs run the
/// same arithmetic.
void integrate_range(const Model& m, const ControlPath& ctrl, int from, int to,
                     std::vector<Vector>& out);
}  // namespace detail

}  // namespace mfoc
