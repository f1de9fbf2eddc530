#pragma once

#include "mfoc/config.hpp"
#include "mfoc/types.hpp"

#include <cstdint>
#include <string>

namespace mfoc {

struct StudyOptions {
  std::string out_dir = "out";
  std::uint64_t base_seed = 26;
  int threads = 1;
  std::string command;  // echoed into the manifest
};

/// Kind ids entering the seed derivation derive_seed(base, kind, n, trial).
enum class StudyKind : std::uint64_t {
  kConvergence = 1,
  kUniqueness = 2,
  kValidation = 3,
  kStability = 4,
};

/// Sampled-to-mean-field convergence study: theta* on the exact finite
/// support, theta^N on seeded empirical draws (initialized at theta*), rows
/// per (N, trial) plus per-N medians and the log-log slope. Writes
/// convergence.csv (+ samples-N*.csv with --dump-samples) and a manifest.
int run_convergence_study(const Config& cfg, const StudyOptions& opt, bool dump_samples = false);

/// Small-time uniqueness study: for each horizon in study.t_list, solves from
/// study.init_count seeded random initial controls and reports all pairwise
/// L-inf distances. Reporting only; assertions live in the acceptance suite.
int run_uniqueness_study(const Config& cfg, const StudyOptions& opt);

struct ValidationOptions {
  /// Test hook: flips the sign of the adjoint gradient inside the
  /// gradient-identity check, which must then fail.
  bool corrupt_gradient = false;
};

/// Runs every registered cross-module invariant at its own pinned tolerance
/// (user solver/time settings are recorded as overridden, not applied).
/// Writes validation.csv and a manifest; exit status is nonzero iff any
/// check fails.
int run_validation_suite(const Config& cfg, const StudyOptions& opt,
                         const ValidationOptions& vopt = {});

/// Single msa_solve run: solution.csv (t, theta_1..theta_m) plus a manifest
/// with the residual history.
int run_train(const Config& cfg, const StudyOptions& opt);

/// solve_classical_hjb_1d + costate_consistency on the configured single-atom
/// problem: value_grid.csv (t, x, v) plus a manifest with the mismatch.
int run_hjb_check(const Config& cfg, const StudyOptions& opt);

/// dpp_check on the configured scenario: dpp.csv (candidate rhs values) plus
/// a manifest with v_left, best_rhs, residual.
int run_dpp_check(const Config& cfg, const StudyOptions& opt);

/// estimate_stability_constant around the solved control: stability.csv plus
/// manifest.
int run_stability_probe(const Config& cfg, const StudyOptions& opt);

}  // namespace mfoc
