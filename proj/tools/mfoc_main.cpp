// CLI for the mean-field optimal control solver: single solves, the seeded
// studies, and the validation suite. See README.md for the config format.

#include "mfoc/config.hpp"
#include "mfoc/studies.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::int64_t seed_override = -1;
  int threads = 1;
};

void add_common(CLI::App* sub, CommonArgs& args, bool config_required) {
  auto* c = sub->add_option("--config", args.config_path, "run configuration file");
  if (config_required) c->required();
  sub->add_option("--out", args.out_dir, "output directory");
  sub->add_option("--seed", args.seed_override, "override study.base_seed");
  sub->add_option("--threads", args.threads, "worker threads")->check(CLI::PositiveNumber);
}

mfoc::StudyOptions resolve(const CommonArgs& args, const mfoc::Config& cfg,
                           const std::string& command) {
  mfoc::StudyOptions opt;
  opt.out_dir = args.out_dir;
  opt.threads = args.threads;
  opt.command = command;
  opt.base_seed = static_cast<std::uint64_t>(cfg.integer_or("study.base_seed", 26));
  if (args.seed_override >= 0) opt.base_seed = static_cast<std::uint64_t>(args.seed_override);
  return opt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mean-field optimal control solver and experiment harness"};
  app.require_subcommand(1);

  CommonArgs validate_args, train_args, conv_args, uniq_args, hjb_args, dpp_args, stab_args;
  bool corrupt_gradient = false;
  bool dump_samples = false;

  auto* validate = app.add_subcommand("validate", "run the cross-module validation suite");
  add_common(validate, validate_args, false);
  validate->add_flag("--corrupt-gradient", corrupt_gradient,
                     "test hook: sign-flip the adjoint gradient (must fail)")
      ->group("");  // hidden

  auto* train = app.add_subcommand("train", "single PMP solve on the configured population");
  add_common(train, train_args, true);

  auto* conv = app.add_subcommand("converge-study", "sampled-to-mean-field convergence study");
  add_common(conv, conv_args, true);
  conv->add_flag("--dump-samples", dump_samples, "also write the drawn samples per N");

  auto* uniq = app.add_subcommand("uniqueness-study", "small-time uniqueness study");
  add_common(uniq, uniq_args, true);

  auto* hjb = app.add_subcommand("hjb-check", "classical HJB grid solve + costate consistency");
  add_common(hjb, hjb_args, true);

  auto* dpp = app.add_subcommand("dpp-check", "dynamic programming principle residual");
  add_common(dpp, dpp_args, true);

  auto* stab = app.add_subcommand("stability-probe", "residual-map stability constant estimate");
  add_common(stab, stab_args, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      mfoc::Config cfg = validate_args.config_path.empty()
                             ? mfoc::Config{}
                             : mfoc::Config::parse_file(validate_args.config_path);
      mfoc::ValidationOptions vopt;
      vopt.corrupt_gradient = corrupt_gradient;
      return mfoc::run_validation_suite(cfg, resolve(validate_args, cfg, "validate"), vopt);
    }
    if (train->parsed()) {
      mfoc::Config cfg = mfoc::Config::parse_file(train_args.config_path);
      return mfoc::run_train(cfg, resolve(train_args, cfg, "train"));
    }
    if (conv->parsed()) {
      mfoc::Config cfg = mfoc::Config::parse_file(conv_args.config_path);
      return mfoc::run_convergence_study(cfg, resolve(conv_args, cfg, "converge-study"),
                                         dump_samples);
    }
    if (uniq->parsed()) {
      mfoc::Config cfg = mfoc::Config::parse_file(uniq_args.config_path);
      return mfoc::run_uniqueness_study(cfg, resolve(uniq_args, cfg, "uniqueness-study"));
    }
    if (hjb->parsed()) {
      mfoc::Config cfg = mfoc::Config::parse_file(hjb_args.config_path);
      return mfoc::run_hjb_check(cfg, resolve(hjb_args, cfg, "hjb-check"));
    }
    if (dpp->parsed()) {
      mfoc::Config cfg = mfoc::Config::parse_file(dpp_args.config_path);
      return mfoc::run_dpp_check(cfg, resolve(dpp_args, cfg, "dpp-check"));
    }
    if (stab->parsed()) {
      mfoc::Config cfg = mfoc::Config::parse_file(stab_args.config_path);
      return mfoc::run_stability_probe(cfg, resolve(stab_args, cfg, "stability-probe"));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
