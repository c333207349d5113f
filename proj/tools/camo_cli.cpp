// camo: command-line front end for the camouflage library.
//
//   camo synth     --out-dir DIR [--seed N] [...]      write secret/cover/test datasets
//   camo mmd-test  --pool FILE --sample FILE [--alpha] print the detector verdict as JSON
//   camo run       --config FILE --out DIR [--dump-model]

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "camo/camo.hpp"

namespace {

int run_synth(const camo::SyntheticSpec& spec, const std::string& out_dir, const std::string& format) {
  const auto task = camo::generate(spec);
  std::filesystem::create_directories(out_dir);
  const std::string ext = format == "jsonl" ? ".jsonl" : ".csv";
  const std::filesystem::path dir(out_dir);
  camo::save_dataset((dir / ("secret" + ext)).string(), task.secret);
  camo::save_dataset((dir / ("cover" + ext)).string(), task.cover);
  camo::save_dataset((dir / ("secret_test" + ext)).string(), task.secret_test);
  std::cout << camo::json{{"secret", (dir / ("secret" + ext)).string()},
                          {"cover", (dir / ("cover" + ext)).string()},
                          {"secret_test", (dir / ("secret_test" + ext)).string()}}
                   .dump(2)
            << '\n';
  return 0;
}

int run_mmd_test(const std::string& pool_path, const std::string& sample_path, double alpha) {
  camo::LoadOptions opts;
  opts.role = camo::Role::CamouflagePool;
  const auto pool = camo::load_dataset(pool_path, opts);
  opts.role = camo::Role::TrainingSet;
  const auto sample = camo::load_dataset(sample_path, opts);
  if (sample.empty()) throw camo::Error("empty dataset");
  const auto cfg = camo::calibrate_detector(pool, alpha);
  const auto verdict = camo::psi(pool, sample, cfg);
  camo::json out = verdict;
  out["sigma"] = cfg.sigma;
  out["c"] = cfg.label_scale_c;
  std::cout << out.dump(2) << '\n';
  return 0;
}

int run_run(const std::string& config_path, const std::string& out_dir, bool dump_model) {
  const auto cfg = camo::load_config(config_path);
  const auto outcome = camo::run_experiment(cfg, out_dir, dump_model);
  std::cout << camo::json(outcome.row).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-set camouflage: solvers, detector and experiment harness"};
  app.require_subcommand(1);

  camo::SyntheticSpec spec;
  std::string synth_dir;
  std::string synth_format = "csv";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic secret/cover task");
  synth->add_option("--out-dir", synth_dir, "Output directory")->required();
  synth->add_option("--seed", spec.seed, "Generator seed");
  synth->add_option("--dimension", spec.dimension, "Feature dimension")->check(CLI::Range(2, 1 << 20));
  synth->add_option("--secret-separation", spec.secret_separation, "Distance between secret blob means");
  synth->add_option("--secret-std", spec.secret_std, "Secret blob standard deviation");
  synth->add_option("--secret-train-per-class", spec.secret_train_per_class);
  synth->add_option("--secret-test-per-class", spec.secret_test_per_class);
  synth->add_option("--cover-separation", spec.cover_separation, "Distance between cover blob means");
  synth->add_option("--cover-std", spec.cover_std, "Cover blob standard deviation");
  synth->add_option("--cover-per-class", spec.cover_per_class);
  synth->add_option("--rotation", spec.rotation, "Angle (radians) between secret and cover directions");
  synth->add_option("--format", synth_format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));

  std::string pool_path, sample_path;
  double alpha = 0.05;
  auto* mmd = app.add_subcommand("mmd-test", "Two-sample MMD test of a sample against a pool");
  mmd->add_option("--pool", pool_path, "Camouflage pool dataset")->required()->check(CLI::ExistingFile);
  mmd->add_option("--sample", sample_path, "Candidate training set")->required()->check(CLI::ExistingFile);
  mmd->add_option("--alpha", alpha, "Test level")->check(CLI::Range(0.0, 1.0));

  std::string config_path, out_dir;
  bool dump_model = false;
  auto* run = app.add_subcommand("run", "Run the full experiment protocol from a JSON config or manifest");
  run->add_option("--config", config_path, "Run config (or a previous manifest.json)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_flag("--dump-model", dump_model, "Also write model.json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return run_synth(spec, synth_dir, synth_format);
    if (*mmd) return run_mmd_test(pool_path, sample_path, alpha);
    if (*run) return run_run(config_path, out_dir, dump_model);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
