// metahybrid: run the meta-hybrid experiment stage by stage.
//
//   metahybrid <stage> --config exp.json [--out DIR] [--seed N] [--threads N]
//   metahybrid run-all --config exp.json
//
// Exit status: 0 on success, 1 when a stage fails, 2 on usage or config errors.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "metahybrid/config.hpp"
#include "metahybrid/pipeline.hpp"

namespace mh = metahybrid;

int main(int argc, char** argv) {
  CLI::App app{"Meta-hybrid recommender experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> preset;
  std::optional<double> inner_ratio;
  std::optional<std::size_t> ndcg_cutoff;
  bool quiet = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "Experiment config (JSON)")->envname("METAHYBRID_CONFIG");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--seed", seed, "Master seed");
    sub->add_option("--threads", threads, "Worker threads, 0 = hardware");
    sub->add_option("--preset", preset, "Candidate preset: cf or mixed");
    sub->add_option("--inner-ratio", inner_ratio, "Run a single inner train ratio");
    sub->add_option("--ndcg-cutoff", ndcg_cutoff, "nDCG list length used for labels");
    sub->add_flag("-q,--quiet", quiet, "Only print errors");
  };
  std::vector<CLI::App*> subs;
  for (const auto& stage : mh::Pipeline::stages()) {
    subs.push_back(app.add_subcommand(stage, "Run the " + stage + " stage"));
  }
  subs.push_back(app.add_subcommand("run-all", "Run every stage in order"));
  for (auto* s : subs) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  mh::ExperimentConfig config;
  try {
    if (config_path.empty()) throw mh::InvalidArgument("no config given (--config or METAHYBRID_CONFIG)");
    config = mh::load_config(config_path);
    auto overrides = mh::overrides_from_env();
    if (out) overrides.output_dir = *out;
    if (seed) overrides.seed = *seed;
    if (threads) overrides.threads = *threads;
    if (preset) overrides.preset = *preset;
    if (inner_ratio) overrides.inner_ratio = *inner_ratio;
    if (ndcg_cutoff) overrides.ndcg_cutoff = *ndcg_cutoff;
    mh::apply_overrides(config, overrides);
  } catch (const std::exception& e) {
    std::cerr << "metahybrid: config error: " << e.what() << '\n';
    return 2;
  }

  try {
    mh::Pipeline pipeline(config, quiet ? nullptr : &std::cout);
    for (auto* s : subs) {
      if (!s->parsed()) continue;
      if (s->get_name() == "run-all") {
        pipeline.run_all();
      } else {
        pipeline.run(s->get_name());
      }
    }
  } catch (const mh::StageError& e) {
    std::cerr << "metahybrid: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "metahybrid: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
