// fairmix: command-line driver for the representation / debiasing pipeline.
//
//   fairmix <prepare|train-embed|debias|evaluate|pipeline> --config <path> [--seed N] [--out DIR]
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical failure.

#include "fairmix/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

void print_stage(const char* stage, const fairmix::StageArtifacts& produced, const fairmix::PipelineConfig& config) {
  std::cout << stage << ": wrote";
  for (const auto& f : produced.files) std::cout << ' ' << f;
  std::cout << " to " << config.out.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fair mixed-type representation learning"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<long long> seed;
  std::string out_dir;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "pipeline config file")->required();
    cmd->add_option("--seed", seed, "master seed (overrides the config)");
    cmd->add_option("--out", out_dir, "output directory (overrides the config)");
  };
  auto* prepare = app.add_subcommand("prepare", "encode the CSV and write the stratified split");
  auto* train_embed = app.add_subcommand("train-embed", "train both networks and write the mixed representation Z");
  auto* debias = app.add_subcommand("debias", "project Z away from the sensitive attributes");
  auto* evaluate = app.add_subcommand("evaluate", "probe accuracy / ROC-AUC and fairness reports for Z and Z_hat");
  auto* pipeline = app.add_subcommand("pipeline", "run every stage and write manifest.txt");
  for (auto* cmd : {prepare, train_embed, debias, evaluate, pipeline}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    fairmix::PipelineConfig config = fairmix::PipelineConfig::load(config_path);
    if (seed) {
      if (*seed < 0) throw fairmix::ConfigError("--seed must be non-negative");
      config.seed = static_cast<std::uint64_t>(*seed);
    }
    if (!out_dir.empty()) config.out = out_dir;

    if (prepare->parsed()) {
      print_stage("prepare", fairmix::cmd_prepare(config), config);
    } else if (train_embed->parsed()) {
      print_stage("train-embed", fairmix::cmd_train_embed(config), config);
    } else if (debias->parsed()) {
      print_stage("debias", fairmix::cmd_debias(config), config);
    } else if (evaluate->parsed()) {
      print_stage("evaluate", fairmix::cmd_evaluate(config), config);
      std::cout << fairmix::read_file(config.out / fairmix::artifact::report_biased)
                << fairmix::read_file(config.out / fairmix::artifact::report_debiased);
    } else if (pipeline->parsed()) {
      const fairmix::RunManifest manifest = fairmix::cmd_pipeline(config);
      std::cout << manifest.to_string();
    }
  } catch (const fairmix::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const fairmix::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const fairmix::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kOk;
}
