#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "ivpp/cli.hpp"
#include "ivpp/error.hpp"

namespace {

const char* kind_label(ivpp::ErrorKind kind) {
  switch (kind) {
    case ivpp::ErrorKind::invalid_argument: return "invalid argument";
    case ivpp::ErrorKind::io: return "io";
    case ivpp::ErrorKind::format: return "format";
    case ivpp::ErrorKind::precondition: return "precondition";
    case ivpp::ErrorKind::numeric: return "numeric";
  }
  return "error";
}

nlohmann::json read_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) ivpp::fail(ivpp::ErrorKind::io, "cannot open config " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    ivpp::fail(ivpp::ErrorKind::format, "config " + path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intra-video positive pair pretraining toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string profile;
  std::string out;
  std::string checkpoint;
  std::string results;
  bool dry_run = false;
  bool print_config = false;

  app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Seed for splits, initialization and sampling");
  app.add_option("--profile", profile, "Default set")->check(CLI::IsMember({"desk", "protocol"}));
  app.add_option("--out", out, "Output directory");
  app.add_flag("--print-config", print_config, "Print the resolved config and exit");

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset (manifest, frames, ROIs)");
  auto* pretrain = app.add_subcommand("pretrain", "Pretrain one encoder");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint to evaluate");
  auto* sweep = app.add_subcommand("sweep", "Pretrain and evaluate the method x delta x weights grid");
  sweep->add_flag("--dry-run", dry_run, "Only enumerate the conditions");
  auto* stats = app.add_subcommand("stats", "ANOVA and post-hoc tests over a results CSV");
  stats->add_option("--results", results, "Results CSV");
  auto* report = app.add_subcommand("report", "Render a results table");
  report->add_option("--results", results, "Results CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : int(ivpp::ErrorKind::invalid_argument);
  }

  try {
    nlohmann::json user = read_config(config_path);
    if (!checkpoint.empty()) user["eval"]["checkpoint"] = checkpoint;
    if (!results.empty()) user["stats"]["results"] = results;
    std::optional<ivpp::cli::Profile> p;
    if (!profile.empty()) p = ivpp::cli::parse_profile(profile);
    std::optional<std::filesystem::path> o;
    if (!out.empty()) o = out;
    const auto config = ivpp::cli::resolve_config(user, p, seed, o);
    if (print_config) {
      std::cout << ivpp::cli::to_json(config).dump(2) << '\n';
      return 0;
    }

    if (*synth) ivpp::cli::cmd_synth(config);
    if (*pretrain) ivpp::cli::cmd_pretrain(config);
    if (*eval) ivpp::cli::cmd_eval(config);
    if (*sweep) ivpp::cli::cmd_sweep(config, dry_run);
    if (*stats) ivpp::cli::cmd_stats(config);
    if (*report) ivpp::cli::cmd_report(config);
  } catch (const ivpp::Error& e) {
    std::cerr << "error [" << kind_label(e.kind()) << "]: " << e.what() << '\n';
    return int(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
