// Command-line driver: calibrate, predict, lcurve and compare.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hyperspline/error.hpp"
#include "hyperspline/io.hpp"
#include "hyperspline/workflow.hpp"

namespace hs = hyperspline;
namespace fs = std::filesystem;

namespace {

constexpr int kInputFailure = 2;
constexpr int kNumericalFailure = 3;

hs::RunConfig load_config(const std::string& path, const std::string& output) {
  hs::RunConfig cfg = hs::read_config(path);
  if (!output.empty()) cfg.output = output;
  const auto counts = hs::mode_counts(hs::read_samples(cfg.data, cfg.stress_scale));
  std::cerr << "data " << cfg.data.string() << ":";
  for (const auto& [mode, n] : counts) std::cerr << " " << hs::to_string(mode) << "=" << n;
  std::cerr << "\n";
  return cfg;
}

std::vector<hs::ModelKind> parse_kinds(const std::string& text) {
  std::vector<hs::ModelKind> kinds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) kinds.push_back(hs::parse_kind(item));
  return kinds;
}

void emit(const hs::OutputFiles& files) {
  hs::write_files_atomic(files);
  for (const auto& [path, content] : files) std::cout << path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained spline strain-energy calibration"};
  app.require_subcommand(1);

  std::string config;
  std::string output;
  std::string model_path;
  std::string at_path;
  std::string kinds = "separable,surface,mapped";

  CLI::App* calibrate = app.add_subcommand("calibrate", "Calibrate one model and write model, predictions, activation");
  calibrate->add_option("--config", config, "JSON run configuration")->required();
  calibrate->add_option("--output", output, "Output directory (overrides the config)");

  CLI::App* predict = app.add_subcommand("predict", "Evaluate a saved model at requested stretches");
  predict->add_option("--model", model_path, "model.json")->required();
  predict->add_option("--at", at_path, "CSV with mode,stretch rows")->required();
  predict->add_option("--output", output, "Output directory (default: current)");

  CLI::App* lc = app.add_subcommand("lcurve", "Sweep the penalty weight and write the L-curve");
  lc->add_option("--config", config, "JSON run configuration")->required();
  lc->add_option("--output", output, "Output directory (overrides the config)");

  CLI::App* cmp = app.add_subcommand("compare", "Calibrate several model kinds and summarize");
  cmp->add_option("--config", config, "JSON run configuration")->required();
  cmp->add_option("--kinds", kinds, "Comma-separated kinds: separable, surface, mapped");
  cmp->add_option("--output", output, "Output directory (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputFailure;
  }

  try {
    if (calibrate->parsed()) {
      emit(hs::calibrate_outputs(load_config(config, output)));
    } else if (predict->parsed()) {
      emit(hs::predict_outputs(model_path, at_path, output.empty() ? fs::path(".") : fs::path(output)));
    } else if (lc->parsed()) {
      emit(hs::lcurve_outputs(load_config(config, output)));
    } else if (cmp->parsed()) {
      const auto list = parse_kinds(kinds);
      emit(hs::compare_outputs(load_config(config, output), list));
    }
  } catch (const hs::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputFailure;
  } catch (const hs::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputFailure;
  }
  return 0;
}
