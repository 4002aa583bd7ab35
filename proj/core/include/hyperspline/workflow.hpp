#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hyperspline/io.hpp"
#include "hyperspline/model.hpp"
#include "hyperspline/solver.hpp"

namespace hyperspline {

using OutputFiles = std::vector<std::pair<std::filesystem::path, std::string>>;

ModelSpec build_spec(const RunConfig& cfg, ModelKind kind, std::span<const Sample> samples);

/// Design, curvature penalty, constraints and fixed parameters for a spec.
CalibrationProblem build_problem(const ModelBasis& basis, const RunConfig& cfg, std::span<const Sample> samples,
                                 double lambda_pen);

struct CalibrationResult {
  ModelFile model;
  Solution solution;
  ActivationReport activation;
  std::optional<LCurveResult> lcurve;
};

/// Full calibration of one model kind. Separable models use
/// cfg.separable_lambda_pen; surface kinds use cfg.lambda_pen or, when it is
/// unset, the L-curve choice. Nothing is written.
CalibrationResult calibrate(const RunConfig& cfg, ModelKind kind, std::span<const Sample> samples,
                            const std::string& data_sha256 = {});

LCurveResult run_lcurve(const RunConfig& cfg, ModelKind kind, std::span<const Sample> samples);

/// mode,stretch,stress_exp,stress_model
std::string predictions_csv(const Model& model, std::span<const Sample> samples);
/// i,j,site1,site2,a,log10_rel; Separable rows use j = -1 for W1 and i = -1
/// for W2 with the unused site left empty.
std::string activation_csv(const ModelSpec& spec, const ActivationReport& report);
/// lambda,misfit,seminorm,kappa,chosen
std::string lcurve_csv(const LCurveResult& result);
/// mode,stretch,stress,extrapolated
std::string prediction_table_csv(const Model& model, std::span<const std::pair<Mode, double>> rows);

struct CompareRow {
  ModelKind kind = ModelKind::Separable;
  FitMetrics metrics;
  int params = 0;
  double wall_time = 0.0;
  int iterations = 0;
  double lambda_pen = 0.0;
};

std::vector<CompareRow> compare(const RunConfig& cfg, std::span<const ModelKind> kinds, std::span<const Sample> samples);
/// kind,mse_ut,mse_bt,mse_ps,r2_ut,r2_bt,r2_ps,mse_combined,params,wall_time,iterations,lambda_pen
std::string summary_csv(std::span<const CompareRow> rows);

/// Loads data and config-derived outputs; the caller writes them atomically.
OutputFiles calibrate_outputs(const RunConfig& cfg);
OutputFiles lcurve_outputs(const RunConfig& cfg);
OutputFiles compare_outputs(const RunConfig& cfg, std::span<const ModelKind> kinds);
OutputFiles predict_outputs(const std::filesystem::path& model_path, const std::filesystem::path& at_path,
                            const std::filesystem::path& output_dir);

}  // namespace hyperspline
