#include "hyperspline/workflow.hpp"

#include <cstdlib>
#include <sstream>

#include "hyperspline/error.hpp"
#include "hyperspline/operators.hpp"

namespace hyperspline {

namespace {

std::string opt_double(const std::map<Mode, double>& m, Mode mode) {
  const auto it = m.find(mode);
  return it == m.end() ? std::string() : format_double(it->second);
}

struct Loaded {
  std::vector<Sample> samples;
  std::string sha;
};

Loaded load(const RunConfig& cfg) {
  const std::string bytes = read_text(cfg.data);
  std::istringstream in(bytes);
  return {parse_samples(in, cfg.data.string(), cfg.stress_scale), sha256_hex(bytes)};
}

}  // namespace

ModelSpec build_spec(const RunConfig& cfg, ModelKind kind, std::span<const Sample> samples) {
  DomainMapConfig base;
  base.delta = cfg.delta;
  base.use_polyconvex = cfg.use_polyconvex;
  ModelSpec spec = default_spec(kind, samples, cfg.n1, cfg.n2, base);
  if (!cfg.sites1.empty()) spec.sites1 = cfg.sites1;
  if (!cfg.sites2.empty()) spec.sites2 = cfg.sites2;
  spec.validate();
  return spec;
}

CalibrationProblem build_problem(const ModelBasis& basis, const RunConfig& cfg, std::span<const Sample> samples,
                                 double lambda_pen) {
  Design d = assemble_design(basis, samples);
  InequalityOperator ineq = inequality_operator(basis, cfg.constraints);
  CalibrationProblem p;
  p.a = std::move(d.a);
  p.y = std::move(d.y);
  p.penalty = curvature_operator(basis, cfg.quad_order).rows;
  p.lambda_pen = lambda_pen;
  p.ineq = std::move(ineq.rows);
  p.ineq_rhs = std::move(ineq.rhs);
  p.fixed_zero = fixed_zero_indices(basis.spec());
  return p;
}

LCurveResult run_lcurve(const RunConfig& cfg, ModelKind kind, std::span<const Sample> samples) {
  const ModelBasis basis(build_spec(cfg, kind, samples));
  const CalibrationProblem p = build_problem(basis, cfg, samples, 0.0);
  return lcurve(p, log_grid(cfg.lcurve_min, cfg.lcurve_max, cfg.lcurve_count));
}

CalibrationResult calibrate(const RunConfig& cfg, ModelKind kind, std::span<const Sample> samples,
                            const std::string& data_sha256) {
  if (samples.empty()) throw InputError("calibrate: empty dataset");
  const ModelBasis basis(build_spec(cfg, kind, samples));
  CalibrationProblem p = build_problem(basis, cfg, samples, 0.0);

  CalibrationResult r;
  if (kind == ModelKind::Separable) {
    p.lambda_pen = cfg.separable_lambda_pen;
  } else if (cfg.lambda_pen) {
    p.lambda_pen = *cfg.lambda_pen;
  } else {
    r.lcurve = lcurve(p, log_grid(cfg.lcurve_min, cfg.lcurve_max, cfg.lcurve_count));
    p.lambda_pen = r.lcurve->lambda_chosen;
  }
  r.solution = solve(p);
  r.activation = activation(p.a);

  ModelFile& f = r.model;
  f.state = {basis.spec(), r.solution.theta, p.fixed_zero};
  f.lambda_pen = p.lambda_pen;
  f.metrics = metrics(Model(f.state), samples);
  f.iterations = r.solution.iterations;
  f.kkt_residual = r.solution.kkt_residual;
  f.ridge_applied = r.solution.ridge_applied;
  f.stress_unit = cfg.stress_unit;
  f.data_sha256 = data_sha256;
  f.timestamp = utc_timestamp();
  return r;
}

std::string predictions_csv(const Model& model, std::span<const Sample> samples) {
  std::string out = "mode,stretch,stress_exp,stress_model\n";
  for (const Sample& s : samples) {
    out += std::string(to_string(s.mode)) + "," + format_double(s.stretch) + "," + format_double(s.stress) + "," +
           format_double(model.predict_stress(s.mode, s.stretch)) + "\n";
  }
  return out;
}

std::string activation_csv(const ModelSpec& spec, const ActivationReport& report) {
  std::string out = "i,j,site1,site2,a,log10_rel\n";
  auto row = [&](int i, int j, const std::string& s1, const std::string& s2, Eigen::Index p) {
    out += std::to_string(i) + "," + std::to_string(j) + "," + s1 + "," + s2 + "," + format_double(report.a(p)) + "," +
           format_double(report.log10_rel(p)) + "\n";
  };
  const int n1 = spec.n1();
  if (spec.kind == ModelKind::Separable) {
    for (int i = 0; i < n1; ++i) row(i, -1, format_double(spec.sites1[i]), "", i);
    for (int j = 0; j < spec.n2(); ++j) row(-1, j, "", format_double(spec.sites2[j]), n1 + j);
    return out;
  }
  for (int j = 0; j < spec.n2(); ++j) {
    for (int i = 0; i < n1; ++i) row(i, j, format_double(spec.sites1[i]), format_double(spec.sites2[j]), i + n1 * j);
  }
  return out;
}

std::string lcurve_csv(const LCurveResult& r) {
  std::string out = "lambda,misfit,seminorm,kappa,chosen\n";
  for (std::size_t k = 0; k < r.lambdas.size(); ++k) {
    out += format_double(r.lambdas[k]) + "," + format_double(r.misfits[k]) + "," + format_double(r.seminorms[k]) + "," +
           format_double(r.kappas[k]) + "," + (k == r.corner_index ? "1" : "0") + "\n";
  }
  return out;
}

std::string prediction_table_csv(const Model& model, std::span<const std::pair<Mode, double>> rows) {
  std::string out = "mode,stretch,stress,extrapolated\n";
  for (const auto& [mode, stretch] : rows) {
    const Prediction p = model.predict_clamped(mode, stretch);
    out += std::string(to_string(mode)) + "," + format_double(stretch) + "," + format_double(p.stress) + "," +
           (p.extrapolated ? "1" : "0") + "\n";
  }
  return out;
}

std::vector<CompareRow> compare(const RunConfig& cfg, std::span<const ModelKind> kinds, std::span<const Sample> samples) {
  if (kinds.size() < 2) throw InputError("compare: need at least two model kinds");
  std::vector<CompareRow> rows;
  for (const ModelKind kind : kinds) {
    const CalibrationResult r = calibrate(cfg, kind, samples);
    rows.push_back({kind, r.model.metrics, r.model.state.spec.parameter_count(), r.solution.wall_time,
                    r.solution.iterations, r.model.lambda_pen});
  }
  return rows;
}

std::string summary_csv(std::span<const CompareRow> rows) {
  // Timings are zeroed under SOURCE_DATE_EPOCH so the table is reproducible.
  const bool pinned = std::getenv("SOURCE_DATE_EPOCH") != nullptr;
  std::string out = "kind,mse_ut,mse_bt,mse_ps,r2_ut,r2_bt,r2_ps,mse_combined,params,wall_time,iterations,lambda_pen\n";
  for (const CompareRow& r : rows) {
    out += std::string(to_string(r.kind));
    for (const Mode m : kAllModes) out += "," + opt_double(r.metrics.mse, m);
    for (const Mode m : kAllModes) out += "," + opt_double(r.metrics.r2, m);
    out += "," + format_double(r.metrics.mse_combined) + "," + std::to_string(r.params) + "," +
           format_double(pinned ? 0.0 : r.wall_time) + "," + std::to_string(r.iterations) + "," + format_double(r.lambda_pen) + "\n";
  }
  return out;
}

OutputFiles calibrate_outputs(const RunConfig& cfg) {
  const Loaded data = load(cfg);
  const CalibrationResult r = calibrate(cfg, cfg.kind, data.samples, data.sha);
  const Model model(r.model.state);
  OutputFiles files;
  files.emplace_back(cfg.output / "model.json", to_json(r.model));
  files.emplace_back(cfg.output / "predictions.csv", predictions_csv(model, data.samples));
  files.emplace_back(cfg.output / "activation.csv", activation_csv(r.model.state.spec, r.activation));
  if (r.lcurve) files.emplace_back(cfg.output / "lcurve.csv", lcurve_csv(*r.lcurve));
  return files;
}

OutputFiles lcurve_outputs(const RunConfig& cfg) {
  const Loaded data = load(cfg);
  return {{cfg.output / "lcurve.csv", lcurve_csv(run_lcurve(cfg, cfg.kind, data.samples))}};
}

OutputFiles compare_outputs(const RunConfig& cfg, std::span<const ModelKind> kinds) {
  const Loaded data = load(cfg);
  const std::vector<CompareRow> rows = compare(cfg, kinds, data.samples);
  return {{cfg.output / "summary.csv", summary_csv(rows)}};
}

OutputFiles predict_outputs(const std::filesystem::path& model_path, const std::filesystem::path& at_path,
                            const std::filesystem::path& output_dir) {
  const ModelFile f = read_model_file(model_path);
  const auto rows = read_stretches(at_path);
  return {{output_dir / "predict.csv", prediction_table_csv(Model(f.state), rows)}};
}

}  // namespace hyperspline
