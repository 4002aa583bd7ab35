#include <benchmark/benchmark.h>

#include "hyperspline/io.hpp"
#include "hyperspline/workflow.hpp"

namespace hs = hyperspline;

namespace {

const std::vector<hs::Sample>& treloar() {
  static const auto data = hs::read_samples(HYPERSPLINE_DATA_DIR "/treloar.csv");
  return data;
}

hs::RunConfig config(double lambda) {
  hs::RunConfig c;
  c.data = "in-memory";
  c.lambda_pen = lambda;
  return c;
}

void BM_Assemble(benchmark::State& state) {
  const auto kind = static_cast<hs::ModelKind>(state.range(0));
  const auto cfg = config(5e-6);
  for (auto _ : state) {
    const hs::ModelBasis basis(hs::build_spec(cfg, kind, treloar()));
    benchmark::DoNotOptimize(hs::build_problem(basis, cfg, treloar(), 5e-6));
  }
}
BENCHMARK(BM_Assemble)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_Solve(benchmark::State& state) {
  const auto kind = static_cast<hs::ModelKind>(state.range(0));
  const auto cfg = config(5e-6);
  const hs::ModelBasis basis(hs::build_spec(cfg, kind, treloar()));
  const auto problem = hs::build_problem(basis, cfg, treloar(), 5e-6);
  int iterations = 0;
  for (auto _ : state) {
    const auto s = hs::solve(problem);
    iterations = s.iterations;
    benchmark::DoNotOptimize(s.theta.data());
  }
  state.counters["qp_iterations"] = iterations;
}
BENCHMARK(BM_Solve)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_Calibrate(benchmark::State& state) {
  const auto cfg = config(5e-6);
  for (auto _ : state) benchmark::DoNotOptimize(hs::calibrate(cfg, hs::ModelKind::SurfaceMapped, treloar()));
}
BENCHMARK(BM_Calibrate)->Unit(benchmark::kMillisecond);

void BM_LCurve(benchmark::State& state) {
  hs::RunConfig cfg = config(0.0);
  for (auto _ : state) benchmark::DoNotOptimize(hs::run_lcurve(cfg, hs::ModelKind::SurfaceMapped, treloar()));
}
BENCHMARK(BM_LCurve)->Unit(benchmark::kSecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
