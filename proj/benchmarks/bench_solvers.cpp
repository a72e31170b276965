#include <benchmark/benchmark.h>

#include "lininv/oracle.hpp"
#include "lininv/problems.hpp"
#include "lininv/solvers.hpp"

using namespace lininv;

namespace {

const InverseProblem& phillips_200() {
  static InverseProblem p = make_problem("phillips", 200, 0.0, 1e-2, 1);
  return p;
}

void bm_generate_phillips(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  for (auto _ : state) {
    auto pair = generate_problem("phillips", n);
    benchmark::DoNotOptimize(pair.first.data());
  }
}
BENCHMARK(bm_generate_phillips)->Arg(200)->Arg(1000);

void bm_compute_norms(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  auto mat = generate_problem("gravity", n).first;
  for (auto _ : state) {
    auto op = compute_norms(BlockOperator::row_partitioned(mat));
    benchmark::DoNotOptimize(op.op_norm());
  }
}
BENCHMARK(bm_compute_norms)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void bm_svrg_epoch(benchmark::State& state) {
  const auto& p = phillips_200();
  SolverConfig cfg;
  cfg.method = Method::svrg;
  cfg.c0 = 1.0 / p.op.max_block_norm_sq();
  cfg.M = 2 * p.op.block_count();
  cfg.stopping = StoppingRule::max_epochs();
  cfg.max_epochs = 30;
  for (auto _ : state) {
    auto rec = svrg_run(p, cfg);
    benchmark::DoNotOptimize(rec.x_final.data());
  }
  state.SetItemsProcessed(state.iterations() * 30);
}
BENCHMARK(bm_svrg_epoch)->Unit(benchmark::kMillisecond);

void bm_landweber_iteration(benchmark::State& state) {
  const auto& p = phillips_200();
  SolverConfig cfg;
  cfg.method = Method::landweber;
  cfg.c0 = 1.0 / (p.op.op_norm() * p.op.op_norm());
  cfg.max_epochs = 50;
  for (auto _ : state) {
    auto rec = landweber_run(p, cfg);
    benchmark::DoNotOptimize(rec.x_final.data());
  }
  state.SetItemsProcessed(state.iterations() * 50);
}
BENCHMARK(bm_landweber_iteration)->Unit(benchmark::kMillisecond);

void bm_enumeration(benchmark::State& state) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 0.5;
  InverseProblem p;
  p.op = compute_norms(BlockOperator::row_partitioned(std::move(a)));
  p.x_exact = Vector::Ones(2);
  p.y_exact = p.op.entries() * p.x_exact;
  p.y_noisy = p.y_exact;
  p.x0 = Vector::Zero(2);
  SolverConfig cfg;
  cfg.c0 = 0.5;
  cfg.M = 4;
  const auto k = static_cast<Eigen::Index>(state.range(0));
  for (auto _ : state) {
    auto en = oracle::enumerate_expectation(p, cfg, p.op, k);
    benchmark::DoNotOptimize(en.mean_sq_error);
  }
}
BENCHMARK(bm_enumeration)->Arg(8)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
