// Memory-kernel evaluation strategies side by side: the s-grid transport
// state (per-step advance + weighted sums) against the prony recursive
// convolution and the brute-force direct quadrature, plus the surrounding
// transform and resolvent costs.

#include "visco/history.hpp"
#include "visco/solver.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace visco;

namespace {

PastHistory::Term trig_term(int mode, double amp, double omega, double phase = 0.0) {
  PastHistory::Term t;
  t.kind = PastHistory::Kind::Trig;
  t.mode = mode;
  t.amp = amp;
  t.omega = omega;
  t.phase = phase;
  return t;
}

struct Setup {
  BasisPtr basis;
  MemoryKernel kernel;
  PastHistory past;
  double dt;

  explicit Setup(double dt_in, int modes = 16)
      : basis(SpectralBasis::interval(1.0, modes, 2)),
        kernel(MemoryKernel::prony(Eigen::Vector2d(1.0, 0.5), Eigen::Vector2d(1.0, 4.0))),
        past(basis, {trig_term(1, 0.5, 1.1), trig_term(2, 0.2, 0.7, 0.4)}),
        dt(dt_in) {}
};

}  // namespace

static void BM_HistoryAdvance(benchmark::State& state) {
  const double dt = 1.0 / static_cast<double>(state.range(0));
  Setup s(dt);
  auto init = init_history(s.past, s.kernel, dt);
  HistoryField w = init.w;
  URing ring(s.basis->modes(), w.grid_intervals() + 2);
  ring.push(init.u.coeffs);
  long k = 0;
  for (auto _ : state) {
    ++k;
    const Eigen::VectorXd u_new = s.past.eval(k * dt);
    w.advance(s.past.eval_dt((k - 1) * dt), s.past.eval_dt(k * dt), u_new, ring, k, dt);
    ring.push(u_new);
    benchmark::DoNotOptimize(w.data().data());
  }
  state.counters["s_nodes"] = static_cast<double>(w.nodes());
}
BENCHMARK(BM_HistoryAdvance)->Arg(64)->Arg(256)->Arg(1024);

static void BM_MemoryOperator(benchmark::State& state) {
  const double dt = 1.0 / static_cast<double>(state.range(0));
  Setup s(dt);
  auto init = init_history(s.past, s.kernel, dt);
  for (auto _ : state) {
    benchmark::DoNotOptimize(init.w.memory_operator().coeffs.data());
  }
  state.counters["s_nodes"] = static_cast<double>(init.w.nodes());
}
BENCHMARK(BM_MemoryOperator)->Arg(64)->Arg(256)->Arg(1024);

static void BM_PronyRecursiveStep(benchmark::State& state) {
  const double dt = 1.0 / static_cast<double>(state.range(0));
  Setup s(dt);
  PronyConvolution prony(s.kernel, s.basis, s.past, dt);
  long k = 0;
  for (auto _ : state) {
    ++k;
    prony.step(s.past.eval((k - 1) * dt), s.past.eval(k * dt), dt);
    benchmark::DoNotOptimize(prony.value(s.past.eval(k * dt)).integral.coeffs.data());
  }
}
BENCHMARK(BM_PronyRecursiveStep)->Arg(64)->Arg(256)->Arg(1024);

static void BM_DirectConvolution(benchmark::State& state) {
  const double dt = 1.0 / 64.0;
  Setup s(dt);
  Trajectory traj(&s.past, dt);
  const long n = state.range(0);
  for (long k = 0; k <= n; ++k) traj.push(s.past.eval(k * dt));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        direct_convolution_oracle(traj, s.kernel, s.basis, n * dt, dt).integral.coeffs.data());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_DirectConvolution)->Range(64, 1024)->Complexity();

static void BM_NodalTransformRoundTrip(benchmark::State& state) {
  auto basis = SpectralBasis::interval(1.0, static_cast<int>(state.range(0)), 2);
  Eigen::VectorXd c = Eigen::VectorXd::Random(basis->modes());
  for (auto _ : state) {
    benchmark::DoNotOptimize(basis->to_coeffs(basis->to_nodal(c)).data());
  }
}
BENCHMARK(BM_NodalTransformRoundTrip)->Arg(16)->Arg(32)->Arg(64);

static void BM_DampingResolvent(benchmark::State& state) {
  const auto damping = DampingSpec::power(3.0);
  double r = -2.0;
  for (auto _ : state) {
    r = (r < 2.0) ? r + 1e-3 : -2.0;
    benchmark::DoNotOptimize(resolvent_damping(r, 0.01, damping));
  }
}
BENCHMARK(BM_DampingResolvent);

static void BM_SolverStep(benchmark::State& state) {
  const double dt = 1.0 / static_cast<double>(state.range(0));
  Setup s(dt);
  ModelSpecs specs;
  specs.kernel = s.kernel;
  specs.damping = DampingSpec::power(3.0);
  specs.source = SourceSpec::power(3.0);
  StepperConfig cfg;
  cfg.dt = dt;
  SimState st = make_initial_state(s.past, specs, cfg);
  for (auto _ : state) {
    step(st, cfg, specs);
    benchmark::DoNotOptimize(st.u.coeffs.data());
  }
}
BENCHMARK(BM_SolverStep)->Arg(64)->Arg(256)->Arg(1024);

BENCHMARK_MAIN();
