// Micro benchmarks for the inner kernels: the kinetic inverse map, single
// integrator steps and the adaptive ODE solver.

#include <benchmark/benchmark.h>

#include "hamdesc/continuous.hpp"
#include "hamdesc/integrators.hpp"
#include "hamdesc/kinetic.hpp"
#include "hamdesc/numeric.hpp"
#include "hamdesc/objective.hpp"
#include "hamdesc/ode.hpp"

using namespace hamdesc;

namespace {

void BM_PhiGradInverse(benchmark::State& state) {
    const double a = 2.0, A = static_cast<double>(state.range(0)) / 3.0;  // 4/3 or 1
    // For A = 1 the gradient range is [0, 1).
    const auto s = A == 1.0 ? log_space(1e-6, 0.999, 64) : log_space(1e-6, 1e6, 64);
    for (auto _ : state) {
        double acc = 0.0;
        for (double v : s) acc += phi_grad_inverse(a, A, v);
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(s.size()));
}
BENCHMARK(BM_PhiGradInverse)->Arg(4)->Arg(3);

void BM_KineticGrad(benchmark::State& state) {
    const auto d = state.range(0);
    const PowerKinetic K{2.0, 2.0, NormDescriptor{4.0 / 3.0}};
    const Vector p = Vector::LinSpaced(d, -1.0, 2.0);
    for (auto _ : state) benchmark::DoNotOptimize(kinetic_grad(K, p));
}
BENCHMARK(BM_KineticGrad)->RangeMultiplier(8)->Range(2, 512);

void BM_Step(benchmark::State& state) {
    const auto method = static_cast<Method>(state.range(0));
    const ObjectiveSpec f = builtin("quartic2d");
    const PowerKinetic K = matched_kinetic(*f.certificate);
    IntegratorConfig cfg;
    cfg.method = method;
    cfg.epsilon = 1e-3;
    cfg.gamma = 0.5;
    State s{Vector::Constant(2, 1.0), Vector::Constant(2, -0.5)};
    for (auto _ : state) benchmark::DoNotOptimize(step(s, cfg, K, f));
    state.SetLabel(to_string(method));
}
BENCHMARK(BM_Step)
    ->Arg(static_cast<int>(Method::Implicit))
    ->Arg(static_cast<int>(Method::Explicit1))
    ->Arg(static_cast<int>(Method::Explicit2))
    ->Arg(static_cast<int>(Method::ClassicalMomentum))
    ->Arg(static_cast<int>(Method::GradientDescent));

void BM_DormandPrinceOscillator(benchmark::State& state) {
    OdeOptions o;
    o.rel_tol = 1e-9;
    o.abs_tol = 1e-12;
    const DormandPrince dp(o);
    const OdeRhs rhs = [](double, const Vector& y, Vector& dy) {
        dy[0] = y[1];
        dy[1] = -y[0] - 0.5 * y[1];
    };
    Vector y0(2);
    y0 << 1.0, 0.0;
    for (auto _ : state) benchmark::DoNotOptimize(dp.integrate(rhs, 0.0, y0, 20.0));
}
BENCHMARK(BM_DormandPrinceOscillator);

void BM_SimulateQuartic(benchmark::State& state) {
    const ObjectiveSpec f = builtin("quartic2d");
    const PowerKinetic K = matched_kinetic(*f.certificate);
    OdeConfig cfg;
    cfg.t_end = 10.0;
    const State s0{Vector::Constant(2, 1.0), Vector::Zero(2)};
    for (auto _ : state) benchmark::DoNotOptimize(simulate(K, f, 0.5, s0, cfg));
}
BENCHMARK(BM_SimulateQuartic)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
