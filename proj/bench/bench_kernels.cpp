// Serial reference kernels against their OpenMP counterparts.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "obstakit/kernels.hpp"
#include "obstakit/mesh.hpp"

using namespace obstakit;
namespace k = obstakit::kernels;

namespace {

std::vector<double> random_vector(std::size_t n) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> d;
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

template <bool Parallel>
void bm_matvec(benchmark::State& state) {
    const auto mesh = friedrichs_keller(static_cast<int>(state.range(0)));
    const SparseSPD a = assemble_stiffness(mesh);
    const auto x = random_vector(a.dim());
    std::vector<double> y(a.dim());
    for (auto _ : state) {
        if constexpr (Parallel) k::omp::csr_matvec(a.view(), x, y);
        else k::serial::csr_matvec(a.view(), x, y);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * a.matrix().nonZeros());
}

template <bool Parallel>
void bm_dot(benchmark::State& state) {
    const auto x = random_vector(state.range(0));
    const auto y = random_vector(state.range(0));
    for (auto _ : state) {
        double d = Parallel ? k::omp::dot(x, y) : k::serial::dot(x, y);
        benchmark::DoNotOptimize(d);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void bm_assemble(benchmark::State& state) {
    const auto mesh = friedrichs_keller(static_cast<int>(state.range(0)));
    const k::TriangleSoup soup{mesh.node_coords, mesh.triangles, mesh.dof_of_node, mesh.num_dofs()};
    for (auto _ : state) {
        auto rows = Parallel ? k::omp::assemble(soup, k::ElementForm::stiffness)
                             : k::serial::assemble(soup, k::ElementForm::stiffness);
        benchmark::DoNotOptimize(rows.data());
    }
    state.SetItemsProcessed(state.iterations() * mesh.triangles.size());
}

}  // namespace

BENCHMARK(bm_matvec<false>)->Name("matvec/serial")->Arg(128)->Arg(512);
BENCHMARK(bm_matvec<true>)->Name("matvec/omp")->Arg(128)->Arg(512);
BENCHMARK(bm_dot<false>)->Name("dot/serial")->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(bm_dot<true>)->Name("dot/omp")->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(bm_assemble<false>)->Name("assemble/serial")->Arg(128)->Arg(512);
BENCHMARK(bm_assemble<true>)->Name("assemble/omp")->Arg(128)->Arg(512);

BENCHMARK_MAIN();
