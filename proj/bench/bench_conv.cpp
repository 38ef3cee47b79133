// SPDX-License-Identifier: Apache-2.0
//
// Serial reference loops against the im2col/GEMM kernels on generator-sized layers.
// Args: rows, in channels, out channels (4 columns, 3x3 kernel, stride 1, same padding).
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "beamcast/conv_kernels.hpp"

namespace {

using beamcast::ConvGeometry;
using beamcast::Padding;

struct Layer {
  ConvGeometry g;
  std::vector<float> x, k, y;

  explicit Layer(const benchmark::State& st) {
    const auto rows = static_cast<std::size_t>(st.range(0));
    const auto cin = static_cast<std::size_t>(st.range(1));
    const auto cout = static_cast<std::size_t>(st.range(2));
    g = ConvGeometry::for_conv(rows, 4, cin, 3, 3, cout, 1, 1, Padding::kSame);
    std::mt19937_64 rng(7);
    std::normal_distribution<float> n;
    x.resize(g.in_size());
    k.resize(g.kernel_size());
    y.resize(g.out_size());
    for (auto& v : x) v = n(rng);
    for (auto& v : k) v = n(rng);
  }
};

void args(benchmark::internal::Benchmark* b) {
  b->Args({8, 64, 64})->Args({8, 256, 256})->Args({16, 384, 128})->Args({32, 192, 64});
}

void BM_ForwardReference(benchmark::State& st) {
  Layer l(st);
  for (auto _ : st) {
    beamcast::reference::conv_forward<float>(l.g, l.x, l.k, l.y);
    benchmark::DoNotOptimize(l.y.data());
  }
}
BENCHMARK(BM_ForwardReference)->Apply(args);

void BM_ForwardKernel(benchmark::State& st) {
  Layer l(st);
  for (auto _ : st) {
    beamcast::kernels::conv_forward<float>(l.g, l.x, l.k, l.y);
    benchmark::DoNotOptimize(l.y.data());
  }
}
BENCHMARK(BM_ForwardKernel)->Apply(args);

void BM_InputAdjointReference(benchmark::State& st) {
  Layer l(st);
  for (auto _ : st) {
    beamcast::reference::conv_input_adjoint<float>(l.g, l.y, l.k, l.x);
    benchmark::DoNotOptimize(l.x.data());
  }
}
BENCHMARK(BM_InputAdjointReference)->Apply(args);

void BM_InputAdjointKernel(benchmark::State& st) {
  Layer l(st);
  for (auto _ : st) {
    beamcast::kernels::conv_input_adjoint<float>(l.g, l.y, l.k, l.x);
    benchmark::DoNotOptimize(l.x.data());
  }
}
BENCHMARK(BM_InputAdjointKernel)->Apply(args);

void BM_KernelAdjointReference(benchmark::State& st) {
  Layer l(st);
  std::vector<float> dk(l.g.kernel_size());
  for (auto _ : st) {
    beamcast::reference::conv_kernel_adjoint<float>(l.g, l.x, l.y, dk);
    benchmark::DoNotOptimize(dk.data());
  }
}
BENCHMARK(BM_KernelAdjointReference)->Apply(args);

void BM_KernelAdjointKernel(benchmark::State& st) {
  Layer l(st);
  std::vector<float> dk(l.g.kernel_size());
  for (auto _ : st) {
    beamcast::kernels::conv_kernel_adjoint<float>(l.g, l.x, l.y, dk);
    benchmark::DoNotOptimize(dk.data());
  }
}
BENCHMARK(BM_KernelAdjointKernel)->Apply(args);

}  // namespace

BENCHMARK_MAIN();
