// OpenMP kernels vs the serial direct-loop reference. Run with
//   ./build/bench/bench_kernels
// OMP_NUM_THREADS controls the parallel side.

#include <benchmark/benchmark.h>

#include "mrecnn/kernels.hpp"
#include "mrecnn/reference.hpp"
#include "mrecnn/rng.hpp"

namespace {

using namespace mrecnn;

Tensor random_tensor(std::vector<int> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) {
        t[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
    }
    return t;
}

struct ConvCase {
    Tensor input;
    ConvParams params;
};

ConvCase conv_case(int n, int ic, int hw, int oc, int k) {
    Rng rng(42);
    ConvCase c{random_tensor({n, ic, hw, hw}, rng), {}};
    c.params.weights = random_tensor({oc, ic, k, k}, rng);
    c.params.bias = random_tensor({oc}, rng);
    c.params.stride = 1;
    c.params.pad = k / 2;
    return c;
}

void BM_conv2d_omp(benchmark::State& state) {
    const auto c = conv_case(4, 16, static_cast<int>(state.range(0)), 32, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv2d_forward(c.input, c.params));
    }
}

void BM_conv2d_reference(benchmark::State& state) {
    const auto c = conv_case(4, 16, static_cast<int>(state.range(0)), 32, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ref::conv2d_forward_direct(c.input, c.params));
    }
}

void BM_linear_omp(benchmark::State& state) {
    Rng rng(7);
    const Tensor input = random_tensor({32, 2048}, rng);
    const Tensor weights = random_tensor({2048, 256}, rng);
    const Tensor bias = random_tensor({256}, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(linear_forward(input, weights, bias));
    }
}

void BM_linear_reference(benchmark::State& state) {
    Rng rng(7);
    const Tensor input = random_tensor({32, 2048}, rng);
    const Tensor weights = random_tensor({2048, 256}, rng);
    const Tensor bias = random_tensor({256}, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ref::linear_forward_direct(input, weights, bias));
    }
}

// note: the parallel kernel also records the argmax index map for backward;
// the reference computes the pooled values only
void BM_maxpool_omp(benchmark::State& state) {
    Rng rng(3);
    const Tensor input = random_tensor({8, 64, 64, 64}, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(maxpool2x2_forward(input));
    }
}

void BM_maxpool_reference(benchmark::State& state) {
    Rng rng(3);
    const Tensor input = random_tensor({8, 64, 64, 64}, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ref::maxpool2x2_forward_direct(input));
    }
}

} // namespace

BENCHMARK(BM_conv2d_omp)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv2d_reference)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_linear_omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_linear_reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_maxpool_omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_maxpool_reference)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
