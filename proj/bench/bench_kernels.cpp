// Timing comparison between the serial reference kernels and the
// OpenMP-parallel ones, plus the batched per-sample whitening loop.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "normkit/eig.hpp"
#include "normkit/mat.hpp"
#include "normkit/mlp.hpp"
#include "normkit/norm_layers.hpp"
#include "normkit/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace normkit;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void report(const std::string& name, double serial_ms, double parallel_ms) {
  std::printf("%-34s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx\n", name.c_str(),
              serial_ms, parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; both columns run the same code\n");
#endif

  Rng rng(1);

  {
    const Mat a = rng.normal_mat(384, 384);
    const Mat b = rng.normal_mat(384, 384);
    Mat sink;
    report("matmul 384x384",
           time_ms([&] { sink = ref::matmul(a, b); }, 5),
           time_ms([&] { sink = matmul(a, b); }, 5));
  }
  {
    const Mat a = rng.normal_mat(512, 2048);
    Mat sink;
    report("covariance 512x2048",
           time_ms([&] { sink = ref::matmul_nt(a, a); }, 3),
           time_ms([&] { sink = matmul_nt(a, a); }, 3));
  }
  {
    // batched per-sample group whitening, serial loop vs the NormLayer
    // OpenMP loop
    const std::size_t d = 256, n = 512;
    const Mat x = rng.normal_mat(d, n);
    const GroupSpec spec = GroupSpec::make(d, 16);
    WhiteningConfig cfg;
    cfg.method = WhitenMethod::Itn;

    const auto serial = [&] {
      Mat out(d, n);
      for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> col(d);
        for (std::size_t i = 0; i < d; ++i) col[i] = x(i, j);
        const std::vector<double> merged = gw_forward(col, spec, cfg);
        for (std::size_t i = 0; i < d; ++i) out(i, j) = merged[i];
      }
    };
    NormSetting setting;
    setting.kind = NormKind::GroupWhiten;
    setting.groups = 16;
    setting.whiten = cfg;
    NormLayer layer(d, setting);
    const auto parallel = [&] { layer.forward_train(x); };
    report("gw-itn layer 256ch/512 samples", time_ms(serial, 3), time_ms(parallel, 3));
  }
  return 0;
}
