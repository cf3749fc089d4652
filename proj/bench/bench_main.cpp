// Benchmark: OpenMP kernels against their serial reference implementations.
// Each pair is checked for bitwise agreement before timing is reported.
//
// Usage: cfi_bench [n_records] [n_models] [threads]

#include <omp.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "cfi/influence.hpp"
#include "cfi/partition.hpp"
#include "cfi/sweep.hpp"
#include "cfi/synthetic.hpp"

using namespace cfi;

namespace {

struct Timing {
  double serial_s;
  double parallel_s;
};

void print_row(const char* name, Timing t, bool identical) {
  std::printf("%-24s %10.3fs %10.3fs %8.2fx   %s\n", name, t.serial_s,
              t.parallel_s, t.serial_s / t.parallel_s,
              identical ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n_records = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 200;
  const std::size_t n_models = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 512;
  const int threads = argc > 3 ? std::atoi(argv[3]) : omp_get_max_threads();
  const std::uint64_t seed = 99;

  std::printf("records=%zu models=%zu threads=%d\n\n", n_records, n_models,
              threads);
  std::printf("%-24s %11s %11s %9s\n", "kernel", "serial", "parallel",
              "speedup");

  LearnerSpec spec;
  spec.kind = LearnerSpec::Kind::kNgramLm;
  spec.ngram_order = 3;
  const Dataset data = generate_qa_dataset(n_records, 40 + 4 * n_records, 8,
                                           12, seed, 2);

  // Partition generation.
  omp_set_num_threads(threads);
  Timing pt{};
  double t0 = omp_get_wtime();
  const auto p_serial =
      generate_partition_matrix_serial(n_records, n_models, 0.5, seed);
  pt.serial_s = omp_get_wtime() - t0;
  t0 = omp_get_wtime();
  const auto p_parallel =
      generate_partition_matrix(n_records, n_models, 0.5, seed);
  pt.parallel_s = omp_get_wtime() - t0;
  print_row("partition generation", pt, p_serial.bits() == p_parallel.bits());

  // Model sweep.
  namespace fs = std::filesystem;
  const auto scratch =
      fs::temp_directory_path() / ("cfi_bench_" + std::to_string(::getpid()));
  RunConfig cfg;
  cfg.master_seed = seed;

  Timing st{};
  cfg.out_dir = (scratch / "serial").string();
  t0 = omp_get_wtime();
  const auto losses_serial = run_sweep_serial(data, p_parallel, spec, cfg);
  st.serial_s = omp_get_wtime() - t0;

  cfg.out_dir = (scratch / "parallel").string();
  SweepOptions opts;
  opts.workers = threads;
  t0 = omp_get_wtime();
  const auto losses_parallel = run_sweep(data, p_parallel, spec, cfg, opts);
  st.parallel_s = omp_get_wtime() - t0;
  print_row("model sweep", st,
            losses_serial.hash() == losses_parallel.hash());

  // Influence estimation.
  Timing it{};
  t0 = omp_get_wtime();
  const auto inf_serial = estimate_influence_serial(losses_parallel, p_parallel);
  it.serial_s = omp_get_wtime() - t0;
  t0 = omp_get_wtime();
  const auto inf_parallel = estimate_influence(losses_parallel, p_parallel);
  it.parallel_s = omp_get_wtime() - t0;
  print_row("influence estimation", it,
            inf_serial.hash() == inf_parallel.hash());

  fs::remove_all(scratch);
  return 0;
}
