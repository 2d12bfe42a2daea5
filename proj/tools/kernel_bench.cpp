// Benchmark of the dense kernels and the Monte-Carlo fan-out: serial
// reference vs the OpenMP production path.

#include <omp.h>

#include <Eigen/Dense>
#include <chrono>
#include <cstdio>

#include "sbrrm/channel.hpp"
#include "sbrrm/linalg.hpp"
#include "sbrrm/rng.hpp"
#include "sbrrm/system_model.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double time_once(const std::function<void()>& fn) {
  const auto t0 = Clock::now();
  fn();
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::MatrixXd make_spd(int n, std::uint64_t seed) {
  sbrrm::RandomStream stream(seed);
  Eigen::MatrixXd a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = stream.normal();
  Eigen::MatrixXd spd = a * a.transpose();
  spd.diagonal().array() += n;
  return spd;
}

void bench_cholesky() {
  std::printf("cholesky (lower, in-place)\n");
  std::printf("%8s %14s %14s %10s\n", "n", "reference[s]", "blocked[s]", "speedup");
  for (const int n : {256, 512, 1024, 1550}) {
    const Eigen::MatrixXd spd = make_spd(n, 7);
    Eigen::MatrixXd a = spd;
    const double t_ref = time_once([&] { sbrrm::linalg::cholesky_in_place_reference(a); });
    Eigen::MatrixXd b = spd;
    const double t_par = time_once([&] { sbrrm::linalg::cholesky_in_place(b); });
    const double diff = (a.triangularView<Eigen::Lower>().toDenseMatrix() -
                         b.triangularView<Eigen::Lower>().toDenseMatrix())
                            .cwiseAbs()
                            .maxCoeff();
    std::printf("%8d %14.4f %14.4f %9.2fx   (max diff %.2e)\n", n, t_ref, t_par,
                t_ref / t_par, diff);
  }
}

void bench_channel_batch() {
  std::printf("\nchannel generation batch (64 realizations)\n");
  sbrrm::SystemConfig cfg;
  cfg.num_clusters = 3;
  cfg.ue_per_cluster = 8;
  cfg.set_uniform_weights();
  const sbrrm::TopologyParams topo_params;
  const sbrrm::ChannelModelParams chan_params;
  const sbrrm::Topology topo =
      sbrrm::make_default_topology(cfg, topo_params, sbrrm::RandomStream(1));
  const int batch = 64;
  std::vector<std::string> serial_hash(batch), parallel_hash(batch);
  const double t_serial = time_once([&] {
    for (int i = 0; i < batch; ++i)
      serial_hash[i] =
          sbrrm::channel_hash(sbrrm::generate_channels(topo, cfg, chan_params, 100 + i));
  });
  const double t_parallel = time_once([&] {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < batch; ++i)
      parallel_hash[i] =
          sbrrm::channel_hash(sbrrm::generate_channels(topo, cfg, chan_params, 100 + i));
  });
  const bool identical = serial_hash == parallel_hash;
  std::printf("serial %.4fs, OpenMP %.4fs, speedup %.2fx, identical=%s\n", t_serial,
              t_parallel, t_serial / t_parallel, identical ? "yes" : "NO");
}

}  // namespace

int main() {
  std::printf("threads available: %d\n\n", omp_get_max_threads());
  bench_cholesky();
  bench_channel_batch();
  return 0;
}
