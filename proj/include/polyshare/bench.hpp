#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "polyshare/model.hpp"
#include "polyshare/poly_protocols.hpp"
#include "polyshare/session.hpp"

namespace polyshare {

struct BenchRow {
  Protocol protocol = Protocol::espn;
  double delay_ms = 0.0;
  double mean_s = 0.0;
  double ci95_s = 0.0;  // 1.96 * sample sd / sqrt(trials)
  std::uint64_t rounds = 0;
  std::uint64_t bytes = 0;  // both parties, one activation layer
};

struct BenchConfig {
  Protocol protocol = Protocol::espn;
  std::size_t batch = std::size_t{1} << 15;
  std::vector<double> delays_ms{0.0};
  int trials = 20;
  u64 seed = 1;
  PolynomialSpec spec = PolynomialSpec::default_relu();
  int precision = 16;
  kernels::Exec exec = kernels::Exec::parallel;
  TransportMode mode = TransportMode::in_process;
};

// One activation layer of `batch` inputs uniform in [-range, range], timed on
// the client side, per delay.
std::vector<BenchRow> bench_activation(const BenchConfig& cfg);
std::string bench_csv(const std::vector<BenchRow>& rows);

struct FailProbRow {
  int exponent = 0;
  std::uint64_t trials = 0;
  std::uint64_t failures = 0;
  double rate = 0.0;
  double bound = 0.0;
};

// Monte-Carlo local-truncation failures at |v| = 2^exponent (v = -2^63 for 63).
FailProbRow failprob(int exponent, std::uint64_t trials, u64 seed, int bits = 16,
                     kernels::Exec exec = kernels::Exec::parallel);
std::string failprob_csv(const std::vector<FailProbRow>& rows);

struct RoundsRow {
  Protocol protocol = Protocol::espn;
  std::uint64_t predicted_rounds = 0;
  std::uint64_t rounds = 0;
  std::uint64_t activation_rounds = 0;
  std::uint64_t bytes = 0;
};

// Static round prediction next to a zero-delay dry run of the whole model.
std::vector<RoundsRow> rounds_table(const ModelGraph& graph, u64 seed,
                                    const std::vector<Protocol>& protocols = all_protocols());
std::string rounds_csv(const std::vector<RoundsRow>& rows);

}  // namespace polyshare
