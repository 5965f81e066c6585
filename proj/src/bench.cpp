#include "polyshare/bench.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "polyshare/engine.hpp"
#include "polyshare/errors.hpp"

namespace polyshare {

std::vector<BenchRow> bench_activation(const BenchConfig& cfg) {
  if (cfg.trials < 1) throw ConfigError("need at least one trial");
  if (cfg.batch == 0) throw ConfigError("batch must be positive");
  const RingConfig ring{64, cfg.precision};
  std::vector<BenchRow> rows;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> dist(-cfg.spec.range, cfg.spec.range);

  for (double delay : cfg.delays_ms) {
    BenchRow row{cfg.protocol, delay, 0.0, 0.0, 0, 0};
    std::vector<double> times;
    for (int t = 0; t < cfg.trials; ++t) {
      std::vector<u64> raw(cfg.batch);
      for (auto& v : raw) v = encode(dist(rng), ring).raw;
      auto [xa, xb] = share(raw, ring.precision, rng);

      TwoPartyOptions opts;
      opts.net = NetworkConfig{delay, std::nullopt, cfg.mode};
      opts.dealer_seed = rng();
      opts.ring = ring;
      opts.exec = cfg.exec;
      double elapsed = 0.0;
      const auto run = run_two_party(
          opts,
          [&](Session& s) {
            const auto start = std::chrono::steady_clock::now();
            apply_activation(s, cfg.protocol, xa, cfg.spec);
            elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          },
          [&](Session& s) { apply_activation(s, cfg.protocol, xb, cfg.spec); });
      times.push_back(elapsed);
      row.rounds = run.a.rounds;
      row.bytes = run.a.total_bytes();
    }
    double sum = 0.0;
    for (double v : times) sum += v;
    row.mean_s = sum / static_cast<double>(times.size());
    if (times.size() > 1) {
      double ss = 0.0;
      for (double v : times) ss += (v - row.mean_s) * (v - row.mean_s);
      const double sd = std::sqrt(ss / static_cast<double>(times.size() - 1));
      row.ci95_s = 1.96 * sd / std::sqrt(static_cast<double>(times.size()));
    }
    rows.push_back(row);
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "protocol,delay_ms,mean_s,ci95_s,rounds,bytes\n";
  out.precision(6);
  for (const auto& r : rows) {
    out << protocol_name(r.protocol) << ',' << r.delay_ms << ',' << std::fixed << r.mean_s << ',' << r.ci95_s
        << std::defaultfloat << ',' << r.rounds << ',' << r.bytes << '\n';
  }
  return out.str();
}

FailProbRow failprob(int exponent, std::uint64_t trials, u64 seed, int bits, kernels::Exec exec) {
  if (exponent < 0 || exponent > 63) throw ConfigError("magnitude exponent must be in [0, 63]");
  if (trials < 10000) throw ConfigError("failprob needs at least 10^4 trials");
  // 2^63 has no positive two's-complement form; -2^63 has that magnitude.
  const u64 value = u64{1} << exponent;
  FailProbRow row;
  row.exponent = exponent;
  row.trials = trials;
  row.failures = kernels::truncation_wraps(exec, value, bits, trials, seed);
  row.rate = static_cast<double>(row.failures) / static_cast<double>(trials);
  row.bound = truncation_failure_bound(std::ldexp(1.0, exponent), RingConfig{});
  return row;
}

std::string failprob_csv(const std::vector<FailProbRow>& rows) {
  std::ostringstream out;
  out << "exponent,trials,failures,rate,bound\n";
  out.precision(9);
  for (const auto& r : rows) {
    out << r.exponent << ',' << r.trials << ',' << r.failures << ',' << r.rate << ',' << r.bound << '\n';
  }
  return out.str();
}

std::vector<RoundsRow> rounds_table(const ModelGraph& graph, u64 seed, const std::vector<Protocol>& protocols) {
  graph.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> input(shape_size(graph.input_shape));
  for (auto& v : input) v = dist(rng);

  std::vector<RoundsRow> rows;
  for (Protocol protocol : protocols) {
    RoundsRow row{protocol, graph.linear_layers(), 0, 0, 0};
    for (const auto& layer : graph.layers) {
      if (const auto* act = std::get_if<Activation>(&layer)) {
        row.predicted_rounds += activation_rounds(protocol, graph.activation_spec(*act).degree);
      }
    }
    TwoPartyOptions opts;
    opts.dealer_seed = seed;
    const auto run = run_secure_inference(graph, input, protocol, opts, seed + 1);
    row.rounds = run.transcript.rounds;
    row.bytes = run.transcript.total_bytes();
    for (std::size_t i = 0; i < graph.layers.size(); ++i) {
      if (std::holds_alternative<Activation>(graph.layers[i])) row.activation_rounds += run.layer_rounds[i];
    }
    rows.push_back(row);
  }
  return rows;
}

std::string rounds_csv(const std::vector<RoundsRow>& rows) {
  std::ostringstream out;
  out << "protocol,predicted_rounds,rounds,activation_rounds,bytes\n";
  for (const auto& r : rows) {
    out << protocol_name(r.protocol) << ',' << r.predicted_rounds << ',' << r.rounds << ',' << r.activation_rounds
        << ',' << r.bytes << '\n';
  }
  return out.str();
}

}  // namespace polyshare
