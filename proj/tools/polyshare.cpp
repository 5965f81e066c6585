#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "polyshare/bench.hpp"
#include "polyshare/engine.hpp"
#include "polyshare/errors.hpp"
#include "polyshare/model.hpp"
#include "polyshare/polyfit.hpp"

using namespace polyshare;
using nlohmann::json;

namespace {

constexpr int kUsageExit = 2;

struct Common {
  std::uint64_t seed = 1;
  std::string transport = "sim";
  bool serial = false;

  kernels::Exec exec() const { return serial ? kernels::Exec::serial : kernels::Exec::parallel; }
  TransportMode mode() const { return transport == "socket" ? TransportMode::socket : TransportMode::in_process; }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Seed for dealer and sharing randomness")->envname("POLYSHARE_SEED");
  cmd->add_option("--transport", c.transport, "sim (in-process) or socket (loopback TCP)")
      ->check(CLI::IsMember({"sim", "socket"}));
  cmd->add_flag("--serial", c.serial, "Use the serial reference kernels");
}

CLI::Validator protocol_check() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        try {
          parse_protocol(s);
          return {};
        } catch (const ConfigError& e) {
          return e.what();
        }
      },
      "PROTOCOL", "protocol");
}

std::vector<double> read_input(const std::string& path, const ModelGraph& g) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open input file " + path);
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("input file " + path + ": " + e.what());
  }
  const auto shape = doc.at("shape").get<Shape>();
  auto data = doc.at("data").get<std::vector<double>>();
  if (shape != g.input_shape) throw ConfigError("input shape does not match the model");
  if (data.size() != shape_size(shape)) throw ConfigError("input data length does not match its shape");
  return data;
}

std::pair<std::string, std::uint16_t> split_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) return {"127.0.0.1", static_cast<std::uint16_t>(std::stoul(text))};
  return {text.substr(0, colon), static_cast<std::uint16_t>(std::stoul(text.substr(colon + 1)))};
}

json inference_json(const InferenceRun& run, Protocol protocol) {
  json out;
  out["protocol"] = protocol_name(protocol);
  out["prediction"] = run.prediction;
  out["logits"] = run.logits;
  out["layer_rounds"] = run.layer_rounds;
  out["rounds"] = run.transcript.rounds;
  out["bytes"] = run.transcript.total_bytes();
  out["injected_delay_s"] = run.transcript.injected_delay_s;
  out["relu_substituted"] = run.relu_substituted;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-party secure evaluation of polynomial activations"};
  app.require_subcommand(1);

  Common common;
  std::string protocol_text = "espn";
  std::vector<std::string> protocol_list;
  std::vector<double> delays{0.0};
  double delay = 0.0;
  std::size_t batch = std::size_t{1} << 15;
  int trials = 20;
  std::uint64_t mc_trials = 1000000;
  int exponent = 54;
  int degree = 4;
  double range = 5.0;
  int precision = 16;
  int fit_precision = 10;
  std::string model_path;
  std::string input_path;
  std::string listen;
  std::string connect;

  auto* bench = app.add_subcommand(
      "bench", "Time one activation layer.\nCSV columns: protocol,delay_ms,mean_s,ci95_s,rounds,bytes");
  add_common(bench, common);
  bench->add_option("--protocol", protocol_text, "espn, honeybadger, sqmul or binary-relu")->check(protocol_check());
  bench->add_option("--delay-ms", delays, "Round-trip delay; repeat for a sweep")->check(CLI::NonNegativeNumber);
  bench->add_option("--batch", batch, "Activations per layer")->check(CLI::PositiveNumber);
  bench->add_option("--trials", trials, "Timed runs per delay")->check(CLI::Range(2, 100000));
  bench->add_option("--precision", precision, "Fixed-point bits of the ring encoding")->check(CLI::Range(1, 30));

  auto* fp = app.add_subcommand(
      "failprob", "Monte-Carlo local truncation failures.\nCSV columns: exponent,trials,failures,rate,bound");
  add_common(fp, common);
  fp->add_option("--exponent", exponent, "Plaintext magnitude 2^exponent")->check(CLI::Range(0, 63));
  fp->add_option("--trials", mc_trials, "Random share splits (at least 10000)");
  fp->add_option("--precision", precision, "Truncated bits")->check(CLI::Range(1, 63));

  auto* infer = app.add_subcommand("infer", "Secure inference of one input; prints a JSON summary");
  add_common(infer, common);
  infer->add_option("--model", model_path, "PMF model file")->required();
  infer->add_option("--input", input_path, "JSON input {\"shape\": [...], \"data\": [...]}");
  infer->add_option("--protocol", protocol_text, "espn, honeybadger, sqmul or binary-relu")->check(protocol_check());
  infer->add_option("--delay-ms", delay, "Round-trip delay")->check(CLI::NonNegativeNumber);
  auto* listen_opt = infer->add_option("--listen", listen, "Act as the server on [HOST:]PORT");
  infer->add_option("--connect", connect, "Act as the client against HOST:PORT")->excludes(listen_opt);

  auto* fit = app.add_subcommand("fit", "Quantization-aware ReLU fit; prints the polynomial as JSON");
  fit->add_option("--degree", degree, "Polynomial degree")->check(CLI::Range(1, 16));
  fit->add_option("--range", range, "Fit on [-range, range]")->check(CLI::PositiveNumber);
  fit->add_option("--precision", fit_precision, "Coefficient precision bits")->check(CLI::Range(4, 30));

  auto* rounds = app.add_subcommand(
      "rounds", "Per-protocol rounds and bytes for a model.\n"
                "CSV columns: protocol,predicted_rounds,rounds,activation_rounds,bytes");
  add_common(rounds, common);
  rounds->add_option("--model", model_path, "PMF model file")->required();
  rounds->add_option("--protocol", protocol_list, "Restrict to these protocols")->check(protocol_check());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageExit;
  }

  try {
    if (bench->parsed()) {
      BenchConfig cfg;
      cfg.protocol = parse_protocol(protocol_text);
      cfg.batch = batch;
      cfg.delays_ms = delays;
      cfg.trials = trials;
      cfg.seed = common.seed;
      cfg.precision = precision;
      cfg.exec = common.exec();
      cfg.mode = common.mode();
      std::cout << bench_csv(bench_activation(cfg));
    } else if (fp->parsed()) {
      if (mc_trials < 10000) throw ConfigError("--trials must be at least 10000");
      std::cout << failprob_csv({failprob(exponent, mc_trials, common.seed, precision, common.exec())});
    } else if (fit->parsed()) {
      std::cout << polynomial_to_json(fit_quantized(degree, range, fit_precision)) << "\n";
    } else if (rounds->parsed()) {
      const auto graph = load_model_file(model_path);
      std::vector<Protocol> protos;
      for (const auto& p : protocol_list) protos.push_back(parse_protocol(p));
      if (protos.empty()) protos = all_protocols();
      std::cout << rounds_csv(rounds_table(graph, common.seed, protos));
    } else if (infer->parsed()) {
      const auto graph = load_model_file(model_path);
      const Protocol protocol = parse_protocol(protocol_text);
      TwoPartyOptions opts;
      opts.dealer_seed = common.seed;
      opts.exec = common.exec();
      opts.net.roundtrip_delay_ms = delay;
      opts.net.mode = common.mode();
      if (protocol == Protocol::binary_relu) {
        std::cerr << "note: binary-relu evaluates exact ReLU in place of the model's polynomial\n";
      }
      if (!listen.empty()) {
        const auto [host, port] = split_endpoint(listen);
        SocketListener listener(port);
        std::cerr << "listening on port " << listener.port() << "\n";
        const auto run = run_party_inference(Role::B, listener.accept(), graph, {}, protocol, opts, common.seed);
        json out = inference_json(run, protocol);
        out.erase("prediction");
        out.erase("logits");
        std::cout << out.dump() << "\n";
        return 0;
      }
      if (input_path.empty()) throw ConfigError("--input is required");
      const auto input = read_input(input_path, graph);
      InferenceRun run;
      if (!connect.empty()) {
        const auto [host, port] = split_endpoint(connect);
        run = run_party_inference(Role::A, socket_connect(host, port), graph, input, protocol, opts, common.seed);
      } else {
        run = run_secure_inference(graph, input, protocol, opts, common.seed);
      }
      std::cout << inference_json(run, protocol).dump() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
