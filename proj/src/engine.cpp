#include "polyshare/engine.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "polyshare/errors.hpp"
#include "polyshare/kernels.hpp"

namespace polyshare {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

RingConfig ring_for(const ModelGraph& g) { return RingConfig{64, g.precision}; }

std::vector<u64> quantize(const std::vector<float>& values, int scale, const RingConfig& cfg) {
  std::vector<u64> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = encode(values[i], scale, cfg).raw;
  return out;
}

u64 reciprocal_raw(int window, const RingConfig& cfg) {
  return encode(1.0 / (static_cast<double>(window) * window), cfg).raw;
}

kernels::ConvGeometry geometry(const Conv2d& c, const Shape& in) {
  return {in[0], in[1], in[2], c.kernel, c.stride, c.padding};
}

// Window sums of a CHW tensor, raw ring values.
std::vector<u64> pool_sums(std::span<const u64> x, const Shape& in, int w) {
  const int oh = in[1] / w;
  const int ow = in[2] / w;
  std::vector<u64> out(static_cast<std::size_t>(in[0]) * oh * ow, 0);
  for (int c = 0; c < in[0]; ++c)
    for (int y = 0; y < in[1]; ++y)
      for (int x2 = 0; x2 < in[2]; ++x2)
        out[(static_cast<std::size_t>(c) * oh + y / w) * ow + x2 / w] +=
            x[(static_cast<std::size_t>(c) * in[1] + y) * in[2] + x2];
  return out;
}

std::size_t channel_of(std::size_t index, const Shape& shape) {
  return shape.size() == 3 ? index / (static_cast<std::size_t>(shape[1]) * shape[2]) : index;
}

// Operand layout for out[o][j] = sum_q w[o][q] * col[q][j]: products ordered
// (o, j, q) so that each output is one contiguous segment.
void linear_operands(std::span<const u64> w, std::span<const u64> cols, std::size_t outs, std::size_t patch,
                     std::size_t pixels, std::vector<u64>& lhs, std::vector<u64>& rhs) {
  lhs.resize(outs * pixels * patch);
  rhs.resize(outs * pixels * patch);
  for (std::size_t o = 0; o < outs; ++o)
    for (std::size_t j = 0; j < pixels; ++j)
      for (std::size_t q = 0; q < patch; ++q) {
        const std::size_t k = (o * pixels + j) * patch + q;
        lhs[k] = w[o * patch + q];
        rhs[k] = cols[q * pixels + j];
      }
}

}  // namespace

std::pair<PartyModel, PartyModel> share_model(const ModelGraph& graph, std::mt19937_64& rng) {
  graph.validate();
  const RingConfig cfg = ring_for(graph);
  PartyModel a{&graph, Role::A, {}, {}};
  PartyModel b{&graph, Role::B, {}, {}};
  const auto split = [&](const std::vector<float>& values, std::vector<std::vector<u64>>& to_a,
                         std::vector<std::vector<u64>>& to_b) {
    auto raw = quantize(values, graph.precision, cfg);
    std::vector<u64> mask(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      mask[i] = rng();
      raw[i] -= mask[i];
    }
    to_a.push_back(std::move(mask));
    to_b.push_back(std::move(raw));
  };
  for (const auto& layer : graph.layers) {
    if (const auto* c = std::get_if<Conv2d>(&layer)) {
      split(c->weight, a.weight, b.weight);
      split(c->bias, a.bias, b.bias);
    } else if (const auto* d = std::get_if<Dense>(&layer)) {
      split(d->weight, a.weight, b.weight);
      split(d->bias, a.bias, b.bias);
    } else {
      for (auto* pm : {&a, &b}) {
        pm->weight.emplace_back();
        pm->bias.emplace_back();
      }
    }
  }
  return {std::move(a), std::move(b)};
}

std::pair<ShareTensor, ShareTensor> share_input(const ModelGraph& graph, std::span<const double> input,
                                                std::mt19937_64& rng) {
  if (input.size() != shape_size(graph.input_shape)) throw ConfigError("input size does not match the model");
  const RingConfig cfg = ring_for(graph);
  std::vector<u64> raw(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) raw[i] = encode(input[i], cfg).raw;
  auto [sa, sb] = share(raw, graph.precision, rng);
  return {ShareTensor{graph.input_shape, std::move(sa)}, ShareTensor{graph.input_shape, std::move(sb)}};
}

SecureResult secure_infer(Session& s, const PartyModel& model, const ShareTensor& input, Protocol protocol) {
  if (!model.graph) throw ConfigError("party model has no graph");
  const ModelGraph& g = *model.graph;
  const RingConfig cfg = ring_for(g);
  const int p = g.precision;
  if (s.ring().precision != p) throw ConfigError("session precision differs from the model precision");
  if (model.role != s.role() || input.data.role != s.role()) throw ProtocolError("model or input share belongs to the other party");
  if (input.shape != g.input_shape) throw ConfigError("input shape does not match the model");
  if (input.data.scale != p) throw ProtocolError("input must be at the model precision");

  const auto shapes = g.layer_shapes();
  const bool is_a = s.role() == Role::A;
  SecureResult result;
  std::vector<ShareTensor> outputs;
  ShareTensor cur = input;

  for (std::size_t li = 0; li < g.layers.size(); ++li) {
    const std::uint64_t rounds_before = s.snapshot().rounds;
    const Shape& out_shape = shapes[li];
    std::visit(
        Overloaded{
            [&](const Conv2d& c) {
              const auto geo = geometry(c, cur.shape);
              std::vector<u64> cols(geo.patch() * geo.pixels());
              kernels::im2col(s.exec(), cur.data.values, geo, cols);
              std::vector<u64> lhs;
              std::vector<u64> rhs;
              linear_operands(model.weight[li], cols, static_cast<std::size_t>(c.out_channels), geo.patch(),
                              geo.pixels(), lhs, rhs);
              const auto prod = s.beaver_multiply_raw(lhs, rhs, s.dealer().triples(lhs.size()));
              ShareVec acc(s.role(), 2 * p, static_cast<std::size_t>(c.out_channels) * geo.pixels());
              kernels::segment_sum(s.exec(), prod, geo.patch(), acc.values);
              for (std::size_t i = 0; i < acc.size(); ++i) acc.values[i] += model.bias[li][i / geo.pixels()] << p;
              cur = ShareTensor{out_shape, s.truncate(acc, p)};
            },
            [&](const Dense& d) {
              const auto in = static_cast<std::size_t>(d.in_features);
              std::vector<u64> lhs;
              std::vector<u64> rhs;
              linear_operands(model.weight[li], cur.data.values, static_cast<std::size_t>(d.out_features), in, 1, lhs,
                              rhs);
              const auto prod = s.beaver_multiply_raw(lhs, rhs, s.dealer().triples(lhs.size()));
              ShareVec acc(s.role(), 2 * p, static_cast<std::size_t>(d.out_features));
              kernels::segment_sum(s.exec(), prod, in, acc.values);
              for (std::size_t o = 0; o < acc.size(); ++o) acc.values[o] += model.bias[li][o] << p;
              cur = ShareTensor{out_shape, s.truncate(acc, p)};
            },
            [&](const AvgPool& pool) {
              ShareVec sums(s.role(), p, pool_sums(cur.data.values, cur.shape, pool.window));
              cur = ShareTensor{out_shape, s.truncate(scale_by(sums, reciprocal_raw(pool.window, cfg)), p)};
            },
            [&](const BatchNorm& bn) {
              const auto scale = quantize(bn.scale, p, cfg);
              const auto shift = quantize(bn.shift, p, cfg);
              ShareVec scaled(s.role(), 2 * p, cur.data.size());
              for (std::size_t i = 0; i < scaled.size(); ++i) scaled.values[i] = scale[channel_of(i, cur.shape)] * cur.data.values[i];
              ShareVec out = s.truncate(scaled, p);
              if (is_a) for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += shift[channel_of(i, cur.shape)];
              cur = ShareTensor{out_shape, std::move(out)};
            },
            [&](const Activation& act) {
              if (protocol == Protocol::binary_relu) result.relu_substituted = true;
              cur = ShareTensor{out_shape, apply_activation(s, protocol, cur.data, g.activation_spec(act))};
            },
            [&](const ResidualAdd& r) {
              const ShareTensor& src = r.from < 0 ? input : outputs[static_cast<std::size_t>(r.from)];
              cur = ShareTensor{out_shape, add(cur.data, src.data)};
            },
        },
        g.layers[li]);
    outputs.push_back(cur);
    result.layer_rounds.push_back(s.snapshot().rounds - rounds_before);
  }
  result.logits = std::move(cur);
  return result;
}

std::vector<double> plain_infer_fixed(const ModelGraph& graph, std::span<const double> input, Protocol protocol) {
  graph.validate();
  if (input.size() != shape_size(graph.input_shape)) throw ConfigError("input size does not match the model");
  const RingConfig cfg = ring_for(graph);
  const int p = graph.precision;
  const auto shapes = graph.layer_shapes();
  const auto floor_shift = [](u64 v, int bits) { return static_cast<u64>(static_cast<i64>(v) >> bits); };

  std::vector<u64> in_raw(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) in_raw[i] = encode(input[i], cfg).raw;
  std::vector<std::vector<u64>> outputs;
  std::vector<u64> cur = in_raw;
  Shape shape = graph.input_shape;

  for (std::size_t li = 0; li < graph.layers.size(); ++li) {
    std::visit(
        Overloaded{
            [&](const Conv2d& c) {
              const auto geo = geometry(c, shape);
              std::vector<u64> cols(geo.patch() * geo.pixels());
              kernels::serial::im2col(cur, geo, cols);
              const auto w = quantize(c.weight, p, cfg);
              const auto b = quantize(c.bias, p, cfg);
              std::vector<u64> out(static_cast<std::size_t>(c.out_channels) * geo.pixels());
              for (std::size_t o = 0; o < static_cast<std::size_t>(c.out_channels); ++o)
                for (std::size_t j = 0; j < geo.pixels(); ++j) {
                  u64 acc = b[o] << p;
                  for (std::size_t q = 0; q < geo.patch(); ++q) acc += w[o * geo.patch() + q] * cols[q * geo.pixels() + j];
                  out[o * geo.pixels() + j] = floor_shift(acc, p);
                }
              cur = std::move(out);
            },
            [&](const Dense& d) {
              const auto w = quantize(d.weight, p, cfg);
              const auto b = quantize(d.bias, p, cfg);
              std::vector<u64> out(static_cast<std::size_t>(d.out_features));
              for (std::size_t o = 0; o < out.size(); ++o) {
                u64 acc = b[o] << p;
                for (std::size_t q = 0; q < cur.size(); ++q) acc += w[o * cur.size() + q] * cur[q];
                out[o] = floor_shift(acc, p);
              }
              cur = std::move(out);
            },
            [&](const AvgPool& pool) {
              auto sums = pool_sums(cur, shape, pool.window);
              const u64 recip = reciprocal_raw(pool.window, cfg);
              for (auto& v : sums) v = floor_shift(v * recip, p);
              cur = std::move(sums);
            },
            [&](const BatchNorm& bn) {
              const auto scale = quantize(bn.scale, p, cfg);
              const auto shift = quantize(bn.shift, p, cfg);
              for (std::size_t i = 0; i < cur.size(); ++i) {
                const std::size_t c = channel_of(i, shape);
                cur[i] = floor_shift(scale[c] * cur[i], p) + shift[c];
              }
            },
            [&](const Activation& act) {
              const PolynomialSpec& spec = graph.activation_spec(act);
              for (auto& v : cur) {
                const auto sv = static_cast<i64>(v);
                v = protocol == Protocol::binary_relu ? static_cast<u64>(std::max<i64>(sv, 0))
                                                      : static_cast<u64>(poly_eval_fixed(sv, spec, p));
              }
            },
            [&](const ResidualAdd& r) {
              const auto& src = r.from < 0 ? in_raw : outputs[static_cast<std::size_t>(r.from)];
              for (std::size_t i = 0; i < cur.size(); ++i) cur[i] += src[i];
            },
        },
        graph.layers[li]);
    shape = shapes[li];
    outputs.push_back(cur);
  }
  std::vector<double> logits(cur.size());
  for (std::size_t i = 0; i < cur.size(); ++i) logits[i] = decode(FixedPoint{cur[i], p}, cfg);
  return logits;
}

namespace {

// Real-arithmetic forward pass; `observe` sees every activation input.
template <class Observe>
std::vector<double> real_forward(const ModelGraph& graph, std::span<const double> input, bool relu, Observe&& observe) {
  const auto shapes = graph.layer_shapes();
  std::vector<std::vector<double>> outputs;
  const std::vector<double> in(input.begin(), input.end());
  std::vector<double> cur = in;
  Shape shape = graph.input_shape;
  for (std::size_t li = 0; li < graph.layers.size(); ++li) {
    std::visit(
        Overloaded{
            [&](const Conv2d& c) {
              const auto geo = geometry(c, shape);
              const int oh = geo.out_height();
              const int ow = geo.out_width();
              std::vector<double> out(static_cast<std::size_t>(c.out_channels) * oh * ow);
              for (int o = 0; o < c.out_channels; ++o)
                for (int y = 0; y < oh; ++y)
                  for (int x = 0; x < ow; ++x) {
                    double acc = c.bias[o];
                    for (int ci = 0; ci < c.in_channels; ++ci)
                      for (int ky = 0; ky < c.kernel; ++ky)
                        for (int kx = 0; kx < c.kernel; ++kx) {
                          const int iy = y * c.stride - c.padding + ky;
                          const int ix = x * c.stride - c.padding + kx;
                          if (iy < 0 || iy >= shape[1] || ix < 0 || ix >= shape[2]) continue;
                          acc += static_cast<double>(c.weight[((static_cast<std::size_t>(o) * c.in_channels + ci) * c.kernel + ky) * c.kernel + kx]) *
                                 cur[(static_cast<std::size_t>(ci) * shape[1] + iy) * shape[2] + ix];
                        }
                    out[(static_cast<std::size_t>(o) * oh + y) * ow + x] = acc;
                  }
              cur = std::move(out);
            },
            [&](const Dense& d) {
              std::vector<double> out(static_cast<std::size_t>(d.out_features));
              for (std::size_t o = 0; o < out.size(); ++o) {
                double acc = d.bias[o];
                for (std::size_t q = 0; q < cur.size(); ++q) acc += static_cast<double>(d.weight[o * cur.size() + q]) * cur[q];
                out[o] = acc;
              }
              cur = std::move(out);
            },
            [&](const AvgPool& pool) {
              const int w = pool.window;
              const int oh = shape[1] / w;
              const int ow = shape[2] / w;
              std::vector<double> out(static_cast<std::size_t>(shape[0]) * oh * ow, 0.0);
              for (int c = 0; c < shape[0]; ++c)
                for (int y = 0; y < shape[1]; ++y)
                  for (int x = 0; x < shape[2]; ++x)
                    out[(static_cast<std::size_t>(c) * oh + y / w) * ow + x / w] +=
                        cur[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x] / (w * w);
              cur = std::move(out);
            },
            [&](const BatchNorm& bn) {
              for (std::size_t i = 0; i < cur.size(); ++i) {
                const std::size_t c = channel_of(i, shape);
                cur[i] = bn.scale[c] * cur[i] + bn.shift[c];
              }
            },
            [&](const Activation& act) {
              const PolynomialSpec& spec = graph.activation_spec(act);
              for (auto& v : cur) {
                observe(v);
                v = relu ? std::max(v, 0.0) : poly_eval_real(v, spec);
              }
            },
            [&](const ResidualAdd& r) {
              const auto& src = r.from < 0 ? in : outputs[static_cast<std::size_t>(r.from)];
              for (std::size_t i = 0; i < cur.size(); ++i) cur[i] += src[i];
            },
        },
        graph.layers[li]);
    shape = shapes[li];
    outputs.push_back(cur);
  }
  return cur;
}

}  // namespace

std::vector<double> plain_infer_real(const ModelGraph& graph, std::span<const double> input, bool relu) {
  graph.validate();
  if (input.size() != shape_size(graph.input_shape)) throw ConfigError("input size does not match the model");
  return real_forward(graph, input, relu, [](double) {});
}

double oor_ratio(const ModelGraph& graph, const std::vector<std::vector<double>>& inputs, double lambda_reg) {
  graph.validate();
  std::uint64_t total = 0;
  std::uint64_t outside = 0;
  for (const auto& x : inputs) {
    if (x.size() != shape_size(graph.input_shape)) throw ConfigError("input size does not match the model");
    real_forward(graph, x, false, [&](double v) {
      ++total;
      if (!(std::abs(v) <= lambda_reg)) ++outside;
    });
  }
  return total == 0 ? 0.0 : static_cast<double>(outside) / static_cast<double>(total);
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

InferenceRun run_secure_inference(const ModelGraph& graph, std::span<const double> input, Protocol protocol,
                                  const TwoPartyOptions& opts, u64 share_seed) {
  std::mt19937_64 rng(share_seed);
  auto [model_a, model_b] = share_model(graph, rng);
  auto [input_a, input_b] = share_input(graph, input, rng);

  TwoPartyOptions run_opts = opts;
  run_opts.ring = ring_for(graph);
  SecureResult ra;
  SecureResult rb;
  const auto run = run_two_party(
      run_opts, [&](Session& s) { ra = secure_infer(s, model_a, input_a, protocol); },
      [&](Session& s) { rb = secure_infer(s, model_b, input_b, protocol); });

  // The server hands its logit shares to the client, which reconstructs.
  const auto raw = reconstruct(ra.logits.data, rb.logits.data);
  InferenceRun out;
  const RingConfig cfg = ring_for(graph);
  for (u64 v : raw) out.logits.push_back(decode(FixedPoint{v, graph.precision}, cfg));
  out.prediction = argmax(out.logits);
  out.relu_substituted = ra.relu_substituted;
  out.layer_rounds = ra.layer_rounds;
  out.transcript = run.a;
  return out;
}

InferenceRun run_party_inference(Role role, std::unique_ptr<FrameChannel> channel, const ModelGraph& graph,
                                 std::span<const double> input, Protocol protocol, const TwoPartyOptions& opts,
                                 u64 share_seed) {
  const bool client = role == Role::A;
  if (client && input.size() != shape_size(graph.input_shape)) throw ConfigError("input size does not match the model");
  std::mt19937_64 rng(share_seed);
  auto [model_a, model_b] = share_model(graph, rng);
  const PartyModel& mine = client ? model_a : model_b;

  TwoPartyOptions run_opts = opts;
  run_opts.ring = ring_for(graph);
  const RingConfig cfg = ring_for(graph);
  const std::size_t n = shape_size(graph.input_shape);
  InferenceRun out;
  TranscriptSnapshot before;
  TranscriptSnapshot after;
  SecureResult res;
  run_party(role, std::move(channel), run_opts, [&](Session& s) {
    ShareTensor x{graph.input_shape, ShareVec(role, graph.precision, n)};
    if (client) {
      std::vector<u64> raw(n);
      for (std::size_t i = 0; i < n; ++i) raw[i] = encode(input[i], cfg).raw;
      std::random_device rd;
      std::mt19937_64 local(static_cast<u64>(rd()) << 32 | rd());
      auto [sa, sb] = share(raw, graph.precision, local);
      s.exchange(sb.values);
      x.data = std::move(sa);
    } else {
      x.data.values = s.exchange(std::vector<u64>(n, 0));
    }
    before = s.snapshot();
    res = secure_infer(s, mine, x, protocol);
    after = s.snapshot();
    const auto peer = s.exchange(client ? std::vector<u64>{} : res.logits.data.values);
    if (client) {
      for (std::size_t i = 0; i < peer.size(); ++i) {
        out.logits.push_back(decode(FixedPoint{res.logits.data.values[i] + peer[i], graph.precision}, cfg));
      }
    }
  });
  if (client) out.prediction = argmax(out.logits);
  out.relu_substituted = res.relu_substituted;
  out.layer_rounds = res.layer_rounds;
  out.transcript = after;
  out.transcript.rounds -= before.rounds;
  for (int r = 0; r < 2; ++r) out.transcript.bytes_sent[r] -= before.bytes_sent[r];
  out.transcript.wall_time_s -= before.wall_time_s;
  out.transcript.injected_delay_s -= before.injected_delay_s;
  return out;
}

}  // namespace polyshare
