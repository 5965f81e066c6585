#include "polyshare/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "polyshare/kernels.hpp"
#include "polyshare/errors.hpp"

namespace polyshare {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'P', 'M', 'F', '1'};
constexpr int kVersion = 1;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string shape_text(const Shape& s) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < s.size(); ++i) out << (i ? "," : "") << s[i];
  out << ']';
  return out.str();
}

[[noreturn]] void layer_error(std::size_t index, const std::string& what) {
  throw ConfigError("layer " + std::to_string(index) + ": " + what);
}

json poly_json(const PolynomialSpec& spec) {
  return json{{"degree", spec.degree}, {"precision", spec.precision}, {"coeffs", spec.coeffs}, {"range", spec.range}};
}

PolynomialSpec poly_from(const json& j) {
  PolynomialSpec spec;
  spec.degree = j.at("degree").get<int>();
  spec.precision = j.at("precision").get<int>();
  spec.coeffs = j.at("coeffs").get<std::vector<i64>>();
  spec.range = j.at("range").get<double>();
  spec.validate();
  return spec;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_floats(std::vector<std::uint8_t>& out, const std::vector<float>& values) {
  for (float f : values) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw LoadError("truncated model: " + std::string(what) + " needs " + std::to_string(n) + " bytes at offset " +
                      std::to_string(pos_) + ", " + std::to_string(n - (bytes_.size() - pos_)) + " bytes missing");
    }
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t u32(const char* what) {
    auto b = take(4, what);
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
  }
  std::vector<float> floats(std::size_t n, const std::string& what) {
    const std::size_t start = pos_;
    auto b = take(4 * n, what.c_str());
    std::vector<float> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t bits = static_cast<std::uint32_t>(b[4 * i]) | static_cast<std::uint32_t>(b[4 * i + 1]) << 8 |
                                 static_cast<std::uint32_t>(b[4 * i + 2]) << 16 |
                                 static_cast<std::uint32_t>(b[4 * i + 3]) << 24;
      std::memcpy(&out[i], &bits, 4);
      if (!std::isfinite(out[i])) {
        throw LoadError("non-finite " + what + " value at offset " + std::to_string(start + 4 * i));
      }
    }
    return out;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

Layer layer_from(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "conv2d") {
    Conv2d c;
    c.in_channels = j.at("in_channels").get<int>();
    c.out_channels = j.at("out_channels").get<int>();
    c.kernel = j.at("kernel").get<int>();
    c.stride = j.value("stride", 1);
    c.padding = j.value("padding", 0);
    return c;
  }
  if (type == "fc") return Dense{j.at("in_features").get<int>(), j.at("out_features").get<int>(), {}, {}};
  if (type == "avgpool") return AvgPool{j.at("window").get<int>()};
  if (type == "batchnorm") return BatchNorm{j.at("channels").get<int>(), {}, {}};
  if (type == "activation") {
    Activation a;
    if (j.contains("poly")) a.poly = poly_from(j.at("poly"));
    return a;
  }
  if (type == "residual_add") return ResidualAdd{j.at("from").get<int>()};
  throw LoadError("unsupported layer type '" + type + "'");
}

json layer_json(const Layer& layer) {
  return std::visit(
      Overloaded{
          [](const Conv2d& c) {
            return json{{"type", "conv2d"}, {"in_channels", c.in_channels}, {"out_channels", c.out_channels},
                        {"kernel", c.kernel},  {"stride", c.stride},           {"padding", c.padding}};
          },
          [](const Dense& d) {
            return json{{"type", "fc"}, {"in_features", d.in_features}, {"out_features", d.out_features}};
          },
          [](const AvgPool& p) { return json{{"type", "avgpool"}, {"window", p.window}}; },
          [](const BatchNorm& b) { return json{{"type", "batchnorm"}, {"channels", b.channels}}; },
          [](const Activation& a) {
            json j{{"type", "activation"}};
            if (a.poly) j["poly"] = poly_json(*a.poly);
            return j;
          },
          [](const ResidualAdd& r) { return json{{"type", "residual_add"}, {"from", r.from}}; },
      },
      layer);
}

}  // namespace

std::size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1},
                         [](std::size_t acc, int d) { return acc * static_cast<std::size_t>(d); });
}

bool Activation::operator==(const Activation& other) const {
  if (poly.has_value() != other.poly.has_value()) return false;
  return !poly || *poly == *other.poly;
}

bool operator==(const PolynomialSpec& a, const PolynomialSpec& b) {
  return a.degree == b.degree && a.coeffs == b.coeffs && a.range == b.range && a.precision == b.precision;
}

bool ModelGraph::operator==(const ModelGraph& other) const {
  return precision == other.precision && input_shape == other.input_shape && classes == other.classes &&
         activation == other.activation && layers == other.layers;
}

std::vector<Shape> ModelGraph::layer_shapes() const {
  if (input_shape.empty()) throw ConfigError("input shape is empty");
  for (int d : input_shape) {
    if (d <= 0) throw ConfigError("input shape has a non-positive dimension");
  }
  std::vector<Shape> out;
  Shape cur = input_shape;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    std::visit(
        Overloaded{
            [&](const Conv2d& c) {
              if (cur.size() != 3) layer_error(i, "conv2d needs a CHW input, got " + shape_text(cur));
              if (cur[0] != c.in_channels) layer_error(i, "conv2d expects " + std::to_string(c.in_channels) + " channels, got " + shape_text(cur));
              if (c.kernel < 1 || c.stride < 1 || c.padding < 0 || c.out_channels < 1) layer_error(i, "bad conv2d geometry");
              const kernels::ConvGeometry g{cur[0], cur[1], cur[2], c.kernel, c.stride, c.padding};
              if (g.out_height() < 1 || g.out_width() < 1) layer_error(i, "conv2d kernel larger than padded input");
              cur = {c.out_channels, g.out_height(), g.out_width()};
            },
            [&](const Dense& d) {
              if (d.in_features < 1 || d.out_features < 1) layer_error(i, "bad fc size");
              if (shape_size(cur) != static_cast<std::size_t>(d.in_features)) {
                layer_error(i, "fc expects " + std::to_string(d.in_features) + " inputs, got " + shape_text(cur));
              }
              cur = {d.out_features};
            },
            [&](const AvgPool& p) {
              if (cur.size() != 3) layer_error(i, "avgpool needs a CHW input, got " + shape_text(cur));
              if (p.window < 1 || cur[1] % p.window != 0 || cur[2] % p.window != 0) {
                layer_error(i, "avgpool window " + std::to_string(p.window) + " does not tile " + shape_text(cur));
              }
              cur = {cur[0], cur[1] / p.window, cur[2] / p.window};
            },
            [&](const BatchNorm& b) {
              if (b.channels != cur[0]) layer_error(i, "batchnorm channel count does not match " + shape_text(cur));
            },
            [&](const Activation& a) {
              if (a.poly) a.poly->validate();
            },
            [&](const ResidualAdd& r) {
              if (r.from < -1 || r.from >= static_cast<int>(i)) layer_error(i, "residual source must be an earlier layer");
              const Shape& src = r.from < 0 ? input_shape : out[static_cast<std::size_t>(r.from)];
              if (src != cur) layer_error(i, "residual shapes differ: " + shape_text(src) + " vs " + shape_text(cur));
            },
        },
        layers[i]);
    out.push_back(cur);
  }
  return out;
}

void ModelGraph::validate() const {
  if (precision < 1 || precision > 30) throw ConfigError("model precision must be in [1, 30]");
  activation.validate();
  const auto shapes = layer_shapes();
  const Shape& last = shapes.empty() ? input_shape : shapes.back();
  if (shape_size(last) != static_cast<std::size_t>(classes)) {
    throw ConfigError("model output " + shape_text(last) + " does not match " + std::to_string(classes) + " classes");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto check = [&](const std::vector<float>& v, std::size_t n, const char* what) {
      if (v.size() != n) layer_error(i, std::string(what) + " has " + std::to_string(v.size()) + " values, expected " + std::to_string(n));
    };
    if (const auto* c = std::get_if<Conv2d>(&layers[i])) {
      check(c->weight, static_cast<std::size_t>(c->out_channels) * c->in_channels * c->kernel * c->kernel, "kernel");
      check(c->bias, static_cast<std::size_t>(c->out_channels), "bias");
    } else if (const auto* d = std::get_if<Dense>(&layers[i])) {
      check(d->weight, static_cast<std::size_t>(d->out_features) * d->in_features, "weight");
      check(d->bias, static_cast<std::size_t>(d->out_features), "bias");
    } else if (const auto* b = std::get_if<BatchNorm>(&layers[i])) {
      check(b->scale, static_cast<std::size_t>(b->channels), "scale");
      check(b->shift, static_cast<std::size_t>(b->channels), "shift");
    }
  }
}

std::size_t ModelGraph::weight_count() const {
  std::size_t total = 0;
  for (const auto& layer : layers) {
    if (const auto* c = std::get_if<Conv2d>(&layer)) {
      total += static_cast<std::size_t>(c->out_channels) * (static_cast<std::size_t>(c->in_channels) * c->kernel * c->kernel + 1);
    } else if (const auto* d = std::get_if<Dense>(&layer)) {
      total += static_cast<std::size_t>(d->out_features) * (static_cast<std::size_t>(d->in_features) + 1);
    } else if (const auto* b = std::get_if<BatchNorm>(&layer)) {
      total += 2 * static_cast<std::size_t>(b->channels);
    }
  }
  return total;
}

const PolynomialSpec& ModelGraph::activation_spec(const Activation& layer) const {
  return layer.poly ? *layer.poly : activation;
}

std::size_t ModelGraph::activation_layers() const {
  return static_cast<std::size_t>(std::count_if(layers.begin(), layers.end(),
                                                [](const Layer& l) { return std::holds_alternative<Activation>(l); }));
}

std::size_t ModelGraph::linear_layers() const {
  return static_cast<std::size_t>(std::count_if(layers.begin(), layers.end(), [](const Layer& l) {
    return std::holds_alternative<Conv2d>(l) || std::holds_alternative<Dense>(l);
  }));
}

ModelGraph load_model(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  auto magic = in.take(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw LoadError("not a PMF file: bad magic at offset 0");
  const std::uint32_t header_len = in.u32("header length");
  const std::size_t header_at = in.offset();
  auto header_bytes = in.take(header_len, "JSON header");

  json header;
  try {
    header = json::parse(header_bytes.begin(), header_bytes.end());
  } catch (const json::parse_error& e) {
    throw LoadError("malformed header at offset " + std::to_string(header_at + e.byte - 1) + ": " + e.what());
  }

  ModelGraph model;
  std::vector<std::size_t> expected_counts;
  try {
    if (header.value("format", std::string()) != "PMF") throw LoadError("header format field is not \"PMF\"");
    if (header.value("version", 0) != kVersion) throw LoadError("unsupported PMF version");
    model.precision = header.at("precision").get<int>();
    model.input_shape = header.at("input_shape").get<Shape>();
    model.classes = header.at("classes").get<int>();
    model.activation = poly_from(header.at("activation"));
    const auto& layers = header.at("layers");
    if (!layers.is_array()) throw LoadError("header field 'layers' is not a list");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      try {
        model.layers.push_back(layer_from(layers[i]));
      } catch (const LoadError& e) {
        throw LoadError("layer " + std::to_string(i) + ": " + e.what());
      } catch (const json::exception& e) {
        throw LoadError("layer " + std::to_string(i) + ": " + e.what());
      }
    }
    model.layer_shapes();
  } catch (const json::exception& e) {
    throw LoadError(std::string("bad header: ") + e.what());
  } catch (const ConfigError& e) {
    throw LoadError(std::string("bad header: ") + e.what());
  }

  const auto declared = header.value("weight_count", static_cast<std::size_t>(0));
  if (declared != model.weight_count()) {
    throw LoadError("header declares " + std::to_string(declared) + " weights, layers need " +
                    std::to_string(model.weight_count()));
  }
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const std::string tag = "layer " + std::to_string(i);
    if (auto* c = std::get_if<Conv2d>(&model.layers[i])) {
      c->weight = in.floats(static_cast<std::size_t>(c->out_channels) * c->in_channels * c->kernel * c->kernel, tag + " kernel");
      c->bias = in.floats(static_cast<std::size_t>(c->out_channels), tag + " bias");
    } else if (auto* d = std::get_if<Dense>(&model.layers[i])) {
      d->weight = in.floats(static_cast<std::size_t>(d->out_features) * d->in_features, tag + " weight");
      d->bias = in.floats(static_cast<std::size_t>(d->out_features), tag + " bias");
    } else if (auto* b = std::get_if<BatchNorm>(&model.layers[i])) {
      b->scale = in.floats(static_cast<std::size_t>(b->channels), tag + " scale");
      b->shift = in.floats(static_cast<std::size_t>(b->channels), tag + " shift");
    }
  }
  if (in.remaining() != 0) {
    throw LoadError(std::to_string(in.remaining()) + " trailing bytes after weights at offset " + std::to_string(in.offset()));
  }
  try {
    model.validate();
  } catch (const ConfigError& e) {
    throw LoadError(e.what());
  }
  return model;
}

ModelGraph load_model_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LoadError("cannot open model file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return load_model(bytes);
}

std::vector<std::uint8_t> save_model(const ModelGraph& model) {
  model.validate();
  json header{{"format", "PMF"},
              {"version", kVersion},
              {"precision", model.precision},
              {"input_shape", model.input_shape},
              {"classes", model.classes},
              {"activation", poly_json(model.activation)},
              {"weight_count", model.weight_count()}};
  header["layers"] = json::array();
  for (const auto& layer : model.layers) header["layers"].push_back(layer_json(layer));
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& layer : model.layers) {
    if (const auto* c = std::get_if<Conv2d>(&layer)) {
      put_floats(out, c->weight);
      put_floats(out, c->bias);
    } else if (const auto* d = std::get_if<Dense>(&layer)) {
      put_floats(out, d->weight);
      put_floats(out, d->bias);
    } else if (const auto* b = std::get_if<BatchNorm>(&layer)) {
      put_floats(out, b->scale);
      put_floats(out, b->shift);
    }
  }
  return out;
}

void save_model_file(const ModelGraph& model, const std::filesystem::path& path) {
  const auto bytes = save_model(model);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw LoadError("cannot write model file " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::string polynomial_to_json(const PolynomialSpec& spec) { return poly_json(spec).dump(); }

PolynomialSpec polynomial_from_json(std::string_view text) {
  try {
    return poly_from(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad polynomial JSON: ") + e.what());
  }
}

}  // namespace polyshare
