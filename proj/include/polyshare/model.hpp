#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "polyshare/poly_protocols.hpp"

namespace polyshare {

// Kernel layout [out][in][k][k]; bias [out].
struct Conv2d {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;
  int stride = 1;
  int padding = 0;
  std::vector<float> weight;
  std::vector<float> bias;
  bool operator==(const Conv2d&) const = default;
};

// Weight layout [out][in]; bias [out]. The input is flattened first.
struct Dense {
  int in_features = 0;
  int out_features = 0;
  std::vector<float> weight;
  std::vector<float> bias;
  bool operator==(const Dense&) const = default;
};

// Non-overlapping window x window average.
struct AvgPool {
  int window = 2;
  bool operator==(const AvgPool&) const = default;
};

// Batch norm folded to y = scale[c] * x + shift[c].
struct BatchNorm {
  int channels = 0;
  std::vector<float> scale;
  std::vector<float> shift;
  bool operator==(const BatchNorm&) const = default;
};

// Uses the model-wide polynomial unless the layer carries its own.
struct Activation {
  std::optional<PolynomialSpec> poly;
  bool operator==(const Activation&) const;
};

// Adds the output of layer `from` (-1 = model input) to the running tensor.
struct ResidualAdd {
  int from = -1;
  bool operator==(const ResidualAdd&) const = default;
};

using Layer = std::variant<Conv2d, Dense, AvgPool, BatchNorm, Activation, ResidualAdd>;

using Shape = std::vector<int>;
std::size_t shape_size(const Shape& s);

struct ModelGraph {
  int precision = 16;
  Shape input_shape;
  int classes = 0;
  PolynomialSpec activation = PolynomialSpec::default_relu();
  std::vector<Layer> layers;

  // Output shape of every layer; throws ConfigError on incompatible shapes.
  std::vector<Shape> layer_shapes() const;
  void validate() const;
  std::size_t weight_count() const;
  const PolynomialSpec& activation_spec(const Activation& layer) const;
  std::size_t activation_layers() const;
  std::size_t linear_layers() const;

  bool operator==(const ModelGraph& other) const;
};

bool operator==(const PolynomialSpec& a, const PolynomialSpec& b);

// PMF container: "PMF1", u32 little-endian header length, JSON header, then
// every layer's parameters as little-endian float32 in layer order.
ModelGraph load_model(std::span<const std::uint8_t> bytes);
ModelGraph load_model_file(const std::filesystem::path& path);
std::vector<std::uint8_t> save_model(const ModelGraph& model);
void save_model_file(const ModelGraph& model, const std::filesystem::path& path);

std::string polynomial_to_json(const PolynomialSpec& spec);
PolynomialSpec polynomial_from_json(std::string_view text);

}  // namespace polyshare
