#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "polyshare/model.hpp"
#include "polyshare/poly_protocols.hpp"
#include "polyshare/session.hpp"

namespace polyshare {

struct ShareTensor {
  Shape shape;
  ShareVec data;
};

// One party's view of a model: the public structure plus its shares of the
// conv and fc parameters. Batch-norm constants are public.
struct PartyModel {
  const ModelGraph* graph = nullptr;
  Role role = Role::A;
  std::vector<std::vector<u64>> weight;  // indexed by layer; empty for parameter-free layers
  std::vector<std::vector<u64>> bias;
};

// Offline setup: the server (party B) splits its quantized parameters.
std::pair<PartyModel, PartyModel> share_model(const ModelGraph& graph, std::mt19937_64& rng);
// The client (party A) splits its input at the model precision.
std::pair<ShareTensor, ShareTensor> share_input(const ModelGraph& graph, std::span<const double> input,
                                                std::mt19937_64& rng);

struct SecureResult {
  ShareTensor logits;
  bool relu_substituted = false;             // binary-relu replaced the graph's polynomial
  std::vector<std::uint64_t> layer_rounds;  // rounds spent in each layer
};

SecureResult secure_infer(Session& s, const PartyModel& model, const ShareTensor& input, Protocol protocol);

// Plain fixed-point replay of secure_infer's arithmetic with floor shifts and
// no sharing. binary_relu evaluates exact ReLU; every other protocol uses the
// polynomial schedule.
std::vector<double> plain_infer_fixed(const ModelGraph& graph, std::span<const double> input,
                                      Protocol protocol = Protocol::espn);
// Real arithmetic with the real-valued polynomial (or ReLU).
std::vector<double> plain_infer_real(const ModelGraph& graph, std::span<const double> input, bool relu = false);

// Fraction of activation inputs outside [-lambda_reg, lambda_reg] over all inputs.
double oor_ratio(const ModelGraph& graph, const std::vector<std::vector<double>>& inputs, double lambda_reg);

std::size_t argmax(std::span<const double> values);

struct InferenceRun {
  std::vector<double> logits;
  std::size_t prediction = 0;
  bool relu_substituted = false;
  std::vector<std::uint64_t> layer_rounds;
  TranscriptSnapshot transcript;  // party A's view
};

// Shares the model and input, runs both parties, and reconstructs the logits
// on the client side.
InferenceRun run_secure_inference(const ModelGraph& graph, std::span<const double> input, Protocol protocol,
                                  const TwoPartyOptions& opts, u64 share_seed);

// One side of a split-process inference over an established channel. Model
// shares come from `share_seed` on both sides; the client (party A) masks its
// input locally and sends the server's share in a setup exchange that is not
// counted in the returned transcript. Only the client gets logits.
InferenceRun run_party_inference(Role role, std::unique_ptr<FrameChannel> channel, const ModelGraph& graph,
                                 std::span<const double> input, Protocol protocol, const TwoPartyOptions& opts,
                                 u64 share_seed);

}  // namespace polyshare
