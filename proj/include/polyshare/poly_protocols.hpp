#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "polyshare/ring.hpp"
#include "polyshare/session.hpp"
#include "polyshare/share.hpp"

namespace polyshare {

// Activation polynomial sum_i coeffs[i] * x^i / 2^precision, fitted on
// [-range, range].
struct PolynomialSpec {
  int degree = 0;
  std::vector<i64> coeffs;
  double range = 5.0;
  int precision = 10;

  void validate() const;
  double coefficient(int i) const;

  // Quantized degree-4 ReLU fit on [-5, 5] with 10-bit coefficients.
  static PolynomialSpec default_relu();
};

int scale_down_factor(int i, int p);

// Truncations applied to x before and to x^i after exponentiation, i >= 2.
struct ScalePlan {
  int p = 0;
  std::vector<int> pre;   // indexed by i; entries 0 and 1 unused
  std::vector<int> post;

  static ScalePlan make(int degree, int p);
  // Scale of x^i after the post-truncation; always p.
  int final_scale(int i) const { return i * (p - pre[i]) - post[i]; }
};

enum class Protocol { espn, honeybadger, sqmul, binary_relu };

std::string_view protocol_name(Protocol p);
Protocol parse_protocol(std::string_view name);  // throws ConfigError
const std::vector<Protocol>& all_protocols();

// Shares of x^k at k times the input scale, exact mod 2^64. One round.
ShareVec espn_exp(Session& s, const ShareVec& x, int k);

// Shares of x^1..x^n at scales k * x.scale, exact mod 2^64. One round.
std::vector<ShareVec> hb_powers(Session& s, const ShareVec& x, int n, const PowerTupleBatch& tuples);

// Polynomial activations; x and the result are at the session precision.
ShareVec espn_poly(Session& s, const ShareVec& x, const PolynomialSpec& spec);
ShareVec hb_poly(Session& s, const ShareVec& x, const PolynomialSpec& spec);
ShareVec sqmul_poly(Session& s, const ShareVec& x, const PolynomialSpec& spec);

// Exact max(x, 0) through binary shares and a carry look-ahead adder.
ShareVec relu_binary(Session& s, const ShareVec& x);

ShareVec apply_activation(Session& s, Protocol protocol, const ShareVec& x, const PolynomialSpec& spec);

// Rounds each protocol spends on one activation layer.
std::uint64_t activation_rounds(Protocol protocol, int degree);

struct FailureBound {
  double per_truncation = 0.0;    // largest single post-exponentiation truncation
  double first_truncation = 0.0;  // truncating x itself
  double total = 0.0;             // union bound over every truncation of one evaluation
};
FailureBound failure_bound(const PolynomialSpec& spec, const RingConfig& cfg);

// Above this total bound espn_poly and hb_poly record a session warning.
constexpr double kFailureWarnThreshold = 1.0 / 1024.0;

// Plaintext replay of the secure evaluation schedule with floor shifts:
// x_raw at scale p in, result at scale p out.
i64 poly_eval_fixed(i64 x_raw, const PolynomialSpec& spec, int p);
double poly_eval_real(double x, const PolynomialSpec& spec);

}  // namespace polyshare
