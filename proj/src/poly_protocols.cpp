#include "polyshare/poly_protocols.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "polyshare/errors.hpp"
#include "polyshare/kernels.hpp"

namespace polyshare {

void PolynomialSpec::validate() const {
  if (degree < 1 || degree > 16) throw ConfigError("polynomial degree must be in [1, 16]");
  if (coeffs.size() != static_cast<std::size_t>(degree) + 1) {
    throw ConfigError("polynomial needs degree + 1 coefficients");
  }
  if (precision < 1 || precision > 30) throw ConfigError("coefficient precision must be in [1, 30]");
  if (!(range > 0.0) || !std::isfinite(range)) throw ConfigError("fit range must be positive");
  const i64 bound = i64{1} << precision;
  for (i64 c : coeffs) {
    if (c > bound || c < -bound) throw ConfigError("coefficient exceeds 2^precision in magnitude");
  }
}

double PolynomialSpec::coefficient(int i) const { return std::ldexp(static_cast<double>(coeffs.at(i)), -precision); }

PolynomialSpec PolynomialSpec::default_relu() { return PolynomialSpec{4, {322, 512, 160, 0, -3}, 5.0, 10}; }

int scale_down_factor(int i, int p) {
  if (i < 2) throw ConfigError("scale-down factor is defined for exponents >= 2");
  return ((i - 2) * p + i - 1) / i;
}

ScalePlan ScalePlan::make(int degree, int p) {
  ScalePlan plan;
  plan.p = p;
  plan.pre.assign(static_cast<std::size_t>(degree) + 1, 0);
  plan.post.assign(static_cast<std::size_t>(degree) + 1, 0);
  for (int i = 2; i <= degree; ++i) {
    plan.pre[i] = scale_down_factor(i, p);
    plan.post[i] = p * (i - 1) - plan.pre[i] * i;
  }
  return plan;
}

std::string_view protocol_name(Protocol p) {
  switch (p) {
    case Protocol::espn: return "espn";
    case Protocol::honeybadger: return "honeybadger";
    case Protocol::sqmul: return "sqmul";
    case Protocol::binary_relu: return "binary-relu";
  }
  return "?";
}

Protocol parse_protocol(std::string_view name) {
  if (name == "espn") return Protocol::espn;
  if (name == "honeybadger" || name == "hb") return Protocol::honeybadger;
  if (name == "sqmul") return Protocol::sqmul;
  if (name == "binary-relu" || name == "relu") return Protocol::binary_relu;
  throw ConfigError("unknown protocol '" + std::string(name) + "' (espn, honeybadger, sqmul, binary-relu)");
}

const std::vector<Protocol>& all_protocols() {
  static const std::vector<Protocol> all{Protocol::espn, Protocol::honeybadger, Protocol::sqmul,
                                         Protocol::binary_relu};
  return all;
}

namespace {

// All requested exponentiations share one Beaver exchange.
std::vector<ShareVec> fused_espn(Session& s, const std::vector<ShareVec>& bases, const std::vector<int>& ks) {
  std::size_t total = 0;
  for (std::size_t j = 0; j < bases.size(); ++j) total += bases[j].size() * (static_cast<std::size_t>(ks[j]) + 1);

  std::vector<u64> u(total);
  std::vector<u64> v(total);
  std::size_t offset = 0;
  for (std::size_t j = 0; j < bases.size(); ++j) {
    const std::size_t len = bases[j].size() * (static_cast<std::size_t>(ks[j]) + 1);
    kernels::espn_operands(s.exec(), s.role(), bases[j].values, ks[j], std::span(u).subspan(offset, len),
                           std::span(v).subspan(offset, len));
    offset += len;
  }
  const auto triples = s.dealer().triples(total);
  const auto products = s.beaver_multiply_raw(u, v, triples);

  std::vector<ShareVec> out;
  offset = 0;
  for (std::size_t j = 0; j < bases.size(); ++j) {
    const auto width = static_cast<std::size_t>(ks[j]) + 1;
    const std::size_t len = bases[j].size() * width;
    ShareVec power(s.role(), ks[j] * bases[j].scale, bases[j].size());
    kernels::segment_sum(s.exec(), std::span<const u64>(products).subspan(offset, len), width, power.values);
    out.push_back(std::move(power));
    offset += len;
  }
  return out;
}

void check_poly_input(Session& s, const ShareVec& x, const PolynomialSpec& spec) {
  spec.validate();
  if (x.role != s.role()) throw ProtocolError("share belongs to the other party");
  if (x.scale != s.ring().precision) throw ProtocolError("activation input must be at the working precision");
}

void warn_on_budget(Session& s, const PolynomialSpec& spec) {
  const FailureBound fb = failure_bound(spec, s.ring());
  if (fb.total > kFailureWarnThreshold) {
    std::ostringstream msg;
    msg << "degree " << spec.degree << " at range " << spec.range << " and precision " << s.ring().precision
        << " has total truncation failure bound " << fb.total;
    s.warn(msg.str());
  }
}

// sum_i coeffs[i] * x^i with every power at scale p, then rescaled to p.
ShareVec dot_coefficients(Session& s, const std::vector<ShareVec>& powers, const PolynomialSpec& spec) {
  const int p = s.ring().precision;
  const std::size_t n = powers[1].size();
  ShareVec acc(s.role(), p + spec.precision, n);
  if (s.role() == Role::A) {
    const u64 constant = static_cast<u64>(spec.coeffs[0]) << p;
    for (auto& v : acc.values) v = constant;
  }
  for (int i = 1; i <= spec.degree; ++i) {
    const u64 c = static_cast<u64>(spec.coeffs[i]);
    if (c == 0) continue;
    const auto& pw = powers[i].values;
    for (std::size_t e = 0; e < n; ++e) acc.values[e] += c * pw[e];
  }
  return s.truncate(acc, spec.precision);
}

}  // namespace

ShareVec espn_exp(Session& s, const ShareVec& x, int k) {
  if (k < 0) throw ConfigError("exponent must be >= 0");
  if (x.role != s.role()) throw ProtocolError("share belongs to the other party");
  if (k == 0) {
    ShareVec one(s.role(), 0, x.size());
    if (s.role() == Role::A) for (auto& v : one.values) v = 1;
    return one;
  }
  return std::move(fused_espn(s, {x}, {k}).front());
}

ShareVec espn_poly(Session& s, const ShareVec& x, const PolynomialSpec& spec) {
  check_poly_input(s, x, spec);
  warn_on_budget(s, spec);
  const ScalePlan plan = ScalePlan::make(spec.degree, s.ring().precision);

  std::vector<ShareVec> bases;
  std::vector<int> ks;
  for (int i = 2; i <= spec.degree; ++i) {
    bases.push_back(s.truncate(x, plan.pre[i]));
    ks.push_back(i);
  }
  std::vector<ShareVec> powers(static_cast<std::size_t>(spec.degree) + 1);
  powers[1] = x;
  if (!bases.empty()) {
    auto raised = fused_espn(s, bases, ks);
    for (int i = 2; i <= spec.degree; ++i) powers[i] = s.truncate(raised[i - 2], plan.post[i]);
  }
  return dot_coefficients(s, powers, spec);
}

std::vector<ShareVec> hb_powers(Session& s, const ShareVec& x, int n, const PowerTupleBatch& tuples) {
  if (x.role != s.role()) throw ProtocolError("share belongs to the other party");
  if (n < 1) throw ConfigError("power count must be >= 1");
  if (tuples.degree < n || tuples.count() < x.size()) throw ResourceError("power tuple supply too small");

  ShareVec masked(s.role(), x.scale, x.size());
  for (std::size_t e = 0; e < x.size(); ++e) masked.values[e] = x.values[e] - tuples.tuple(e)[0];
  const auto opened = s.open(masked);

  std::vector<u64> flat(x.size() * static_cast<std::size_t>(n));
  kernels::hb_powers(s.exec(), s.role(), opened, tuples, n, flat);
  std::vector<ShareVec> out;
  for (int k = 1; k <= n; ++k) {
    ShareVec pk(s.role(), k * x.scale, x.size());
    for (std::size_t e = 0; e < x.size(); ++e) pk.values[e] = flat[e * n + (k - 1)];
    out.push_back(std::move(pk));
  }
  return out;
}

ShareVec hb_poly(Session& s, const ShareVec& x, const PolynomialSpec& spec) {
  check_poly_input(s, x, spec);
  warn_on_budget(s, spec);
  const int p = s.ring().precision;
  const ScalePlan plan = ScalePlan::make(spec.degree, p);
  const std::size_t count = x.size();

  // One blind per exponent; all maskings go out in a single open.
  std::vector<ShareVec> bases;
  std::vector<PowerTupleBatch> tuples;
  ShareVec masked(s.role(), p, 0);
  for (int i = 2; i <= spec.degree; ++i) {
    bases.push_back(s.truncate(x, plan.pre[i]));
    tuples.push_back(s.dealer().power_tuples(count, i, p - plan.pre[i]));
    for (std::size_t e = 0; e < count; ++e) masked.values.push_back(bases.back().values[e] - tuples.back().tuple(e)[0]);
  }
  std::vector<ShareVec> powers(static_cast<std::size_t>(spec.degree) + 1);
  powers[1] = x;
  if (!bases.empty()) {
    const auto opened = s.open(masked);
    for (int i = 2; i <= spec.degree; ++i) {
      const std::size_t j = static_cast<std::size_t>(i) - 2;
      std::vector<u64> flat(count * static_cast<std::size_t>(i));
      kernels::hb_powers(s.exec(), s.role(), std::span<const u64>(opened).subspan(j * count, count), tuples[j], i,
                         flat);
      ShareVec pi(s.role(), i * bases[j].scale, count);
      for (std::size_t e = 0; e < count; ++e) pi.values[e] = flat[e * i + (i - 1)];
      powers[i] = s.truncate(pi, plan.post[i]);
    }
  }
  return dot_coefficients(s, powers, spec);
}

ShareVec sqmul_poly(Session& s, const ShareVec& x, const PolynomialSpec& spec) {
  check_poly_input(s, x, spec);
  const int p = s.ring().precision;
  const int n = spec.degree;
  const std::size_t count = x.size();
  std::vector<ShareVec> powers(static_cast<std::size_t>(n) + 1);
  powers[1] = x;
  // Each round multiplies the top power m by x^1..x^min(m, n - m).
  for (int m = 1; m < n; m *= 2) {
    const int extra = std::min(m, n - m);
    ShareVec lhs(s.role(), p, 0);
    ShareVec rhs(s.role(), p, 0);
    for (int j = 1; j <= extra; ++j) {
      lhs.values.insert(lhs.values.end(), powers[m].values.begin(), powers[m].values.end());
      rhs.values.insert(rhs.values.end(), powers[j].values.begin(), powers[j].values.end());
    }
    const ShareVec prod = s.truncate(s.beaver_multiply(lhs, rhs), p);
    for (int j = 1; j <= extra; ++j) {
      const auto first = prod.values.begin() + static_cast<std::ptrdiff_t>((j - 1) * count);
      powers[m + j] = ShareVec(s.role(), p, std::vector<u64>(first, first + static_cast<std::ptrdiff_t>(count)));
    }
  }
  return dot_coefficients(s, powers, spec);
}

namespace {

std::vector<u64> and_round(Session& s, std::span<const u64> u, std::span<const u64> v) {
  const std::size_t n = u.size();
  const auto triples = s.dealer().and_triples(n);
  std::vector<u64> masks(2 * n);
  kernels::and_masks(s.exec(), u, v, triples, masks);
  auto opened = s.exchange(masks);
  if (opened.size() != 2 * n) throw ProtocolError("peer sent a different batch size");
  for (std::size_t i = 0; i < 2 * n; ++i) opened[i] ^= masks[i];
  std::vector<u64> z(n);
  const std::span<const u64> all(opened);
  kernels::and_combine(s.exec(), s.role(), triples, all.first(n), all.subspan(n), z);
  return z;
}

}  // namespace

ShareVec relu_binary(Session& s, const ShareVec& x) {
  if (x.role != s.role()) throw ProtocolError("share belongs to the other party");
  const std::size_t n = x.size();
  const bool is_a = s.role() == Role::A;

  // XOR sharings of the two arithmetic shares: party A's word is (x_A, 0),
  // party B's is (0, x_B).
  std::vector<u64> own_a(n, 0);
  std::vector<u64> own_b(n, 0);
  for (std::size_t e = 0; e < n; ++e) (is_a ? own_a : own_b)[e] = x.values[e];

  std::vector<u64> g = and_round(s, own_a, own_b);
  std::vector<u64> p0(n);
  for (std::size_t e = 0; e < n; ++e) p0[e] = own_a[e] ^ own_b[e];
  std::vector<u64> p = p0;

  // Kogge-Stone prefix over generate/propagate; the last level needs only g.
  for (int shift = 1; shift < 64; shift *= 2) {
    const bool last = shift == 32;
    std::vector<u64> lhs(p);
    std::vector<u64> rhs(n);
    for (std::size_t e = 0; e < n; ++e) rhs[e] = g[e] << shift;
    if (!last) {
      lhs.insert(lhs.end(), p.begin(), p.end());
      for (std::size_t e = 0; e < n; ++e) rhs.push_back(p[e] << shift);
    }
    const auto z = and_round(s, lhs, rhs);
    for (std::size_t e = 0; e < n; ++e) g[e] ^= z[e];
    if (!last) std::copy(z.begin() + static_cast<std::ptrdiff_t>(n), z.end(), p.begin());
  }

  // Sign of the sum: top propagate bit xor carry out of bit 62.
  const auto bits = s.dealer().random_bits(n);
  std::vector<u64> masked(n);
  for (std::size_t e = 0; e < n; ++e) {
    u64 positive = ((p0[e] >> 63) ^ (g[e] >> 62)) & 1;
    if (is_a) positive ^= 1;
    masked[e] = (positive ^ bits[e].binary) & 1;
  }
  const auto theirs = s.exchange(masked);
  if (theirs.size() != n) throw ProtocolError("peer sent a different batch size");

  ShareVec selector(s.role(), 0, n);
  for (std::size_t e = 0; e < n; ++e) {
    const u64 m = (masked[e] ^ theirs[e]) & 1;
    const u64 r = bits[e].arithmetic;
    selector.values[e] = (is_a ? m : 0) + r - 2 * m * r;
  }
  return s.beaver_multiply(selector, x);
}

ShareVec apply_activation(Session& s, Protocol protocol, const ShareVec& x, const PolynomialSpec& spec) {
  switch (protocol) {
    case Protocol::espn: return espn_poly(s, x, spec);
    case Protocol::honeybadger: return hb_poly(s, x, spec);
    case Protocol::sqmul: return sqmul_poly(s, x, spec);
    case Protocol::binary_relu: return relu_binary(s, x);
  }
  throw ConfigError("unknown protocol");
}

std::uint64_t activation_rounds(Protocol protocol, int degree) {
  switch (protocol) {
    case Protocol::espn:
    case Protocol::honeybadger: return degree >= 2 ? 1 : 0;
    case Protocol::sqmul: {
      std::uint64_t rounds = 0;
      for (int m = 1; m < degree; m *= 2) ++rounds;
      return rounds;
    }
    case Protocol::binary_relu: return 9;
  }
  return 0;
}

FailureBound failure_bound(const PolynomialSpec& spec, const RingConfig& cfg) {
  const int c = static_cast<int>(std::ceil(std::log2(spec.range))) + 1;
  const int p = cfg.precision;
  const int L = cfg.total_bits;
  FailureBound out;
  out.per_truncation = std::min(1.0, std::ldexp(1.0, spec.degree * c + 2 * p - L));
  out.first_truncation = std::min(1.0, std::ldexp(1.0, c + p - L));
  double total = 0.0;
  for (int i = 2; i <= spec.degree; ++i) total += std::ldexp(1.0, i * c + 2 * p - L) + out.first_truncation;
  out.total = std::min(1.0, total);
  return out;
}

i64 poly_eval_fixed(i64 x_raw, const PolynomialSpec& spec, int p) {
  const ScalePlan plan = ScalePlan::make(spec.degree, p);
  const u64 x = static_cast<u64>(x_raw);
  u64 acc = static_cast<u64>(spec.coeffs[0]) << p;
  for (int i = 1; i <= spec.degree; ++i) {
    u64 power = x;
    if (i >= 2) {
      const u64 base = static_cast<u64>(x_raw >> plan.pre[i]);
      power = 1;
      for (int k = 0; k < i; ++k) power *= base;
      power = static_cast<u64>(static_cast<i64>(power) >> plan.post[i]);
    }
    acc += static_cast<u64>(spec.coeffs[i]) * power;
  }
  return static_cast<i64>(acc) >> spec.precision;
}

double poly_eval_real(double x, const PolynomialSpec& spec) {
  double acc = 0.0;
  for (int i = spec.degree; i >= 0; --i) acc = acc * x + spec.coefficient(i);
  return acc;
}

}  // namespace polyshare
