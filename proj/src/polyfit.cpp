#include "polyshare/polyfit.hpp"

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>
#include <algorithm>
#include <cmath>
#include <limits>

#include "polyshare/errors.hpp"

namespace polyshare {

namespace {

using boost::multiprecision::cpp_int;

double relu(double x) { return x > 0.0 ? x : 0.0; }

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// Exact sums S_m = sum_{k=1..K} k^m for m = 0..max_m via
// (K+1)^(m+1) - 1 = sum_{j<=m} C(m+1, j) S_j.
std::vector<cpp_int> power_sums(i64 k_max, int max_m) {
  std::vector<cpp_int> s(static_cast<std::size_t>(max_m) + 1);
  const cpp_int k1 = cpp_int(k_max) + 1;
  for (int m = 0; m <= max_m; ++m) {
    cpp_int rhs = boost::multiprecision::pow(k1, static_cast<unsigned>(m + 1)) - 1;
    cpp_int binom = 1;  // C(m+1, j)
    for (int j = 0; j < m; ++j) {
      rhs -= binom * s[j];
      binom = binom * (m + 1 - j) / (j + 1);
    }
    s[m] = rhs / (m + 1);
  }
  return s;
}

// Normal equations of the grid fit in the variable u = x / unit:
// G = sum v v^T and b = sum v * ReLU(x) * 2^y_shift with v = (u^0..u^n).
struct NormalEquations {
  LMatrix g;
  LVector b;
};

NormalEquations normal_equations(int degree, double range, double step, double unit, int y_shift) {
  const auto k_max = static_cast<i64>(std::floor(range / step));
  const auto sums = power_sums(k_max, 2 * degree + 1);
  const long double ratio = static_cast<long double>(step) / static_cast<long double>(unit);
  std::vector<long double> scaled(sums.size());
  long double r = 1.0L;
  for (std::size_t m = 0; m < sums.size(); ++m, r *= ratio) scaled[m] = sums[m].convert_to<long double>() * r;

  NormalEquations ne{LMatrix::Zero(degree + 1, degree + 1), LVector::Zero(degree + 1)};
  for (int i = 0; i <= degree; ++i) {
    for (int j = 0; j <= degree; ++j) {
      // Negative grid points mirror positive ones; x = 0 only adds to G_00.
      if ((i + j) % 2 == 0) ne.g(i, j) = 2.0L * scaled[static_cast<std::size_t>(i + j)];
    }
    ne.b(i) = std::ldexp(static_cast<long double>(unit), y_shift) * scaled[static_cast<std::size_t>(i + 1)];
  }
  ne.g(0, 0) += 1.0L;
  return ne;
}

// Schnorr-Euchner enumeration of min ||R a - z||^2 over integer a in a box.
class LatticeSearch {
 public:
  LatticeSearch(const LMatrix& r, const LVector& z, i64 bound)
      : r_(r), z_(z), bound_(bound), m_(static_cast<int>(z.size())), cur_(m_), best_(m_) {}

  std::vector<i64> run(const std::vector<i64>& start) {
    best_ = start;
    best_cost_ = cost(start);
    search(m_ - 1, 0.0);
    return best_;
  }

 private:
  long double cost(const std::vector<i64>& a) const {
    long double total = 0.0;
    for (int k = 0; k < m_; ++k) {
      long double s = -z_(k);
      for (int j = k; j < m_; ++j) s += r_(k, j) * static_cast<long double>(a[j]);
      total += s * s;
    }
    return total;
  }

  void search(int k, long double partial) {
    long double s = z_(k);
    for (int j = k + 1; j < m_; ++j) s -= r_(k, j) * static_cast<long double>(cur_[j]);
    const long double rkk = r_(k, k);
    const long double center = s / rkk;
    const auto clamp = [&](long double v) {
      return std::clamp<long double>(v, static_cast<long double>(-bound_), static_cast<long double>(bound_));
    };
    const auto step_cost = [&](i64 v) {
      const long double d = rkk * (static_cast<long double>(v) - center);
      return d * d;
    };

    const i64 first = static_cast<i64>(clamp(std::nearbyint(center)));
    i64 up = first;
    i64 down = first - 1;
    bool up_open = true;
    bool down_open = down >= -bound_;
    while (up_open || down_open) {
      i64 v;
      if (up_open && (!down_open || step_cost(up) <= step_cost(down))) {
        v = up++;
        up_open = up <= bound_;
      } else {
        v = down--;
        down_open = down >= -bound_;
      }
      const long double c = partial + step_cost(v);
      if (c >= best_cost_) {
        // Candidates only get farther from the center in this direction.
        if (v >= first) up_open = false;
        else down_open = false;
        continue;
      }
      cur_[k] = v;
      if (k == 0) {
        best_cost_ = c;
        best_ = cur_;
      } else {
        search(k - 1, c);
      }
    }
  }

  const LMatrix& r_;
  const LVector& z_;
  i64 bound_;
  int m_;
  std::vector<i64> cur_;
  std::vector<i64> best_;
  long double best_cost_ = std::numeric_limits<long double>::infinity();
};

struct ExactPoint {
  cpp_int numerator;  // x = numerator * 2^exponent
  int exponent = 0;
};

ExactPoint exact(double x) {
  int e = 0;
  const double mant = std::frexp(x, &e);
  const auto scaled = static_cast<i64>(std::ldexp(mant, 53));
  return {cpp_int(scaled), e - 53};
}

// poly(x) - ReLU(x) with every term brought to a common power-of-two denominator.
double exact_error(const PolynomialSpec& spec, double x) {
  const ExactPoint pt = exact(x);
  const int n = spec.degree;
  const int shift = pt.exponent < 0 ? -pt.exponent : 0;
  const cpp_int num = pt.exponent < 0 ? pt.numerator : pt.numerator << pt.exponent;
  // value * 2^(precision + n*shift)
  cpp_int acc = 0;
  cpp_int power = 1;
  for (int i = 0; i <= n; ++i) {
    acc += cpp_int(spec.coeffs[i]) * power * (cpp_int(1) << ((n - i) * shift));
    power *= num;
  }
  if (x > 0) acc -= (num << spec.precision) * (cpp_int(1) << ((n - 1) * shift));
  const int denom_bits = spec.precision + n * shift;
  const bool negative = acc < 0;
  if (negative) acc = -acc;
  // Keep 60 significant bits before converting.
  const int excess = acc == 0 ? 0 : std::max(0, static_cast<int>(boost::multiprecision::msb(acc)) - 60);
  const double mag = std::ldexp((acc >> excess).convert_to<double>(), excess - denom_bits);
  return negative ? -mag : mag;
}

}  // namespace

std::vector<double> fit_grid(double range, double step) {
  if (!(range >= 0.0) || !(step > 0.0)) throw ConfigError("grid needs range >= 0 and step > 0");
  const auto k = static_cast<i64>(std::floor(range / step));
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(2 * k + 1));
  for (i64 i = -k; i <= k; ++i) xs.push_back(static_cast<double>(i) * step);
  return xs;
}

std::vector<double> fit_lsq(int degree, double range, double step) {
  if (degree < 1) throw ConfigError("degree must be >= 1");
  if (!(range >= 0.0) || !(step > 0.0)) throw ConfigError("grid needs range >= 0 and step > 0");
  // Fitting in x / range keeps the normal equations well conditioned; the
  // orthogonal decomposition gives the minimum-norm solution when the grid
  // has fewer points than coefficients.
  const double unit = range > 0.0 ? range : 1.0;
  const NormalEquations ne = normal_equations(degree, range, step, unit, 0);
  const LVector c = ne.g.completeOrthogonalDecomposition().solve(ne.b);
  std::vector<double> out(static_cast<std::size_t>(degree) + 1);
  for (int i = 0; i <= degree; ++i) out[i] = static_cast<double>(c(i) / std::pow(static_cast<long double>(unit), i));
  return out;
}

PolynomialSpec naive_round(const std::vector<double>& coeffs, double range, int p_fit) {
  PolynomialSpec spec{static_cast<int>(coeffs.size()) - 1, {}, range, p_fit};
  const double bound = std::ldexp(1.0, p_fit);
  for (double c : coeffs) spec.coeffs.push_back(static_cast<i64>(std::clamp(std::round(std::ldexp(c, p_fit)), -bound, bound)));
  return spec;
}

PolynomialSpec fit_quantized(int degree, double range, int p_fit) {
  if (p_fit < 4 || p_fit > 30) throw ConfigError("fit precision must be in [4, 30]");
  if (degree < 1 || degree > 16) throw ConfigError("degree must be in [1, 16]");
  if (!(range > 0.0)) throw ConfigError("fit range must be positive");
  const double step = std::ldexp(1.0, -p_fit);
  if (2 * static_cast<i64>(std::floor(range / step)) + 1 <= degree) throw ConfigError("grid has too few points");

  // ||B A - Y||^2 = ||R A - z||^2 + const with G = L L^T in u = x / range,
  // R = L^T diag(range^i) and z = L^-1 b.
  const NormalEquations ne = normal_equations(degree, range, step, range, p_fit);
  const Eigen::LLT<LMatrix> llt(ne.g);
  if (llt.info() != Eigen::Success) throw ConfigError("fitting grid is degenerate");
  LMatrix r = llt.matrixU();
  for (int j = 0; j <= degree; ++j) r.col(j) *= std::pow(static_cast<long double>(range), j);
  const LVector z = llt.matrixL().solve(ne.b);

  const PolynomialSpec start = naive_round(fit_lsq(degree, range, step), range, p_fit);
  LatticeSearch search(r, z, i64{1} << p_fit);
  PolynomialSpec spec{degree, search.run(start.coeffs), range, p_fit};
  if (std::all_of(spec.coeffs.begin(), spec.coeffs.end(), [](i64 c) { return c == 0; })) {
    throw ConfigError("coefficient bound forces the all-zero polynomial");
  }
  return spec;
}

double fit_objective(const PolynomialSpec& spec, double step) {
  long double total = 0.0L;
  for (double x : fit_grid(spec.range, step)) {
    long double v = 0.0L;
    for (int i = spec.degree; i >= 0; --i) v = v * x + static_cast<long double>(spec.coeffs[i]);
    const long double d = v - std::ldexp(static_cast<long double>(relu(x)), spec.precision);
    total += d * d;
  }
  return static_cast<double>(total);
}

double error_at(const PolynomialSpec& spec, double x) { return exact_error(spec, x); }

MaxError max_error(const PolynomialSpec& spec, double range, double step) {
  MaxError worst;
  for (double x : fit_grid(range, step)) {
    const double e = std::abs(exact_error(spec, x));
    if (e > worst.error) worst = {e, x};
  }
  return worst;
}

}  // namespace polyshare
