#include "polyshare/kernels.hpp"

#include <array>
#include <random>

#include "polyshare/errors.hpp"

namespace polyshare::kernels {

namespace {

constexpr std::uint64_t kWrapChunk = std::uint64_t{1} << 16;
constexpr int kMaxHbDegree = 32;

using Index = std::ptrdiff_t;

std::mt19937_64 chunk_rng(std::uint64_t seed, std::uint64_t chunk) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
  return std::mt19937_64(seq);
}

// Failures among `count` trials drawn from one chunk's stream.
std::uint64_t wraps_in_chunk(u64 value, int bits, std::uint64_t count, std::mt19937_64& rng) {
  const i64 expected = static_cast<i64>(value) >> bits;
  std::uint64_t failures = 0;
  for (std::uint64_t t = 0; t < count; ++t) {
    const u64 a = rng();
    const u64 b = value - a;
    const u64 sum = ring::truncate_share(a, bits, Role::A) + ring::truncate_share(b, bits, Role::B);
    const i64 diff = static_cast<i64>(sum - static_cast<u64>(expected));
    if (diff < 0 || diff > 1) ++failures;
  }
  return failures;
}

void hb_powers_one(Role role, u64 c, std::span<const u64> r, int n, u64* out) {
  // table[k][j] holds a share of x^k r^j for k + j <= n.
  std::array<std::array<u64, kMaxHbDegree + 1>, kMaxHbDegree + 1> table;
  table[0][0] = role == Role::A ? 1 : 0;
  for (int j = 1; j <= n; ++j) table[0][j] = r[j - 1];
  for (int k = 1; k <= n; ++k) {
    for (int j = 0; j + k <= n; ++j) {
      u64 acc = 0;
      for (int i = 0; i < k; ++i) acc += table[k - i - 1][i + j];
      table[k][j] = r[k + j - 1] + c * acc;
    }
    out[k - 1] = table[k][0];
  }
}

void check_hb_args(const PowerTupleBatch& tuples, int n, std::size_t count) {
  if (n < 1 || n > kMaxHbDegree) throw ConfigError("power degree out of supported range");
  if (tuples.degree < n) throw ResourceError("power tuple degree smaller than requested power");
  if (tuples.count() < count) throw ResourceError("not enough power tuples for the batch");
}

}  // namespace

void binomial_row(int k, std::span<u64> out) {
  out[0] = 1;
  for (int i = 1; i <= k; ++i) out[i] = 0;
  for (int row = 1; row <= k; ++row) {
    for (int i = row; i >= 1; --i) out[i] += out[i - 1];
  }
}

namespace serial {

void beaver_masks(std::span<const u64> x, std::span<const u64> y, std::span<const TripleShare> t,
                  std::span<u64> out) {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = x[i] + t[i].a;
    out[n + i] = y[i] + t[i].b;
  }
}

void beaver_combine(std::span<const u64> y, std::span<const TripleShare> t, std::span<const u64> opened_a,
                    std::span<const u64> opened_b, std::span<u64> z) {
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = opened_a[i] * y[i] - opened_b[i] * t[i].a + t[i].c;
}

void truncate(Role role, std::span<const u64> in, int bits, std::span<u64> out) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = ring::truncate_share(in[i], bits, role);
}

void espn_operands(Role role, std::span<const u64> x, int k, std::span<u64> u, std::span<u64> v) {
  const auto width = static_cast<std::size_t>(k) + 1;
  std::vector<u64> binom(width);
  binomial_row(k, binom);
  for (std::size_t e = 0; e < x.size(); ++e) {
    u64* ue = u.data() + e * width;
    u64* ve = v.data() + e * width;
    u64 power = 1;
    for (std::size_t i = 0; i < width; ++i) {
      if (role == Role::A) {
        ue[k - i] = power;  // x_A^i lands at index k - i
        ve[i] = 0;
      } else {
        ue[i] = 0;
        ve[i] = binom[i] * power;
      }
      power *= x[e];
    }
  }
}

void segment_sum(std::span<const u64> in, std::size_t width, std::span<u64> out) {
  for (std::size_t e = 0; e < out.size(); ++e) {
    u64 acc = 0;
    for (std::size_t i = 0; i < width; ++i) acc += in[e * width + i];
    out[e] = acc;
  }
}

void hb_powers(Role role, std::span<const u64> opened, const PowerTupleBatch& tuples, int n,
               std::span<u64> out) {
  check_hb_args(tuples, n, opened.size());
  for (std::size_t e = 0; e < opened.size(); ++e) {
    hb_powers_one(role, opened[e], tuples.tuple(e), n, out.data() + e * static_cast<std::size_t>(n));
  }
}

void and_masks(std::span<const u64> u, std::span<const u64> v, std::span<const TripleShare> t,
               std::span<u64> out) {
  const std::size_t n = u.size();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = u[i] ^ t[i].a;
    out[n + i] = v[i] ^ t[i].b;
  }
}

void and_combine(Role role, std::span<const TripleShare> t, std::span<const u64> opened_d,
                 std::span<const u64> opened_e, std::span<u64> z) {
  for (std::size_t i = 0; i < z.size(); ++i) {
    u64 w = t[i].c ^ (opened_d[i] & t[i].b) ^ (opened_e[i] & t[i].a);
    if (role == Role::A) w ^= opened_d[i] & opened_e[i];
    z[i] = w;
  }
}

void im2col(std::span<const u64> image, const ConvGeometry& g, std::span<u64> cols) {
  const int oh = g.out_height();
  const int ow = g.out_width();
  const std::size_t pixels = g.pixels();
  for (int c = 0; c < g.channels; ++c) {
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        const std::size_t row = (static_cast<std::size_t>(c) * g.kernel + ky) * g.kernel + kx;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.stride - g.padding + ky;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * g.stride - g.padding + kx;
            const bool inside = iy >= 0 && iy < g.height && ix >= 0 && ix < g.width;
            cols[row * pixels + static_cast<std::size_t>(oy) * ow + ox] =
                inside ? image[(static_cast<std::size_t>(c) * g.height + iy) * g.width + ix] : 0;
          }
        }
      }
    }
  }
}

std::uint64_t truncation_wraps(u64 value, int bits, std::uint64_t trials, std::uint64_t seed) {
  const std::uint64_t chunks = (trials + kWrapChunk - 1) / kWrapChunk;
  std::uint64_t failures = 0;
  for (std::uint64_t c = 0; c < chunks; ++c) {
    auto rng = chunk_rng(seed, c);
    const std::uint64_t count = std::min(kWrapChunk, trials - c * kWrapChunk);
    failures += wraps_in_chunk(value, bits, count, rng);
  }
  return failures;
}

}  // namespace serial

namespace omp {

void beaver_masks(std::span<const u64> x, std::span<const u64> y, std::span<const TripleShare> t,
                  std::span<u64> out) {
  const auto n = static_cast<Index>(x.size());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    out[i] = x[i] + t[i].a;
    out[n + i] = y[i] + t[i].b;
  }
}

void beaver_combine(std::span<const u64> y, std::span<const TripleShare> t, std::span<const u64> opened_a,
                    std::span<const u64> opened_b, std::span<u64> z) {
  const auto n = static_cast<Index>(z.size());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) z[i] = opened_a[i] * y[i] - opened_b[i] * t[i].a + t[i].c;
}

void truncate(Role role, std::span<const u64> in, int bits, std::span<u64> out) {
  const auto n = static_cast<Index>(in.size());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) out[i] = ring::truncate_share(in[i], bits, role);
}

void espn_operands(Role role, std::span<const u64> x, int k, std::span<u64> u, std::span<u64> v) {
  const auto width = static_cast<std::size_t>(k) + 1;
  std::vector<u64> binom(width);
  binomial_row(k, binom);
  const auto n = static_cast<Index>(x.size());
#pragma omp parallel for schedule(static)
  for (Index e = 0; e < n; ++e) {
    u64* ue = u.data() + e * width;
    u64* ve = v.data() + e * width;
    u64 power = 1;
    if (role == Role::A) {
      for (std::size_t i = 0; i < width; ++i, power *= x[e]) {
        ue[k - i] = power;
        ve[i] = 0;
      }
    } else {
      for (std::size_t i = 0; i < width; ++i, power *= x[e]) {
        ue[i] = 0;
        ve[i] = binom[i] * power;
      }
    }
  }
}

void segment_sum(std::span<const u64> in, std::size_t width, std::span<u64> out) {
  const auto n = static_cast<Index>(out.size());
#pragma omp parallel for schedule(static)
  for (Index e = 0; e < n; ++e) {
    const u64* row = in.data() + e * width;
    u64 acc = 0;
    for (std::size_t i = 0; i < width; ++i) acc += row[i];
    out[e] = acc;
  }
}

void hb_powers(Role role, std::span<const u64> opened, const PowerTupleBatch& tuples, int n,
               std::span<u64> out) {
  check_hb_args(tuples, n, opened.size());
  const auto count = static_cast<Index>(opened.size());
#pragma omp parallel for schedule(static)
  for (Index e = 0; e < count; ++e) {
    hb_powers_one(role, opened[e], tuples.tuple(e), n, out.data() + e * n);
  }
}

void and_masks(std::span<const u64> u, std::span<const u64> v, std::span<const TripleShare> t,
               std::span<u64> out) {
  const auto n = static_cast<Index>(u.size());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    out[i] = u[i] ^ t[i].a;
    out[n + i] = v[i] ^ t[i].b;
  }
}

void and_combine(Role role, std::span<const TripleShare> t, std::span<const u64> opened_d,
                 std::span<const u64> opened_e, std::span<u64> z) {
  const auto n = static_cast<Index>(z.size());
  const u64 keep = role == Role::A ? ~u64{0} : 0;
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    z[i] = t[i].c ^ (opened_d[i] & t[i].b) ^ (opened_e[i] & t[i].a) ^ (opened_d[i] & opened_e[i] & keep);
  }
}

void im2col(std::span<const u64> image, const ConvGeometry& g, std::span<u64> cols) {
  const int oh = g.out_height();
  const int ow = g.out_width();
  const auto rows = static_cast<Index>(g.patch());
  const std::size_t pixels = g.pixels();
  const int kk = g.kernel * g.kernel;
#pragma omp parallel for schedule(static)
  for (Index row = 0; row < rows; ++row) {
    const int c = static_cast<int>(row) / kk;
    const int ky = (static_cast<int>(row) % kk) / g.kernel;
    const int kx = static_cast<int>(row) % g.kernel;
    u64* dst = cols.data() + row * pixels;
    for (int oy = 0; oy < oh; ++oy) {
      const int iy = oy * g.stride - g.padding + ky;
      for (int ox = 0; ox < ow; ++ox) {
        const int ix = ox * g.stride - g.padding + kx;
        const bool inside = iy >= 0 && iy < g.height && ix >= 0 && ix < g.width;
        dst[oy * ow + ox] = inside ? image[(static_cast<std::size_t>(c) * g.height + iy) * g.width + ix] : 0;
      }
    }
  }
}

std::uint64_t truncation_wraps(u64 value, int bits, std::uint64_t trials, std::uint64_t seed) {
  const auto chunks = static_cast<Index>((trials + kWrapChunk - 1) / kWrapChunk);
  std::uint64_t failures = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : failures)
  for (Index c = 0; c < chunks; ++c) {
    auto rng = chunk_rng(seed, static_cast<std::uint64_t>(c));
    const std::uint64_t count = std::min(kWrapChunk, trials - static_cast<std::uint64_t>(c) * kWrapChunk);
    failures += wraps_in_chunk(value, bits, count, rng);
  }
  return failures;
}

}  // namespace omp

void beaver_masks(Exec e, std::span<const u64> x, std::span<const u64> y, std::span<const TripleShare> t,
                  std::span<u64> out) {
  e == Exec::parallel ? omp::beaver_masks(x, y, t, out) : serial::beaver_masks(x, y, t, out);
}

void beaver_combine(Exec e, std::span<const u64> y, std::span<const TripleShare> t,
                    std::span<const u64> opened_a, std::span<const u64> opened_b, std::span<u64> z) {
  e == Exec::parallel ? omp::beaver_combine(y, t, opened_a, opened_b, z)
                      : serial::beaver_combine(y, t, opened_a, opened_b, z);
}

void truncate(Exec e, Role role, std::span<const u64> in, int bits, std::span<u64> out) {
  e == Exec::parallel ? omp::truncate(role, in, bits, out) : serial::truncate(role, in, bits, out);
}

void espn_operands(Exec e, Role role, std::span<const u64> x, int k, std::span<u64> u, std::span<u64> v) {
  e == Exec::parallel ? omp::espn_operands(role, x, k, u, v) : serial::espn_operands(role, x, k, u, v);
}

void segment_sum(Exec e, std::span<const u64> in, std::size_t width, std::span<u64> out) {
  e == Exec::parallel ? omp::segment_sum(in, width, out) : serial::segment_sum(in, width, out);
}

void hb_powers(Exec e, Role role, std::span<const u64> opened, const PowerTupleBatch& tuples, int n,
               std::span<u64> out) {
  e == Exec::parallel ? omp::hb_powers(role, opened, tuples, n, out)
                      : serial::hb_powers(role, opened, tuples, n, out);
}

void and_masks(Exec e, std::span<const u64> u, std::span<const u64> v, std::span<const TripleShare> t,
               std::span<u64> out) {
  e == Exec::parallel ? omp::and_masks(u, v, t, out) : serial::and_masks(u, v, t, out);
}

void and_combine(Exec e, Role role, std::span<const TripleShare> t, std::span<const u64> opened_d,
                 std::span<const u64> opened_e, std::span<u64> z) {
  e == Exec::parallel ? omp::and_combine(role, t, opened_d, opened_e, z)
                      : serial::and_combine(role, t, opened_d, opened_e, z);
}

void im2col(Exec e, std::span<const u64> image, const ConvGeometry& g, std::span<u64> cols) {
  e == Exec::parallel ? omp::im2col(image, g, cols) : serial::im2col(image, g, cols);
}

std::uint64_t truncation_wraps(Exec e, u64 value, int bits, std::uint64_t trials, std::uint64_t seed) {
  return e == Exec::parallel ? omp::truncation_wraps(value, bits, trials, seed)
                             : serial::truncation_wraps(value, bits, trials, seed);
}

}  // namespace polyshare::kernels
