#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "polyshare/dealer.hpp"
#include "polyshare/ring.hpp"

// Element-parallel local computation used by the protocols. Each kernel has a
// serial reference and an OpenMP version with bit-identical output. Protocol
// code goes through the dispatchers at the bottom.
namespace polyshare::kernels {

enum class Exec { serial, parallel };

struct ConvGeometry {
  int channels = 0;
  int height = 0;
  int width = 0;
  int kernel = 0;
  int stride = 1;
  int padding = 0;

  int out_height() const { return (height + 2 * padding - kernel) / stride + 1; }
  int out_width() const { return (width + 2 * padding - kernel) / stride + 1; }
  std::size_t patch() const { return static_cast<std::size_t>(channels) * kernel * kernel; }
  std::size_t pixels() const { return static_cast<std::size_t>(out_height()) * out_width(); }
};

// Serial reference kernels.
//
// beaver_masks:   out[i] = x[i] + t[i].a, out[n + i] = y[i] + t[i].b
// beaver_combine: z = A*y - B*a + c, with A and B the opened masks
// espn_operands:  party A fills u with x_A^(k-i), party B fills v with
//                 C(k,i) * x_B^i, for i = 0..k; the other vector stays zero
// segment_sum:    out[e] = sum of in[e*width, (e+1)*width)
// hb_powers:      shares of x^1..x^n from opened c = x - r and shares of r^j,
//                 written to out[e*n + (k-1)]
// im2col:         column matrix [patch][pixels] of one CHW image, zero padded
// truncation_wraps: Monte-Carlo count of local-truncation wrap failures for a
//                 fixed value over `trials` random share splits
namespace serial {
void beaver_masks(std::span<const u64> x, std::span<const u64> y, std::span<const TripleShare> t,
                  std::span<u64> out);
void beaver_combine(std::span<const u64> y, std::span<const TripleShare> t, std::span<const u64> opened_a,
                    std::span<const u64> opened_b, std::span<u64> z);
void truncate(Role role, std::span<const u64> in, int bits, std::span<u64> out);
void espn_operands(Role role, std::span<const u64> x, int k, std::span<u64> u, std::span<u64> v);
void segment_sum(std::span<const u64> in, std::size_t width, std::span<u64> out);
void hb_powers(Role role, std::span<const u64> opened, const PowerTupleBatch& tuples, int n,
               std::span<u64> out);
void and_masks(std::span<const u64> u, std::span<const u64> v, std::span<const TripleShare> t,
               std::span<u64> out);
void and_combine(Role role, std::span<const TripleShare> t, std::span<const u64> opened_d,
                 std::span<const u64> opened_e, std::span<u64> z);
void im2col(std::span<const u64> image, const ConvGeometry& g, std::span<u64> cols);
std::uint64_t truncation_wraps(u64 value, int bits, std::uint64_t trials, std::uint64_t seed);
}  // namespace serial

// OpenMP versions of the same kernels.
namespace omp {
void beaver_masks(std::span<const u64> x, std::span<const u64> y, std::span<const TripleShare> t,
                  std::span<u64> out);
void beaver_combine(std::span<const u64> y, std::span<const TripleShare> t, std::span<const u64> opened_a,
                    std::span<const u64> opened_b, std::span<u64> z);
void truncate(Role role, std::span<const u64> in, int bits, std::span<u64> out);
void espn_operands(Role role, std::span<const u64> x, int k, std::span<u64> u, std::span<u64> v);
void segment_sum(std::span<const u64> in, std::size_t width, std::span<u64> out);
void hb_powers(Role role, std::span<const u64> opened, const PowerTupleBatch& tuples, int n,
               std::span<u64> out);
void and_masks(std::span<const u64> u, std::span<const u64> v, std::span<const TripleShare> t,
               std::span<u64> out);
void and_combine(Role role, std::span<const TripleShare> t, std::span<const u64> opened_d,
                 std::span<const u64> opened_e, std::span<u64> z);
void im2col(std::span<const u64> image, const ConvGeometry& g, std::span<u64> cols);
std::uint64_t truncation_wraps(u64 value, int bits, std::uint64_t trials, std::uint64_t seed);
}  // namespace omp

void beaver_masks(Exec e, std::span<const u64> x, std::span<const u64> y, std::span<const TripleShare> t,
                  std::span<u64> out);
void beaver_combine(Exec e, std::span<const u64> y, std::span<const TripleShare> t,
                    std::span<const u64> opened_a, std::span<const u64> opened_b, std::span<u64> z);
void truncate(Exec e, Role role, std::span<const u64> in, int bits, std::span<u64> out);
void espn_operands(Exec e, Role role, std::span<const u64> x, int k, std::span<u64> u, std::span<u64> v);
void segment_sum(Exec e, std::span<const u64> in, std::size_t width, std::span<u64> out);
void hb_powers(Exec e, Role role, std::span<const u64> opened, const PowerTupleBatch& tuples, int n,
               std::span<u64> out);
void and_masks(Exec e, std::span<const u64> u, std::span<const u64> v, std::span<const TripleShare> t,
               std::span<u64> out);
void and_combine(Exec e, Role role, std::span<const TripleShare> t, std::span<const u64> opened_d,
                 std::span<const u64> opened_e, std::span<u64> z);
void im2col(Exec e, std::span<const u64> image, const ConvGeometry& g, std::span<u64> cols);
std::uint64_t truncation_wraps(Exec e, u64 value, int bits, std::uint64_t trials, std::uint64_t seed);

// C(k, i) mod 2^64 for i = 0..k.
void binomial_row(int k, std::span<u64> out);

}  // namespace polyshare::kernels
