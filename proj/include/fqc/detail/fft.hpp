// Radix-2 complex FFT and its separable k-dimensional extension on cubic grids.
// Twiddles are evaluated directly (no recurrence) and the butterfly order is
// fixed, so results are reproducible bit for bit.
#pragma once

#include "fqc/types.hpp"

#include <algorithm>
#include <cstddef>
#include <vector>

namespace fqc::detail {

class Fft1d {
 public:
  explicit Fft1d(std::size_t n) : n_(n), twiddle_(n / 2), rev_(n) {
    if (n == 0 || (n & (n - 1)) != 0) {
      throw PreconditionError("Fft1d: length must be a power of two");
    }
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double a = -kTwoPi * static_cast<double>(k) / static_cast<double>(n);
      twiddle_[k] = Complex(std::cos(a), std::sin(a));
    }
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) {
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      }
      rev_[i] = r;
    }
  }

  std::size_t size() const { return n_; }

  /// In place transform of n values spaced `stride` apart.
  /// forward: X_k = sum_j x_j e^{-2 pi i jk/n}; inverse omits the 1/n factor.
  void run(Complex* data, std::size_t stride, bool inverse, std::vector<Complex>& scratch) const {
    scratch.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) scratch[rev_[i]] = data[i * stride];
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t step = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t k = 0; k < half; ++k) {
          const Complex w = twiddle_[k * step];
          const double wi = inverse ? -w.imag() : w.imag();
          const Complex u = scratch[start + k];
          const Complex x = scratch[start + k + half];
          const Complex v(x.real() * w.real() - x.imag() * wi, x.real() * wi + x.imag() * w.real());
          scratch[start + k] = u + v;
          scratch[start + k + half] = u - v;
        }
      }
    }
    for (std::size_t i = 0; i < n_; ++i) data[i * stride] = scratch[i];
  }

 private:
  std::size_t n_;
  std::vector<Complex> twiddle_;
  std::vector<std::size_t> rev_;
};

/// Transform of a row-major n^rank array along every axis. Strided axes are
/// processed a few columns at a time through a contiguous buffer.
inline void fft_nd(std::vector<Complex>& data, std::size_t n, int rank, bool inverse) {
  if (rank == 0) return;
  const Fft1d plan(n);
  std::vector<Complex> scratch;
  std::size_t total = 1;
  for (int a = 0; a < rank; ++a) total *= n;
  if (data.size() != total) throw PreconditionError("fft_nd: array size mismatch");
  constexpr std::size_t kBatch = 16;
  std::vector<Complex> buffer;
  std::size_t stride = 1;
  for (int axis = rank - 1; axis >= 0; --axis) {
    const std::size_t block = stride * n;
    for (std::size_t outer = 0; outer < total; outer += block) {
      if (stride == 1) {
        plan.run(data.data() + outer, 1, inverse, scratch);
        continue;
      }
      for (std::size_t inner = 0; inner < stride; inner += kBatch) {
        const std::size_t width = std::min(kBatch, stride - inner);
        buffer.resize(width * n);
        Complex* base = data.data() + outer + inner;
        for (std::size_t j = 0; j < n; ++j) {
          for (std::size_t c = 0; c < width; ++c) buffer[c * n + j] = base[j * stride + c];
        }
        for (std::size_t c = 0; c < width; ++c) plan.run(buffer.data() + c * n, 1, inverse, scratch);
        for (std::size_t j = 0; j < n; ++j) {
          for (std::size_t c = 0; c < width; ++c) base[j * stride + c] = buffer[c * n + j];
        }
      }
    }
    stride = block;
  }
}

}  // namespace fqc::detail
