#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace oamturb::detail {

/// fftw_malloc-backed complex buffer. FFTW picks codelets by alignment, so
/// every transform goes through buffers of this type to keep results
/// bit-identical between calls.
class FftBuffer {
public:
  explicit FftBuffer(std::size_t size);

  std::complex<double>* data() { return data_.get(); }
  const std::complex<double>* data() const { return data_.get(); }
  std::size_t size() const { return size_; }
  std::span<std::complex<double>> span() { return {data(), size_}; }
  std::complex<double>& operator[](std::size_t i) { return data_[i]; }
  const std::complex<double>& operator[](std::size_t i) const { return data_[i]; }

  void fill_zero();

private:
  struct Free {
    void operator()(std::complex<double>* p) const;
  };
  std::unique_ptr<std::complex<double>[], Free> data_;
  std::size_t size_;
};

enum class FftSign { forward = -1, backward = +1 };

/// Unnormalized in-place 2-D DFT of a rows x cols row-major array:
/// out[k] = sum_j in[j] exp(sign * 2 pi i j.k / n).
void fft2d_inplace(FftBuffer& buffer, int rows, int cols, FftSign sign);

/// `count` independent in-place 1-D transforms of length `length`, stored
/// contiguously one after the other.
void fft1d_batch_inplace(FftBuffer& buffer, int length, int count, FftSign sign);

} // namespace oamturb::detail
