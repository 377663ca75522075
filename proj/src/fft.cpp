#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace oamturb::detail {

namespace {

// The FFTW planner is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once per shape and never destroyed.
std::mutex planner_mutex;

fftw_plan cached_plan(int kind, int a, int b, FftSign sign) {
  using Key = std::tuple<int, int, int, int>;
  static std::map<Key, fftw_plan> plans;
  const Key key{kind, a, b, static_cast<int>(sign)};
  std::lock_guard lock(planner_mutex);
  if (auto it = plans.find(key); it != plans.end()) return it->second;

  const std::size_t size = static_cast<std::size_t>(a) * static_cast<std::size_t>(b);
  FftBuffer scratch(size);
  auto* io = reinterpret_cast<fftw_complex*>(scratch.data());
  fftw_plan plan = nullptr;
  if (kind == 2) {
    plan = fftw_plan_dft_2d(a, b, io, io, static_cast<int>(sign), FFTW_ESTIMATE);
  } else {
    int n[] = {a};
    plan = fftw_plan_many_dft(1, n, b, io, nullptr, 1, a, io, nullptr, 1, a, static_cast<int>(sign), FFTW_ESTIMATE);
  }
  if (!plan) throw std::runtime_error("FFTW failed to create a plan");
  plans.emplace(key, plan);
  return plan;
}

} // namespace

FftBuffer::FftBuffer(std::size_t size)
    : data_(static_cast<std::complex<double>*>(fftw_malloc(sizeof(std::complex<double>) * size))), size_(size) {
  if (!data_) throw std::bad_alloc();
  fill_zero();
}

void FftBuffer::Free::operator()(std::complex<double>* p) const { fftw_free(p); }

void FftBuffer::fill_zero() {
  for (std::size_t i = 0; i < size_; ++i) data_[i] = {};
}

void fft2d_inplace(FftBuffer& buffer, int rows, int cols, FftSign sign) {
  if (buffer.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
    throw std::invalid_argument("fft2d_inplace: buffer size mismatch");
  auto* io = reinterpret_cast<fftw_complex*>(buffer.data());
  fftw_execute_dft(cached_plan(2, rows, cols, sign), io, io);
}

void fft1d_batch_inplace(FftBuffer& buffer, int length, int count, FftSign sign) {
  if (buffer.size() != static_cast<std::size_t>(length) * static_cast<std::size_t>(count))
    throw std::invalid_argument("fft1d_batch_inplace: buffer size mismatch");
  auto* io = reinterpret_cast<fftw_complex*>(buffer.data());
  fftw_execute_dft(cached_plan(1, length, count, sign), io, io);
}

} // namespace oamturb::detail
