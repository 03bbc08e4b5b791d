#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fbptf {

/// Dense N x M x K tensor of doubles with a {0,1} observation mask.
///
/// Cell (i, j, k) lives at flat offset (i * M + j) * K + k. Masked-out cells
/// keep whatever value they were given; every consumer is expected to skip
/// them.
class MaskedTensor {
 public:
  MaskedTensor() = default;
  MaskedTensor(std::size_t n, std::size_t m, std::size_t k)
      : n_(n), m_(m), k_(k), values_(n * m * k, 0.0), mask_(n * m * k, 0) {}

  std::size_t n() const noexcept { return n_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::size_t offset(std::size_t i, std::size_t j, std::size_t k) const noexcept { return (i * m_ + j) * k_ + k; }

  double& value(std::size_t i, std::size_t j, std::size_t k) noexcept { return values_[offset(i, j, k)]; }
  double value(std::size_t i, std::size_t j, std::size_t k) const noexcept { return values_[offset(i, j, k)]; }

  bool observed(std::size_t i, std::size_t j, std::size_t k) const noexcept { return mask_[offset(i, j, k)] != 0; }

  void set(std::size_t i, std::size_t j, std::size_t k, double v) noexcept {
    values_[offset(i, j, k)] = v;
    mask_[offset(i, j, k)] = 1;
  }
  void hide(std::size_t i, std::size_t j, std::size_t k) noexcept { mask_[offset(i, j, k)] = 0; }

  std::size_t observed_count() const noexcept;

  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }
  const std::vector<std::uint8_t>& mask() const noexcept { return mask_; }
  std::vector<std::uint8_t>& mask() noexcept { return mask_; }

 private:
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::size_t k_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
};

/// Observed parameter differences: values(i, j, k) = A'(k, i, j) - A(k, i).
using DeltaTensor = MaskedTensor;

inline std::size_t MaskedTensor::observed_count() const noexcept {
  std::size_t c = 0;
  for (auto b : mask_) c += b != 0;
  return c;
}

}  // namespace fbptf
