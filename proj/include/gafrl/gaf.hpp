#pragma once

#include <array>
#include <span>
#include <vector>

#include "gafrl/market_data.hpp"

namespace gafrl {

// Min-max scaling to [0, 1]. A constant sequence maps to 0.5 everywhere.
// Throws DomainError on empty input or NaN/infinite entries.
std::vector<double> minmax_scale(std::span<const double> x);

// Polar angles arccos(scaled x_i), each in [0, pi/2].
std::vector<double> gaf_angles(std::span<const double> x);

// Symmetric W x W summation field, entry (i, j) = cos(phi_i + phi_j).
class GafMatrix {
 public:
  GafMatrix(std::size_t size, std::vector<double> values);

  std::size_t size() const { return size_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * size_ + j]; }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t size_;
  std::vector<double> values_;
};

// Entries are formed as s_i s_j - sqrt(1 - s_i^2) sqrt(1 - s_j^2) with s the
// scaled series, i.e. cos(phi_i)cos(phi_j) - sin(phi_i)sin(phi_j). This avoids
// the round-off of evaluating cos(arccos(.) + arccos(.)), so analytic corner
// cases come out exact. Requires at least 2 samples.
GafMatrix encode_gaf(std::span<const double> x);

enum class GafChannel : std::size_t { Open = 0, High = 1, Low = 2, Close = 3 };
inline constexpr std::size_t kGafChannels = 4;

// Four channels in fixed order open, high, low, close; each scaled with its
// own min and max.
class GafTensor {
 public:
  explicit GafTensor(std::array<GafMatrix, kGafChannels> channels);

  std::size_t size() const { return channels_[0].size(); }
  const GafMatrix& channel(GafChannel c) const {
    return channels_[static_cast<std::size_t>(c)];
  }
  const GafMatrix& channel(std::size_t c) const { return channels_.at(c); }

  // Channel-major (C, W, W) copy, the layout the CNN consumes.
  std::vector<double> flatten() const;

 private:
  std::array<GafMatrix, kGafChannels> channels_;
};

GafTensor encode_window(const Window& w);

}  // namespace gafrl
