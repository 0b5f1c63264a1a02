#include "gafrl/gaf.hpp"

#include <algorithm>
#include <cmath>

#include "gafrl/errors.hpp"

namespace gafrl {

std::vector<double> minmax_scale(std::span<const double> x) {
  if (x.empty()) throw DomainError("cannot scale an empty sequence");
  for (double v : x) {
    if (!std::isfinite(v)) throw DomainError("non-finite value in sequence to scale");
  }
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(x.size(), 0.5);
  if (hi == lo) return out;
  const double span = hi - lo;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::clamp((x[i] - lo) / span, 0.0, 1.0);
  }
  return out;
}

std::vector<double> gaf_angles(std::span<const double> x) {
  auto phi = minmax_scale(x);
  for (double& v : phi) v = std::acos(v);
  return phi;
}

GafMatrix::GafMatrix(std::size_t size, std::vector<double> values)
    : size_(size), values_(std::move(values)) {
  if (values_.size() != size_ * size_) {
    throw DimensionError("GAF matrix expects " + std::to_string(size_ * size_) +
                         " values, got " + std::to_string(values_.size()));
  }
}

GafMatrix encode_gaf(std::span<const double> x) {
  if (x.size() < 2) throw DomainError("GAF needs a series of at least 2 samples");
  const auto scaled = minmax_scale(x);
  const std::size_t n = scaled.size();
  std::vector<double> sines(n);
  for (std::size_t i = 0; i < n; ++i) sines[i] = std::sqrt(1.0 - scaled[i] * scaled[i]);

  std::vector<double> values(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v =
          std::clamp(scaled[i] * scaled[j] - sines[i] * sines[j], -1.0, 1.0);
      values[i * n + j] = v;
      values[j * n + i] = v;
    }
  }
  return GafMatrix(n, std::move(values));
}

GafTensor::GafTensor(std::array<GafMatrix, kGafChannels> channels)
    : channels_(std::move(channels)) {
  for (const auto& c : channels_) {
    if (c.size() != channels_[0].size()) {
      throw DimensionError("GAF channels differ in size");
    }
  }
}

std::vector<double> GafTensor::flatten() const {
  std::vector<double> out;
  out.reserve(kGafChannels * size() * size());
  for (const auto& c : channels_) {
    out.insert(out.end(), c.values().begin(), c.values().end());
  }
  return out;
}

GafTensor encode_window(const Window& w) {
  const auto o = w.opens();
  const auto h = w.highs();
  const auto l = w.lows();
  const auto c = w.closes();
  return GafTensor({encode_gaf(o), encode_gaf(h), encode_gaf(l), encode_gaf(c)});
}

}  // namespace gafrl
