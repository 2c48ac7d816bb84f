#include "mobstat/series.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "mobstat/errors.hpp"

namespace mobstat::stats {

std::vector<double> difference(std::span<const double> series) {
  if (series.size() < 2) {
    throw ObservationsError(fmt::format("differencing needs at least 2 values, got {}", series.size()), 2);
  }
  std::vector<double> out(series.size() - 1);
  for (std::size_t i = 0; i + 1 < series.size(); ++i) out[i] = series[i + 1] - series[i];
  return out;
}

std::vector<double> difference(std::span<const double> series, int order) {
  std::vector<double> out(series.begin(), series.end());
  for (int i = 0; i < order; ++i) out = difference(out);
  return out;
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError(fmt::format("logit is defined on (0,1), got {}", p));
  return std::log(p / (1.0 - p));
}

double inv_logit(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double link_logit(LinkDirection direction, double value) {
  return direction == LinkDirection::forward ? logit(value) : inv_logit(value);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw ObservationsError("mean of an empty series", 1);
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace mobstat::stats
