#pragma once

#include <span>
#include <vector>

namespace mobstat::stats {

/// First difference: out[i] = in[i+1] - in[i].
std::vector<double> difference(std::span<const double> series);
std::vector<double> difference(std::span<const double> series, int order);

enum class LinkDirection { forward, inverse };

double logit(double p);
double inv_logit(double eta);
double link_logit(LinkDirection direction, double value);

double mean(std::span<const double> values);

}  // namespace mobstat::stats
