#include "mobstat/did.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "mobstat/errors.hpp"
#include "mobstat/special.hpp"

namespace mobstat::did {

namespace {

// Uniform on the open interval (0, 1) from the top 53 bits.
double open_uniform(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double quantile_of_sorted(const std::vector<double>& sorted, double q) {
  // Linear interpolation between order statistics (type 7).
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

BetaQuantile::BetaQuantile(betareg::BetaShape shape) : shape_(shape) {
  if (!(shape.alpha > 0.0 && shape.beta > 0.0)) {
    throw DomainError(fmt::format("beta shape ({}, {}) must be positive", shape.alpha, shape.beta));
  }
}

double BetaQuantile::operator()(double u) const { return stats::incomplete_beta_inverse(shape_.alpha, shape_.beta, u); }

std::vector<double> draw_delta_samples(const std::array<betareg::BetaShape, 4>& shapes, std::size_t n_samples,
                                       std::uint64_t seed, Execution exec) {
  const std::array<BetaQuantile, 4> q{BetaQuantile(shapes[0]), BetaQuantile(shapes[1]), BetaQuantile(shapes[2]),
                                      BetaQuantile(shapes[3])};
  std::vector<double> out(n_samples);
  parallel::for_each_index(parallel::chunk_count(n_samples), exec, [&](std::size_t c) {
    std::mt19937_64 rng(parallel::derive_seed(seed, c));
    const std::size_t begin = c * parallel::kChunkSize;
    const std::size_t end = std::min(n_samples, begin + parallel::kChunkSize);
    for (std::size_t i = begin; i < end; ++i) {
      const double u_pre = open_uniform(rng);
      const double u_post = open_uniform(rng);
      const double pre_gap = q[0](u_pre) - q[1](u_pre);
      const double post_gap = q[2](u_post) - q[3](u_post);
      out[i] = post_gap - pre_gap;
    }
  });
  return out;
}

DidResult summarize(std::vector<double> samples, std::uint64_t seed) {
  const std::size_t n = samples.size();
  if (n < 2) throw ObservationsError("need at least two delta samples", 2);
  DidResult r;
  r.n_samples = n;
  r.seed = seed;

  // Chunk-ordered sums keep the result independent of how draws were scheduled.
  double sum = 0.0;
  for (std::size_t c = 0; c < parallel::chunk_count(n); ++c) {
    double part = 0.0;
    const std::size_t end = std::min(n, (c + 1) * parallel::kChunkSize);
    for (std::size_t i = c * parallel::kChunkSize; i < end; ++i) part += samples[i];
    sum += part;
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  std::size_t non_positive = 0;
  std::size_t non_negative = 0;
  for (double d : samples) {
    ss += (d - mean) * (d - mean);
    if (d <= 0.0) ++non_positive;
    if (d >= 0.0) ++non_negative;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double se = sd / std::sqrt(static_cast<double>(n));
  const double floor_p = 2.0 / static_cast<double>(n);

  double p;
  if (se > 0.0) {
    p = std::erfc(std::fabs(mean / se) / std::sqrt(2.0));
  } else {
    p = mean == 0.0 ? 1.0 : 0.0;
  }
  r.p_value = std::clamp(p, floor_p, 1.0);
  r.direction_p_value =
      std::clamp(2.0 * static_cast<double>(std::min(non_positive, non_negative)) / static_cast<double>(n), floor_p, 1.0);

  std::sort(samples.begin(), samples.end());
  r.delta_quantiles = {100.0 * quantile_of_sorted(samples, 0.025), 100.0 * quantile_of_sorted(samples, 0.5),
                       100.0 * quantile_of_sorted(samples, 0.975)};
  r.delta_estimate = 100.0 * mean;
  r.mc_standard_error = 100.0 * se;
  return r;
}

DidResult did_test(const betareg::BetaRegFit& pre_fit, const betareg::BetaRegFit& post_fit,
                   std::span<const double> covariates_p1, std::span<const double> covariates_p2,
                   std::size_t n_samples, std::uint64_t seed, Execution exec) {
  if (pre_fit.coefficients.size() != post_fit.coefficients.size()) {
    throw UsageError(fmt::format("pre and post models have different covariate counts ({} vs {})",
                                 pre_fit.covariate_count(), post_fit.covariate_count()));
  }
  if (covariates_p1.size() != pre_fit.covariate_count() || covariates_p2.size() != pre_fit.covariate_count()) {
    throw UsageError(fmt::format("population covariate vectors have {} and {} entries; the models expect {}",
                                 covariates_p1.size(), covariates_p2.size(), pre_fit.covariate_count()));
  }
  if (n_samples < kMinSamples) {
    throw UsageError(fmt::format("n_samples must be at least {}, got {}", kMinSamples, n_samples));
  }
  const double pre1 = betareg::predict_mean(pre_fit, covariates_p1);
  const double pre2 = betareg::predict_mean(pre_fit, covariates_p2);
  const double post1 = betareg::predict_mean(post_fit, covariates_p1);
  const double post2 = betareg::predict_mean(post_fit, covariates_p2);
  const std::array<betareg::BetaShape, 4> shapes{
      betareg::beta_density_params(pre1, pre_fit.precision_phi),
      betareg::beta_density_params(pre2, pre_fit.precision_phi),
      betareg::beta_density_params(post1, post_fit.precision_phi),
      betareg::beta_density_params(post2, post_fit.precision_phi)};

  auto result = summarize(draw_delta_samples(shapes, n_samples, seed, exec), seed);
  result.means = {pre1, pre2, post1, post2};
  result.analytic_delta = 100.0 * ((post1 - post2) - (pre1 - pre2));
  return result;
}

std::vector<BlockRow> hypothetical_block_report(const betareg::BetaRegFit& pre_fit,
                                                const betareg::BetaRegFit& post_fit,
                                                std::span<const BlockSpec> blocks) {
  std::vector<BlockRow> rows;
  rows.reserve(blocks.size());
  for (const auto& block : blocks) {
    if (block.covariates.size() != pre_fit.covariate_count() || block.covariates.size() != post_fit.covariate_count()) {
      throw UsageError(fmt::format("block '{}' has {} covariates; models expect {} (pre) and {} (post)", block.name,
                                   block.covariates.size(), pre_fit.covariate_count(), post_fit.covariate_count()));
    }
    rows.push_back({block.name, 100.0 * betareg::predict_mean(pre_fit, block.covariates),
                    100.0 * betareg::predict_mean(post_fit, block.covariates)});
  }
  return rows;
}

std::vector<BlockSpec> one_hot_blocks(const betareg::BetaRegFit& fit) {
  std::vector<BlockSpec> blocks;
  const std::size_t p = fit.covariate_count();
  for (std::size_t j = 0; j < p; ++j) {
    BlockSpec b;
    b.name = j + 1 < fit.coefficient_names.size() ? fit.coefficient_names[j + 1] : fmt::format("x{}", j + 1);
    b.covariates.assign(p, 0.0);
    b.covariates[j] = 1.0;
    blocks.push_back(std::move(b));
  }
  return blocks;
}

nlohmann::json to_json(const DidResult& r) {
  nlohmann::json j;
  j["schema"] = "did_result/1";
  j["delta_estimate_pp"] = r.delta_estimate;
  j["p_value"] = r.p_value;
  j["direction_p_value"] = r.direction_p_value;
  j["mc_standard_error_pp"] = r.mc_standard_error;
  j["analytic_delta_pp"] = r.analytic_delta;
  j["n_samples"] = r.n_samples;
  j["delta_quantiles_pp"] = {{"q025", r.delta_quantiles[0]}, {"q50", r.delta_quantiles[1]}, {"q975", r.delta_quantiles[2]}};
  j["seed"] = r.seed;
  j["means"] = {{"pre_p1", r.means[0]}, {"pre_p2", r.means[1]}, {"post_p1", r.means[2]}, {"post_p2", r.means[3]}};
  return j;
}

DidResult did_from_json(const nlohmann::json& j) {
  try {
    DidResult r;
    r.delta_estimate = j.at("delta_estimate_pp").get<double>();
    r.p_value = j.at("p_value").get<double>();
    r.direction_p_value = j.value("direction_p_value", 1.0);
    r.mc_standard_error = j.value("mc_standard_error_pp", 0.0);
    r.analytic_delta = j.value("analytic_delta_pp", 0.0);
    r.n_samples = j.at("n_samples").get<std::size_t>();
    const auto& q = j.at("delta_quantiles_pp");
    r.delta_quantiles = {q.at("q025").get<double>(), q.at("q50").get<double>(), q.at("q975").get<double>()};
    r.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("means")) {
      const auto& m = j["means"];
      r.means = {m.at("pre_p1").get<double>(), m.at("pre_p2").get<double>(), m.at("post_p1").get<double>(),
                 m.at("post_p2").get<double>()};
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("malformed DiD result JSON: {}", e.what()));
  }
}

std::string format_block_table(std::span<const BlockRow> rows) {
  std::ostringstream out;
  std::size_t width = 18;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  out << fmt::format("{:<{}} {:>8} {:>8}\n", "Hypothetical block", width, "Pre", "Post");
  for (const auto& r : rows) {
    out << fmt::format("{:<{}} {:>7.1f}% {:>7.1f}%\n", r.name, width, r.pre_percent, r.post_percent);
  }
  return out.str();
}

}  // namespace mobstat::did
