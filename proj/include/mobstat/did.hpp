#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mobstat/betareg.hpp"
#include "mobstat/parallel.hpp"

namespace mobstat::did {

inline constexpr std::size_t kMinSamples = 10000;
inline constexpr std::size_t kDefaultSamples = 100000;

/// delta = (post1 - post2) - (pre1 - pre2); all deltas in percentage points.
struct DidResult {
  double delta_estimate = 0.0;
  double p_value = 1.0;            // two-sided Monte Carlo test of mean delta = 0
  double direction_p_value = 1.0;  // 2 min(#delta<=0, #delta>=0) / n
  double mc_standard_error = 0.0;
  double analytic_delta = 0.0;     // from the four beta means
  std::size_t n_samples = 0;
  std::array<double, 3> delta_quantiles{};  // 2.5%, 50%, 97.5%
  std::uint64_t seed = 0;
  std::array<double, 4> means{};  // pre1, pre2, post1, post2 as fractions
};

/// Inverse-CDF sampler for one beta shape.
class BetaQuantile {
 public:
  explicit BetaQuantile(betareg::BetaShape shape);
  double operator()(double u) const;
  const betareg::BetaShape& shape() const { return shape_; }

 private:
  betareg::BetaShape shape_;
};

/// Four shapes ordered pre1, pre2, post1, post2. Each draw shares one uniform
/// between the two populations of a period (common random numbers), with
/// independent uniforms for pre and post. Chunk c of kChunkSize draws uses
/// stream derive_seed(seed, c), so serial and parallel outputs are identical.
std::vector<double> draw_delta_samples(const std::array<betareg::BetaShape, 4>& shapes, std::size_t n_samples,
                                       std::uint64_t seed, Execution exec = Execution::parallel);

DidResult summarize(std::vector<double> samples, std::uint64_t seed);

DidResult did_test(const betareg::BetaRegFit& pre_fit, const betareg::BetaRegFit& post_fit,
                   std::span<const double> covariates_p1, std::span<const double> covariates_p2,
                   std::size_t n_samples = kDefaultSamples, std::uint64_t seed = 42,
                   Execution exec = Execution::parallel);

struct BlockSpec {
  std::string name;
  std::vector<double> covariates;
};

struct BlockRow {
  std::string name;
  double pre_percent = 0.0;
  double post_percent = 0.0;
};

std::vector<BlockRow> hypothetical_block_report(const betareg::BetaRegFit& pre_fit,
                                                const betareg::BetaRegFit& post_fit,
                                                std::span<const BlockSpec> blocks);

/// One block per covariate, all weight on that covariate.
std::vector<BlockSpec> one_hot_blocks(const betareg::BetaRegFit& fit);

nlohmann::json to_json(const DidResult& result);
DidResult did_from_json(const nlohmann::json& j);
std::string format_block_table(std::span<const BlockRow> rows);

}  // namespace mobstat::did
