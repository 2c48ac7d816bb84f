#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mobstat/ingest.hpp"
#include "mobstat/parallel.hpp"

namespace mobstat::betareg {

/// Per-CBG covariates (no intercept column) and mean daily at-home fraction.
struct CovariateDesign {
  Eigen::MatrixXd covariates;
  Eigen::VectorXd response;
  std::vector<std::string> names;
  std::vector<std::string> row_ids;
};

inline const std::string kInterceptName = "constant";

struct BetaRegOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 200;
  Execution exec = Execution::parallel;
};

struct BetaRegFit {
  std::vector<std::string> coefficient_names;  // intercept first
  Eigen::VectorXd coefficients;
  double precision_phi = 1.0;
  Eigen::VectorXd standard_errors;  // empty when unknown (hand-entered models)
  double phi_standard_error = 0.0;
  double log_likelihood = 0.0;
  std::size_t n_obs = 0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  bool rank_deficient = false;
  std::vector<double> log_likelihood_trace;

  std::size_t covariate_count() const { return static_cast<std::size_t>(coefficients.size()) - 1; }
};

/// Log-likelihood in theta = (b, ln phi) with its gradient and observed Hessian.
struct LikelihoodTerms {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// `design` includes the intercept column. Summed over fixed chunks in chunk
/// order, so serial and parallel execution agree bit for bit.
LikelihoodTerms log_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                               const Eigen::VectorXd& theta, bool with_hessian = true,
                               Execution exec = Execution::parallel);

/// Replaces exact 0 and 1 responses by (y (N-1) + 0.5) / N. Returns the count changed.
std::size_t adjust_boundary(Eigen::VectorXd& response);

/// Maximum likelihood with logit mean link and constant precision.
/// Throws DomainError on responses at 0 or 1 (see adjust_boundary),
/// ObservationsError when n <= covariates + 2, ConvergenceError otherwise.
BetaRegFit betareg_fit(const CovariateDesign& design, const BetaRegOptions& options = {});

/// logit^-1(b0 + sum b_j x_j); covariates exclude the intercept.
double predict_mean(const Eigen::VectorXd& coefficients, std::span<const double> covariates);
double predict_mean(const BetaRegFit& fit, std::span<const double> covariates);

struct BetaShape {
  double alpha = 1.0;
  double beta = 1.0;

  double mean() const { return alpha / (alpha + beta); }
  double variance() const {
    const double s = alpha + beta;
    return alpha * beta / (s * s * (s + 1.0));
  }
};

/// (mu phi, (1 - mu) phi)
BetaShape beta_density_params(double mean, double phi);
double beta_log_density(double y, BetaShape shape);

/// Standard errors of b via z = b / SE; NaN when standard errors are missing.
std::vector<double> coefficient_p_values(const BetaRegFit& fit);

nlohmann::json to_json(const BetaRegFit& fit);
BetaRegFit fit_from_json(const nlohmann::json& j);
BetaRegFit load_fit(const std::filesystem::path& path);
std::string format_table(const BetaRegFit& fit, const std::string& title = "");

enum class IncomeUnits { dollars, thousands };

struct CovariateSet {
  bool race = true;
  bool older50 = false;
  bool income = false;
  IncomeUnits income_units = IncomeUnits::dollars;
};

/// "race", "age", "race+income", "age+income", ...
CovariateSet parse_covariate_set(const std::string& text);

struct DateRange {
  Date first;
  Date last;  // inclusive

  bool contains(Date d) const { return d >= first && d <= last; }
  bool overlaps(const DateRange& other) const { return first <= other.last && other.first <= last; }
};

/// Response: per-CBG mean of median_pct_time_home over the window. CBGs with no
/// records in the window or no demographics row are skipped.
CovariateDesign design_from_records(std::span<const ingest::DailyCbgRecord> mobility,
                                    std::span<const ingest::CbgDemographics> demographics, DateRange window,
                                    const CovariateSet& set);

}  // namespace mobstat::betareg
