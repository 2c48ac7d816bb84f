#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace mobstat::stats {

struct OlsFit {
  Eigen::VectorXd coefficients;  // intercept first when the design has one
  Eigen::VectorXd residuals;
  Eigen::VectorXd fitted;
  double rss = 0.0;
  double tss = 0.0;
  std::size_t n_obs = 0;
  std::size_t n_params = 0;
  Eigen::VectorXd coefficient_standard_errors;
  Eigen::VectorXd t_statistics;
  Eigen::VectorXd p_values;
  double r2 = 0.0;
  double adjusted_r2 = 0.0;
  double residual_se = 0.0;

  std::size_t df_residual() const { return n_obs - n_params; }
};

/// Relative to the largest design column norm.
inline constexpr double kRankTolerance = 1e-10;

/// Least squares through an orthogonal (Householder QR) factorization.
/// Throws SingularDesignError naming the first column that is numerically a
/// combination of earlier ones, ObservationsError when n <= k.
OlsFit ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& response);

struct NestedFTest {
  double f_statistic = 0.0;
  std::size_t df_num = 0;
  std::size_t df_den = 0;
  double p_value = 1.0;
};

/// Joint test that the regressors present only in `unrestricted` are zero.
NestedFTest nested_f_test(const OlsFit& restricted, const OlsFit& unrestricted);

/// Same statistic from raw sums of squares.
NestedFTest nested_f_test(double rss_restricted, double rss_unrestricted, std::size_t restrictions,
                          std::size_t df_den);

}  // namespace mobstat::stats
