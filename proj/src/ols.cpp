#include "mobstat/ols.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "mobstat/distributions.hpp"
#include "mobstat/errors.hpp"

namespace mobstat::stats {

OlsFit ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& response) {
  const auto n = static_cast<std::size_t>(design.rows());
  const auto k = static_cast<std::size_t>(design.cols());
  if (response.size() != design.rows()) {
    throw DataError(fmt::format("design has {} rows but response has {} values", n, response.size()));
  }
  if (k == 0) throw DataError("design matrix has no columns");
  if (n <= k) {
    throw ObservationsError(fmt::format("OLS needs more observations than parameters (n={}, k={})", n, k), k + 1);
  }

  const double max_norm = design.colwise().norm().maxCoeff();
  if (!(max_norm > 0.0)) throw SingularDesignError("design matrix is identically zero (column 0)", 0);

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(design);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(static_cast<Eigen::Index>(k)).triangularView<Eigen::Upper>();
  for (std::size_t j = 0; j < k; ++j) {
    if (std::fabs(r(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j))) <= kRankTolerance * max_norm) {
      throw SingularDesignError(
          fmt::format("design matrix is rank deficient: column {} is a linear combination of earlier columns", j), j);
    }
  }

  OlsFit fit;
  fit.n_obs = n;
  fit.n_params = k;
  const Eigen::VectorXd qty = (qr.householderQ().transpose() * response).head(static_cast<Eigen::Index>(k));
  const auto upper = r.triangularView<Eigen::Upper>();
  fit.coefficients = upper.solve(qty);
  fit.fitted = design * fit.coefficients;
  fit.residuals = response - fit.fitted;
  fit.rss = fit.residuals.squaredNorm();
  fit.tss = (response.array() - response.mean()).matrix().squaredNorm();

  const double df = static_cast<double>(n - k);
  const double sigma2 = fit.rss / df;
  fit.residual_se = std::sqrt(sigma2);

  // (X'X)^-1 = R^-1 R^-T
  const Eigen::MatrixXd r_inv = upper.solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)));
  const Eigen::VectorXd xtx_inv_diag = r_inv.rowwise().squaredNorm();
  fit.coefficient_standard_errors = (sigma2 * xtx_inv_diag).array().sqrt();
  fit.t_statistics = fit.coefficients.array() / fit.coefficient_standard_errors.array();
  fit.p_values.resize(static_cast<Eigen::Index>(k));
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(k); ++j) {
    fit.p_values[j] = fit.coefficient_standard_errors[j] > 0.0 ? t_two_sided_p(fit.t_statistics[j], df)
                                                               : (fit.coefficients[j] == 0.0 ? 1.0 : 0.0);
  }

  if (fit.tss > 0.0) {
    fit.r2 = 1.0 - fit.rss / fit.tss;
    fit.adjusted_r2 = 1.0 - (fit.rss / df) / (fit.tss / static_cast<double>(n - 1));
  } else {
    fit.r2 = fit.adjusted_r2 = fit.rss == 0.0 ? 1.0 : 0.0;
  }
  return fit;
}

NestedFTest nested_f_test(double rss_restricted, double rss_unrestricted, std::size_t restrictions,
                          std::size_t df_den) {
  if (df_den == 0) {
    throw ObservationsError("F-test has no residual degrees of freedom in the unrestricted model", 1);
  }
  if (restrictions == 0) throw DataError("F-test needs at least one restriction");
  const double slack = 1e-12 * std::max(1.0, rss_restricted);
  if (rss_restricted + slack < rss_unrestricted) {
    throw DataError(fmt::format("restricted RSS {} is below unrestricted RSS {}; models are not nested",
                                rss_restricted, rss_unrestricted));
  }
  NestedFTest test;
  test.df_num = restrictions;
  test.df_den = df_den;
  const double gain = std::max(0.0, rss_restricted - rss_unrestricted);
  const double denom = rss_unrestricted / static_cast<double>(df_den);
  if (denom > 0.0) {
    test.f_statistic = (gain / static_cast<double>(restrictions)) / denom;
    test.p_value = f_sf(test.f_statistic, static_cast<double>(restrictions), static_cast<double>(df_den));
  } else {
    // Exact fit of the unrestricted model.
    test.f_statistic = gain > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    test.p_value = gain > 0.0 ? 0.0 : 1.0;
  }
  return test;
}

NestedFTest nested_f_test(const OlsFit& restricted, const OlsFit& unrestricted) {
  if (restricted.n_obs != unrestricted.n_obs) {
    throw DataError(fmt::format("nested models fitted on different samples ({} vs {} observations)",
                                restricted.n_obs, unrestricted.n_obs));
  }
  if (unrestricted.n_params <= restricted.n_params) {
    throw DataError("unrestricted model must have strictly more parameters than the restricted one");
  }
  if (unrestricted.n_obs <= unrestricted.n_params) {
    throw ObservationsError("F-test has no residual degrees of freedom in the unrestricted model",
                            unrestricted.n_params + 1);
  }
  return nested_f_test(restricted.rss, unrestricted.rss, unrestricted.n_params - restricted.n_params,
                       unrestricted.n_obs - unrestricted.n_params);
}

}  // namespace mobstat::stats
