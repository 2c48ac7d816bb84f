#include "mobstat/betareg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "mobstat/errors.hpp"
#include "mobstat/series.hpp"
#include "mobstat/special.hpp"

namespace mobstat::betareg {

namespace {

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& covariates) {
  Eigen::MatrixXd x(covariates.rows(), covariates.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(covariates.cols()) = covariates;
  return x;
}

// Symmetric pseudo-inverse of a negated Hessian after Jacobi equilibration.
// Eigenvalues below `relative_tolerance` * max are treated as null directions;
// negative ones are flipped so the result always yields an ascent direction.
struct PseudoInverse {
  Eigen::MatrixXd matrix;
  int null_directions = 0;
};

PseudoInverse equilibrated_pinv(const Eigen::MatrixXd& neg_hessian, double relative_tolerance) {
  const Eigen::Index k = neg_hessian.rows();
  Eigen::VectorXd scale(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double d = std::fabs(neg_hessian(i, i));
    scale[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
  }
  const Eigen::MatrixXd m = scale.asDiagonal() * neg_hessian * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd lam = es.eigenvalues();
  const double lam_max = lam.cwiseAbs().maxCoeff();
  PseudoInverse out;
  Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double l = std::fabs(lam[i]);
    if (!(l > relative_tolerance * lam_max)) {
      ++out.null_directions;
      continue;
    }
    const Eigen::VectorXd v = es.eigenvectors().col(i);
    inv.noalias() += (v * v.transpose()) / l;
  }
  out.matrix = scale.asDiagonal() * inv * scale.asDiagonal();
  return out;
}

constexpr double kNullTolerance = 1e-9;

}  // namespace

LikelihoodTerms log_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                               const Eigen::VectorXd& theta, bool with_hessian, Execution exec) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  const Eigen::Index k = p + 1;
  if (theta.size() != k) throw DataError(fmt::format("parameter vector has {} entries, expected {}", theta.size(), k));
  const Eigen::VectorXd b = theta.head(p);
  const double phi = std::exp(theta[p]);
  const double lg_phi = std::lgamma(phi);
  const double dg_phi = stats::digamma(phi);
  const double tg_phi = with_hessian ? stats::trigamma(phi) : 0.0;

  const std::size_t chunks = parallel::chunk_count(static_cast<std::size_t>(n));
  std::vector<LikelihoodTerms> partial(chunks);
  parallel::for_each_index(chunks, exec, [&](std::size_t c) {
    const auto begin = static_cast<Eigen::Index>(c * parallel::kChunkSize);
    const auto end = std::min<Eigen::Index>(n, begin + static_cast<Eigen::Index>(parallel::kChunkSize));
    const Eigen::Index rows = end - begin;
    const auto x = design.middleRows(begin, rows);
    const Eigen::VectorXd lin = x * b;

    Eigen::VectorXd d_lin(rows);
    Eigen::VectorXd d2_lin(rows);
    Eigen::VectorXd d2_lin_phi(rows);
    double value = 0.0;
    double d_phi_sum = 0.0;
    double d2_phi_sum = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double y = response[begin + r];
      const double mu = stats::inv_logit(lin[r]);
      const double a = mu * phi;
      const double bb = (1.0 - mu) * phi;
      const double log_y = std::log(y);
      const double log_1my = std::log1p(-y);
      const double ystar = log_y - log_1my;
      const double dg_a = stats::digamma(a);
      const double dg_b = stats::digamma(bb);
      const double mustar = dg_a - dg_b;
      const double g = mu * (1.0 - mu);

      value += lg_phi - std::lgamma(a) - std::lgamma(bb) + (a - 1.0) * log_y + (bb - 1.0) * log_1my;
      d_lin[r] = phi * (ystar - mustar) * g;
      d_phi_sum += mu * (ystar - mustar) + log_1my - dg_b + dg_phi;
      if (with_hessian) {
        const double tg_a = stats::trigamma(a);
        const double tg_b = stats::trigamma(bb);
        const double gp = g * (1.0 - 2.0 * mu);
        d2_lin[r] = phi * (-phi * (tg_a + tg_b) * g * g + (ystar - mustar) * gp);
        d2_lin_phi[r] = g * ((ystar - mustar) - phi * (mu * tg_a - (1.0 - mu) * tg_b));
        d2_phi_sum += tg_phi - mu * mu * tg_a - (1.0 - mu) * (1.0 - mu) * tg_b;
      }
    }
    LikelihoodTerms t;
    t.value = value;
    t.gradient.resize(k);
    t.gradient.head(p) = x.transpose() * d_lin;
    t.gradient[p] = phi * d_phi_sum;
    if (with_hessian) {
      t.hessian.resize(k, k);
      t.hessian.topLeftCorner(p, p) = x.transpose() * d2_lin.asDiagonal() * x;
      const Eigen::VectorXd cross = phi * (x.transpose() * d2_lin_phi);
      t.hessian.col(p).head(p) = cross;
      t.hessian.row(p).head(p) = cross.transpose();
      t.hessian(p, p) = phi * d_phi_sum + phi * phi * d2_phi_sum;
    }
    partial[c] = std::move(t);
  });

  LikelihoodTerms total;
  total.gradient = Eigen::VectorXd::Zero(k);
  if (with_hessian) total.hessian = Eigen::MatrixXd::Zero(k, k);
  for (const auto& t : partial) {
    total.value += t.value;
    total.gradient += t.gradient;
    if (with_hessian) total.hessian += t.hessian;
  }
  return total;
}

std::size_t adjust_boundary(Eigen::VectorXd& response) {
  const double n = static_cast<double>(response.size());
  std::size_t changed = 0;
  for (auto& y : response) {
    if (y == 0.0 || y == 1.0) {
      y = (y * (n - 1.0) + 0.5) / n;
      ++changed;
    }
  }
  return changed;
}

BetaRegFit betareg_fit(const CovariateDesign& design, const BetaRegOptions& options) {
  const Eigen::Index n = design.response.size();
  const Eigen::Index p = design.covariates.cols();
  if (design.covariates.rows() != n) {
    throw DataError(fmt::format("covariate matrix has {} rows but response has {}", design.covariates.rows(), n));
  }
  if (!design.names.empty() && static_cast<Eigen::Index>(design.names.size()) != p) {
    throw DataError(fmt::format("{} covariate names for {} covariates", design.names.size(), p));
  }
  if (n <= p + 2) {
    throw ObservationsError(
        fmt::format("beta regression with {} covariates needs more than {} observations, got {}", p, p + 2, n),
        static_cast<std::size_t>(p + 3));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = design.response[i];
    if (y == 0.0 || y == 1.0) {
      throw DomainError(fmt::format(
          "response {} at row {} lies on the boundary; apply adjust_boundary, y' = (y(N-1) + 0.5)/N, before fitting", y,
          i));
    }
    if (!(y > 0.0 && y < 1.0)) throw DomainError(fmt::format("response {} at row {} outside (0,1)", y, i));
  }

  const Eigen::MatrixXd x = with_intercept(design.covariates);
  const Eigen::Index k = p + 2;

  // Warm start: least squares on the logit scale, precision by moments.
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = stats::logit(design.response[i]);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(x);
  cod.setThreshold(kNullTolerance);
  const Eigen::VectorXd b0 = cod.solve(z);
  const Eigen::VectorXd resid = z - x * b0;
  const double dof = std::max<double>(1.0, static_cast<double>(n - cod.rank()));
  const double s2 = resid.squaredNorm() / dof;
  double phi0 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = stats::inv_logit(x.row(i).dot(b0));
    phi0 += 1.0 / (s2 * mu * (1.0 - mu));
  }
  phi0 = phi0 / static_cast<double>(n) - 1.0;
  if (!(phi0 > 0.1) || !std::isfinite(phi0)) phi0 = 1.0;

  Eigen::VectorXd theta(k);
  theta.head(p + 1) = b0;
  theta[p + 1] = std::log(phi0);

  BetaRegFit fit;
  fit.n_obs = static_cast<std::size_t>(n);
  auto terms = log_likelihood(x, design.response, theta, true, options.exec);
  fit.log_likelihood_trace.push_back(terms.value);

  int iter = 0;
  double gnorm = terms.gradient.cwiseAbs().maxCoeff();
  for (; iter < options.max_iterations; ++iter) {
    if (gnorm < options.gradient_tolerance) {
      fit.converged = true;
      break;
    }
    const auto pinv = equilibrated_pinv(-terms.hessian, kNullTolerance);
    const Eigen::VectorXd direction = pinv.matrix * terms.gradient;
    double step = 1.0;
    bool accepted = false;
    LikelihoodTerms candidate;
    for (int halving = 0; halving < 60; ++halving) {
      const Eigen::VectorXd trial = theta + step * direction;
      if (std::isfinite(trial[p + 1]) && trial[p + 1] < 700.0) {
        candidate = log_likelihood(x, design.response, trial, true, options.exec);
        const double slack = 64.0 * std::numeric_limits<double>::epsilon() * std::fabs(terms.value);
        if (std::isfinite(candidate.value) && candidate.value >= terms.value - slack) {
          theta = trial;
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) break;
    terms = std::move(candidate);
    fit.log_likelihood_trace.push_back(terms.value);
    gnorm = terms.gradient.cwiseAbs().maxCoeff();
  }
  if (!fit.converged && gnorm < options.gradient_tolerance) fit.converged = true;

  fit.iterations = iter;
  fit.gradient_norm = gnorm;
  if (!fit.converged) {
    throw ConvergenceError(fmt::format("beta regression did not converge after {} iterations; gradient max-norm {:.3e} "
                                       "(tolerance {:.1e})",
                                       iter, gnorm, options.gradient_tolerance),
                           gnorm);
  }

  fit.coefficients = theta.head(p + 1);
  fit.precision_phi = std::exp(theta[p + 1]);
  fit.log_likelihood = terms.value;
  fit.coefficient_names.push_back(kInterceptName);
  for (Eigen::Index j = 0; j < p; ++j) {
    fit.coefficient_names.push_back(design.names.empty() ? fmt::format("x{}", j + 1)
                                                         : design.names[static_cast<std::size_t>(j)]);
  }
  const auto cov = equilibrated_pinv(-terms.hessian, kNullTolerance);
  fit.rank_deficient = cov.null_directions > 0;
  fit.standard_errors = cov.matrix.diagonal().head(p + 1).cwiseMax(0.0).cwiseSqrt();
  fit.phi_standard_error = fit.precision_phi * std::sqrt(std::max(0.0, cov.matrix(p + 1, p + 1)));
  return fit;
}

double predict_mean(const Eigen::VectorXd& coefficients, std::span<const double> covariates) {
  if (static_cast<Eigen::Index>(covariates.size()) + 1 != coefficients.size()) {
    throw UsageError(fmt::format("covariate vector has {} entries but the model has {} covariates", covariates.size(),
                                 coefficients.size() - 1));
  }
  double eta = coefficients[0];
  for (std::size_t j = 0; j < covariates.size(); ++j) eta += coefficients[static_cast<Eigen::Index>(j) + 1] * covariates[j];
  return stats::inv_logit(eta);
}

double predict_mean(const BetaRegFit& fit, std::span<const double> covariates) {
  return predict_mean(fit.coefficients, covariates);
}

BetaShape beta_density_params(double mean, double phi) {
  if (!(mean > 0.0 && mean < 1.0)) throw DomainError(fmt::format("beta mean {} outside (0,1)", mean));
  if (!(phi > 0.0) || !std::isfinite(phi)) throw DomainError(fmt::format("beta precision {} must be positive", phi));
  return {mean * phi, (1.0 - mean) * phi};
}

double beta_log_density(double y, BetaShape shape) {
  if (!(y > 0.0 && y < 1.0)) return -std::numeric_limits<double>::infinity();
  return (shape.alpha - 1.0) * std::log(y) + (shape.beta - 1.0) * std::log1p(-y) -
         stats::log_beta(shape.alpha, shape.beta);
}

std::vector<double> coefficient_p_values(const BetaRegFit& fit) {
  std::vector<double> out(static_cast<std::size_t>(fit.coefficients.size()), std::numeric_limits<double>::quiet_NaN());
  if (fit.standard_errors.size() != fit.coefficients.size()) return out;
  for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j) {
    const double se = fit.standard_errors[j];
    if (se > 0.0) {
      const double z = std::fabs(fit.coefficients[j] / se);
      out[static_cast<std::size_t>(j)] = std::erfc(z / std::sqrt(2.0));
    }
  }
  return out;
}

nlohmann::json to_json(const BetaRegFit& fit) {
  nlohmann::json j;
  j["schema"] = "betareg_fit/1";
  j["link"] = "logit";
  j["coefficient_names"] = fit.coefficient_names;
  j["coefficients"] = std::vector<double>(fit.coefficients.begin(), fit.coefficients.end());
  if (fit.standard_errors.size() > 0) {
    j["standard_errors"] = std::vector<double>(fit.standard_errors.begin(), fit.standard_errors.end());
  }
  j["precision_phi"] = fit.precision_phi;
  j["phi_standard_error"] = fit.phi_standard_error;
  j["log_likelihood"] = fit.log_likelihood;
  j["n_obs"] = fit.n_obs;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["gradient_norm"] = fit.gradient_norm;
  j["rank_deficient"] = fit.rank_deficient;
  return j;
}

BetaRegFit fit_from_json(const nlohmann::json& j) {
  try {
    BetaRegFit fit;
    fit.coefficient_names = j.at("coefficient_names").get<std::vector<std::string>>();
    const auto coefs = j.at("coefficients").get<std::vector<double>>();
    if (coefs.empty() || coefs.size() != fit.coefficient_names.size()) {
      throw DataError("coefficients and coefficient_names must be non-empty and of equal length");
    }
    fit.coefficients = Eigen::Map<const Eigen::VectorXd>(coefs.data(), static_cast<Eigen::Index>(coefs.size()));
    if (j.contains("standard_errors") && !j["standard_errors"].is_null()) {
      const auto se = j["standard_errors"].get<std::vector<double>>();
      if (se.size() != coefs.size()) throw DataError("standard_errors length does not match coefficients");
      fit.standard_errors = Eigen::Map<const Eigen::VectorXd>(se.data(), static_cast<Eigen::Index>(se.size()));
    }
    fit.precision_phi = j.at("precision_phi").get<double>();
    if (!(fit.precision_phi > 0.0)) throw DataError(fmt::format("precision_phi {} must be positive", fit.precision_phi));
    fit.phi_standard_error = j.value("phi_standard_error", 0.0);
    fit.log_likelihood = j.value("log_likelihood", 0.0);
    fit.n_obs = j.value("n_obs", std::size_t{0});
    fit.converged = j.value("converged", true);
    fit.iterations = j.value("iterations", 0);
    fit.gradient_norm = j.value("gradient_norm", 0.0);
    fit.rank_deficient = j.value("rank_deficient", false);
    return fit;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("malformed beta regression JSON: {}", e.what()));
  }
}

BetaRegFit load_fit(const std::filesystem::path& path) {
  const auto text = ingest::read_file(path);
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw DataError(fmt::format("'{}' is not valid JSON", path.string()));
  return fit_from_json(j);
}

std::string format_table(const BetaRegFit& fit, const std::string& title) {
  std::ostringstream out;
  if (!title.empty()) out << title << '\n';
  const auto pvals = coefficient_p_values(fit);
  auto row = [&](std::size_t j) {
    std::string stars;
    if (!std::isnan(pvals[j])) {
      stars = pvals[j] < 0.01 ? "***" : pvals[j] < 0.05 ? "**" : pvals[j] < 0.1 ? "*" : "";
    }
    std::string se = fit.standard_errors.size() > 0
                         ? fmt::format("({:.3g})", fit.standard_errors[static_cast<Eigen::Index>(j)])
                         : std::string{};
    out << fmt::format("{:<16} {:>12.4g}{:<3} {:>12}\n", fit.coefficient_names[j],
                       fit.coefficients[static_cast<Eigen::Index>(j)], stars, se);
  };
  out << fmt::format("{:<16} {:>15} {:>12}\n", "Variable", "Coefficient", "(SE)");
  for (std::size_t j = 1; j < fit.coefficient_names.size(); ++j) row(j);
  row(0);
  out << fmt::format("{:<16} {:>12.4g}\n", "phi", fit.precision_phi);
  out << fmt::format("{:<16} {:>12}\n", "N", fit.n_obs);
  out << fmt::format("{:<16} {:>12.6g}\n", "log-likelihood", fit.log_likelihood);
  out << "*** p<0.01, ** p<0.05, * p<0.1\n";
  return out.str();
}

CovariateSet parse_covariate_set(const std::string& text) {
  CovariateSet set{false, false, false, IncomeUnits::dollars};
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find('+', start), text.size());
    const auto part = text.substr(start, end - start);
    if (part == "race") set.race = true;
    else if (part == "age" || part == "older50") set.older50 = true;
    else if (part == "income") set.income = true;
    else throw UsageError(fmt::format("unknown covariate group '{}' (expected race, age, income joined by '+')", part));
    start = end + 1;
  }
  if (!set.race && !set.older50 && !set.income) throw UsageError("covariate set is empty");
  return set;
}

CovariateDesign design_from_records(std::span<const ingest::DailyCbgRecord> mobility,
                                    std::span<const ingest::CbgDemographics> demographics, DateRange window,
                                    const CovariateSet& set) {
  if (window.last < window.first) throw UsageError("date range ends before it starts");
  std::map<std::string, const ingest::CbgDemographics*> demo;
  for (const auto& d : demographics) demo.emplace(d.cbg_id, &d);
  std::map<std::string, std::pair<double, int>> response;
  for (const auto& r : mobility) {
    if (!window.contains(r.date) || !demo.contains(r.cbg_id)) continue;
    auto& [sum, count] = response[r.cbg_id];
    sum += r.median_pct_time_home;
    ++count;
  }

  CovariateDesign design;
  if (set.race) {
    for (const char* name : ingest::kRaceNames) design.names.emplace_back(name);
  }
  if (set.older50) design.names.emplace_back("older50");
  if (set.income) design.names.emplace_back("median_income");
  const auto n = static_cast<Eigen::Index>(response.size());
  design.covariates.resize(n, static_cast<Eigen::Index>(design.names.size()));
  design.response.resize(n);
  Eigen::Index i = 0;
  for (const auto& [id, acc] : response) {
    const auto& d = *demo.at(id);
    Eigen::Index c = 0;
    if (set.race) {
      for (double f : d.race_fractions) design.covariates(i, c++) = f;
    }
    if (set.older50) design.covariates(i, c++) = d.older50_fraction;
    if (set.income) {
      design.covariates(i, c++) = set.income_units == IncomeUnits::thousands ? d.median_income / 1000.0 : d.median_income;
    }
    design.response[i] = acc.first / acc.second;
    design.row_ids.push_back(id);
    ++i;
  }
  return design;
}

}  // namespace mobstat::betareg
