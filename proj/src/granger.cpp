#include "mobstat/granger.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "mobstat/errors.hpp"
#include "mobstat/series.hpp"
#include "mobstat/stationarity.hpp"

namespace mobstat::granger {

std::string significance_stars(double p_value) {
  if (p_value < 0.01) return "***";
  if (p_value < 0.05) return "**";
  if (p_value < 0.1) return "*";
  return "";
}

Eigen::MatrixXd lag_design(std::span<const double> x, std::span<const double> y, int lag, bool include_x) {
  const auto t_len = static_cast<Eigen::Index>(y.size());
  const Eigen::Index n = t_len - lag;
  const Eigen::Index k = 1 + lag + (include_x ? lag : 0);
  Eigen::MatrixXd design(n, k);
  for (Eigen::Index row = 0; row < n; ++row) {
    const Eigen::Index t = row + lag;
    design(row, 0) = 1.0;
    for (int i = 1; i <= lag; ++i) {
      design(row, i) = y[static_cast<std::size_t>(t - i)];
      if (include_x) design(row, lag + i) = x[static_cast<std::size_t>(t - i)];
    }
  }
  return design;
}

GrangerLagResult granger_test(std::span<const double> x, std::span<const double> y, int lag) {
  if (lag < 1) throw UsageError(fmt::format("Granger lag must be at least 1, got {}", lag));
  if (x.size() != y.size()) {
    throw DataError(fmt::format("Granger test needs equal-length series ({} vs {})", x.size(), y.size()));
  }
  const std::size_t needed = minimum_length(lag);
  if (y.size() < needed) {
    throw ObservationsError(
        fmt::format("Granger test at lag {} needs at least {} observations, got {}", lag, needed, y.size()), needed);
  }

  Eigen::VectorXd response(static_cast<Eigen::Index>(y.size()) - lag);
  for (Eigen::Index i = 0; i < response.size(); ++i) response[i] = y[static_cast<std::size_t>(i + lag)];

  const auto restricted = stats::ols_fit(lag_design(x, y, lag, false), response);
  const auto unrestricted = stats::ols_fit(lag_design(x, y, lag, true), response);
  const auto f = stats::nested_f_test(restricted, unrestricted);

  GrangerLagResult out;
  out.lag = lag;
  out.n_obs = unrestricted.n_obs;
  out.adjusted_r2 = unrestricted.adjusted_r2;
  out.restricted_adjusted_r2 = restricted.adjusted_r2;
  out.rss_restricted = restricted.rss;
  out.rss_unrestricted = unrestricted.rss;
  out.f_statistic = f.f_statistic;
  out.p_value = f.p_value;
  out.df_num = f.df_num;
  out.df_den = f.df_den;
  for (int i = 1; i <= lag; ++i) {
    const auto j = static_cast<Eigen::Index>(lag + i);
    CoefficientStat c;
    c.estimate = unrestricted.coefficients[j];
    c.t_statistic = unrestricted.t_statistics[j];
    c.p_value = unrestricted.p_values[j];
    c.stars = significance_stars(c.p_value);
    out.b_coefficients.push_back(std::move(c));
  }
  return out;
}

int stationarity_order(std::span<const double> a, std::span<const double> b) {
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  for (int order = 0; order <= kMaxDifferencingOrder; ++order) {
    if (order > 0) {
      sa = stats::difference(sa);
      sb = stats::difference(sb);
    }
    const bool a_ok = !stationarity::kpss_test(sa).reject_at_5pct;
    const bool b_ok = !stationarity::kpss_test(sb).reject_at_5pct;
    if (a_ok && b_ok) return order;
  }
  throw DataError(fmt::format("series remain nonstationary (KPSS, 5%) after {} differences", kMaxDifferencingOrder));
}

std::vector<GrangerScan> granger_scan(std::span<const double> mobility, std::span<const double> deaths, int max_lag,
                                      DirectionRequest request, Execution exec) {
  if (max_lag < 1) throw UsageError(fmt::format("max_lag must be at least 1, got {}", max_lag));
  if (mobility.size() != deaths.size()) {
    throw DataError(fmt::format("series lengths differ ({} vs {})", mobility.size(), deaths.size()));
  }
  const int order = stationarity_order(mobility, deaths);
  const auto h = stats::difference(mobility, order);
  const auto y = stats::difference(deaths, order);
  if (h.size() < minimum_length(max_lag)) {
    throw ObservationsError(
        fmt::format("max lag {} needs at least {} observations after {} difference(s), have {}", max_lag,
                    minimum_length(max_lag), order, h.size()),
        minimum_length(max_lag) + static_cast<std::size_t>(order));
  }

  std::vector<GrangerScan> scans;
  if (request != DirectionRequest::reverse) {
    scans.push_back({Direction::forward, "h_us", "deaths", order, {}});
  }
  if (request != DirectionRequest::forward) {
    scans.push_back({Direction::reverse, "deaths", "h_us", order, {}});
  }
  for (auto& scan : scans) {
    const auto& x = scan.direction == Direction::forward ? h : y;
    const auto& target = scan.direction == Direction::forward ? y : h;
    scan.results.resize(static_cast<std::size_t>(max_lag));
    parallel::for_each_index(static_cast<std::size_t>(max_lag), exec, [&](std::size_t i) {
      scan.results[i] = granger_test(x, target, static_cast<int>(i) + 1);
    });
  }
  return scans;
}

std::vector<GrangerScan> granger_scan(const ingest::WeeklyPair& weekly, int max_lag, DirectionRequest request,
                                      Execution exec) {
  return granger_scan(weekly.h_us, weekly.deaths, max_lag, request, exec);
}

DirectionRequest parse_direction(const std::string& text) {
  if (text == "both") return DirectionRequest::both;
  if (text == "forward") return DirectionRequest::forward;
  if (text == "reverse") return DirectionRequest::reverse;
  throw UsageError(fmt::format("unknown direction '{}' (expected both, forward or reverse)", text));
}

std::string to_string(Direction d) { return d == Direction::forward ? "forward" : "reverse"; }

nlohmann::json to_json(const GrangerScan& scan) {
  nlohmann::json j;
  j["direction"] = to_string(scan.direction);
  j["cause"] = scan.cause;
  j["effect"] = scan.effect;
  j["differencing_order"] = scan.differencing_order;
  j["results"] = nlohmann::json::array();
  for (const auto& r : scan.results) {
    nlohmann::json row;
    row["lag"] = r.lag;
    row["b_coefficients"] = nlohmann::json::array();
    for (const auto& c : r.b_coefficients) {
      row["b_coefficients"].push_back(
          {{"estimate", c.estimate}, {"t_statistic", c.t_statistic}, {"p_value", c.p_value}, {"stars", c.stars}});
    }
    row["adjusted_r2"] = r.adjusted_r2;
    row["restricted_adjusted_r2"] = r.restricted_adjusted_r2;
    row["rss_restricted"] = r.rss_restricted;
    row["rss_unrestricted"] = r.rss_unrestricted;
    row["f_statistic"] = r.f_statistic;
    row["p_value"] = r.p_value;
    row["df_num"] = r.df_num;
    row["df_den"] = r.df_den;
    row["n_obs"] = r.n_obs;
    j["results"].push_back(std::move(row));
  }
  return j;
}

GrangerScan scan_from_json(const nlohmann::json& j) {
  try {
    GrangerScan scan;
    const auto dir = j.at("direction").get<std::string>();
    if (dir != "forward" && dir != "reverse") throw DataError(fmt::format("unknown direction '{}'", dir));
    scan.direction = dir == "forward" ? Direction::forward : Direction::reverse;
    scan.cause = j.value("cause", scan.direction == Direction::forward ? "h_us" : "deaths");
    scan.effect = j.value("effect", scan.direction == Direction::forward ? "deaths" : "h_us");
    scan.differencing_order = j.value("differencing_order", 0);
    for (const auto& row : j.at("results")) {
      GrangerLagResult r;
      r.lag = row.at("lag").get<int>();
      for (const auto& c : row.at("b_coefficients")) {
        CoefficientStat s;
        s.estimate = c.at("estimate").get<double>();
        s.t_statistic = c.value("t_statistic", 0.0);
        s.p_value = c.value("p_value", 1.0);
        s.stars = c.value("stars", significance_stars(s.p_value));
        r.b_coefficients.push_back(std::move(s));
      }
      r.adjusted_r2 = row.at("adjusted_r2").get<double>();
      r.restricted_adjusted_r2 = row.value("restricted_adjusted_r2", 0.0);
      r.rss_restricted = row.value("rss_restricted", 0.0);
      r.rss_unrestricted = row.value("rss_unrestricted", 0.0);
      r.f_statistic = row.at("f_statistic").get<double>();
      r.p_value = row.at("p_value").get<double>();
      r.df_num = row.value("df_num", std::size_t{0});
      r.df_den = row.value("df_den", std::size_t{0});
      r.n_obs = row.value("n_obs", std::size_t{0});
      scan.results.push_back(std::move(r));
    }
    for (std::size_t i = 0; i < scan.results.size(); ++i) {
      if (scan.results[i].lag != static_cast<int>(i) + 1) throw DataError("scan results must cover lags 1..L in order");
    }
    return scan;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("malformed Granger scan JSON: {}", e.what()));
  }
}

namespace {

std::string format_coefficient(double v) {
  const double a = std::fabs(v);
  if (a != 0.0 && (a < 0.1 || a >= 1e6)) return fmt::format("{:.2e}", v);
  return fmt::format("{:.1f}", v);
}

}  // namespace

std::string format_table(const GrangerScan& scan) {
  const std::size_t lags = scan.results.size();
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> labels;

  std::vector<std::string> header{""};
  for (const auto& r : scan.results) header.push_back(std::to_string(r.lag));

  for (std::size_t i = 0; i < lags; ++i) {
    labels.push_back(fmt::format("b_{}", i + 1));
    std::vector<std::string> row;
    for (const auto& r : scan.results) {
      row.push_back(i < r.b_coefficients.size()
                        ? format_coefficient(r.b_coefficients[i].estimate) + r.b_coefficients[i].stars
                        : "-");
    }
    cells.push_back(std::move(row));
  }
  labels.push_back("Adjusted R^2");
  {
    std::vector<std::string> row;
    for (const auto& r : scan.results) row.push_back(fmt::format("{:.2f}", r.adjusted_r2));
    cells.push_back(std::move(row));
  }
  labels.push_back("F-test");
  {
    std::vector<std::string> row;
    for (const auto& r : scan.results) row.push_back(fmt::format("{:.2f}", r.f_statistic));
    cells.push_back(std::move(row));
  }
  labels.push_back("(p-val)");
  {
    std::vector<std::string> row;
    for (const auto& r : scan.results) {
      row.push_back(r.p_value < 0.01 ? "(<0.01)" : fmt::format("({:.2f})", r.p_value));
    }
    cells.push_back(std::move(row));
  }

  std::size_t label_width = 0;
  for (const auto& l : labels) label_width = std::max(label_width, l.size());
  std::vector<std::size_t> widths(lags, 0);
  for (std::size_t c = 0; c < lags; ++c) {
    widths[c] = header[c + 1].size();
    for (const auto& row : cells) widths[c] = std::max(widths[c], row[c].size());
  }

  std::ostringstream out;
  out << fmt::format("Granger causality: {} -> {} (differencing order {})\n", scan.cause, scan.effect,
                     scan.differencing_order);
  out << fmt::format("{:<{}}", "Lag", label_width);
  for (std::size_t c = 0; c < lags; ++c) out << "  " << fmt::format("{:>{}}", header[c + 1], widths[c]);
  out << '\n';
  for (std::size_t r = 0; r < cells.size(); ++r) {
    out << fmt::format("{:<{}}", labels[r], label_width);
    for (std::size_t c = 0; c < lags; ++c) out << "  " << fmt::format("{:>{}}", cells[r][c], widths[c]);
    out << '\n';
  }
  out << "*** p<0.01, ** p<0.05, * p<0.1\n";
  return out.str();
}

}  // namespace mobstat::granger
