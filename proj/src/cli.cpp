#include "mobstat/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "mobstat/bundle.hpp"
#include "mobstat/csv.hpp"
#include "mobstat/did.hpp"
#include "mobstat/errors.hpp"
#include "mobstat/forecast.hpp"
#include "mobstat/granger.hpp"
#include "mobstat/ingest.hpp"
#include "mobstat/stationarity.hpp"

namespace mobstat::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::validate() const {
  if (max_lag < 1) throw UsageError(fmt::format("--max-lag must be at least 1, got {}", max_lag));
  if (pre_period && post_period && pre_period->overlaps(*post_period)) {
    throw UsageError(fmt::format("pre-period {}:{} overlaps post-period {}:{}", format_date(pre_period->first),
                                 format_date(pre_period->last), format_date(post_period->first),
                                 format_date(post_period->last)));
  }
}

betareg::DateRange parse_date_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw UsageError(fmt::format("date range '{}' must look like FIRST:LAST", text));
  }
  betareg::DateRange r{parse_date(text.substr(0, colon)), parse_date(text.substr(colon + 1))};
  if (r.last < r.first) throw UsageError(fmt::format("date range '{}' ends before it starts", text));
  return r;
}

fs::path resolve_output_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
  return ".";
}

namespace {

void write_json(const fs::path& path, const json& j) { ingest::write_file(path, j.dump(2) + "\n"); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
}

std::vector<ingest::DailyCbgRecord> load_mobility(const fs::path& path, std::ostream& err) {
  auto parsed = ingest::parse_mobility_csv(path);
  for (const auto& r : parsed.rejected) {
    err << fmt::format("warning: {}:{}: rejected row: {}\n", path.string(), r.line, r.message);
  }
  return std::move(parsed.records);
}

struct WeeklySource {
  std::string weekly;
  std::string mobility;
  std::string fatalities;
  std::string anchor;

  void attach(CLI::App* sub) {
    sub->add_option("--weekly", weekly, "weekly CSV from `ingest`");
    sub->add_option("--mobility", mobility, "daily mobility CSV");
    sub->add_option("--fatalities", fatalities, "cumulative fatalities CSV");
    sub->add_option("--anchor", anchor, "first day of week 0 (YYYY-MM-DD)");
  }

  ingest::WeeklyPair load(std::ostream& err) const {
    if (!weekly.empty()) return ingest::parse_weekly_csv(weekly);
    if (mobility.empty() || fatalities.empty()) {
      throw UsageError("need --weekly, or both --mobility and --fatalities");
    }
    const auto records = load_mobility(mobility, err);
    const auto deaths = ingest::parse_fatalities_csv(fatalities);
    std::optional<Date> a;
    if (!anchor.empty()) a = parse_date(anchor);
    return ingest::weekly_aggregate(records, deaths, a);
  }
};

std::vector<double> parse_population(const std::string& text, const betareg::BetaRegFit& fit) {
  const auto& names = fit.coefficient_names;
  if (auto it = std::find(names.begin() + 1, names.end(), text); it != names.end()) {
    std::vector<double> v(fit.covariate_count(), 0.0);
    v[static_cast<std::size_t>(it - names.begin()) - 1] = 1.0;
    return v;
  }
  std::vector<double> v;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(',', start), text.size());
    try {
      v.push_back(csv::to_double(text.substr(start, end - start)));
    } catch (const Error&) {
      throw UsageError(fmt::format("population '{}' is neither a covariate name nor a comma-separated vector", text));
    }
    start = end + 1;
  }
  if (v.size() != fit.covariate_count()) {
    throw UsageError(fmt::format("population '{}' has {} entries; the model has {} covariates", text, v.size(),
                                 fit.covariate_count()));
  }
  return v;
}

int run_synth(const ingest::SynthConfig& config, const fs::path& out_dir, std::ostream& out) {
  const auto data = ingest::synthesize_dataset(config);
  ensure_dir(out_dir);
  ingest::write_file(out_dir / "mobility.csv", ingest::mobility_to_csv(data.mobility));
  ingest::write_file(out_dir / "fatalities.csv", ingest::fatalities_to_csv(data.fatalities));
  ingest::write_file(out_dir / "demographics.csv", ingest::demographics_to_csv(data.demographics));
  out << fmt::format("synthesized {} CBGs x {} days (seed {}, coupling lag {}, strength {})\n", config.cbg_count,
                     config.day_count, config.seed, config.coupling_lag, config.coupling_strength);
  out << fmt::format("wrote {}\n", (out_dir / "mobility.csv").string());
  out << fmt::format("wrote {}\n", (out_dir / "fatalities.csv").string());
  out << fmt::format("wrote {}\n", (out_dir / "demographics.csv").string());
  return 0;
}

int run_ingest(const WeeklySource& src, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  if (src.mobility.empty() || src.fatalities.empty()) throw UsageError("ingest needs --mobility and --fatalities");
  const auto parsed = ingest::parse_mobility_csv(src.mobility);
  for (const auto& r : parsed.rejected) {
    err << fmt::format("warning: {}:{}: rejected row: {}\n", src.mobility, r.line, r.message);
  }
  const auto deaths = ingest::parse_fatalities_csv(src.fatalities);
  std::optional<Date> a;
  if (!src.anchor.empty()) a = parse_date(src.anchor);
  const auto weekly = ingest::weekly_aggregate(parsed.records, deaths, a);

  ensure_dir(out_dir);
  ingest::write_file(out_dir / "weekly.csv", ingest::weekly_to_csv(weekly));
  json report{{"accepted_rows", parsed.records.size()}, {"rejected", json::array()}, {"weeks", weekly.size()}};
  for (const auto& r : parsed.rejected) report["rejected"].push_back({{"line", r.line}, {"message", r.message}});
  write_json(out_dir / "ingest_report.json", report);

  out << fmt::format("{:<12} {:>10} {:>10}\n", "week_start", "h_us", "deaths");
  for (std::size_t w = 0; w < weekly.size(); ++w) {
    out << fmt::format("{:<12} {:>10.4f} {:>10.0f}\n", format_date(weekly.week_start[w]), weekly.h_us[w],
                       weekly.deaths[w]);
  }
  out << fmt::format("{} weeks, {} rows accepted, {} rejected\n", weekly.size(), parsed.records.size(),
                     parsed.rejected.size());
  return 0;
}

int run_kpss(const std::string& input, const std::string& column, std::optional<int> lag, const fs::path& out_dir,
             std::ostream& out) {
  const auto table = csv::parse(ingest::read_file(input));
  const auto c = table.column(column);
  std::vector<double> values;
  values.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    try {
      values.push_back(csv::to_double(table.rows[r].at(c)));
    } catch (const std::exception& e) {
      throw DataError(fmt::format("{}:{}: column '{}': {}", input, table.lines[r], column, e.what()));
    }
  }
  const auto result = stationarity::kpss_test(values, lag);
  json j{{"schema", "kpss_result/1"},
         {"column", column},
         {"n_obs", values.size()},
         {"statistic", result.statistic},
         {"truncation_lag", result.truncation_lag},
         {"reject_at_5pct", result.reject_at_5pct},
         {"critical_values", json::object()}};
  for (const auto& [alpha, cv] : result.critical_values) j["critical_values"][fmt::format("{}", alpha)] = cv;
  ensure_dir(out_dir);
  write_json(out_dir / "kpss.json", j);

  out << fmt::format("KPSS level-stationarity test on '{}' (T = {})\n", column, values.size());
  out << fmt::format("statistic {:.4f}, truncation lag {}\n", result.statistic, result.truncation_lag);
  for (const auto& [alpha, cv] : result.critical_values) out << fmt::format("  {:>5.1f}%  {:.3f}\n", alpha * 100, cv);
  out << (result.reject_at_5pct ? "stationarity rejected at 5%\n" : "stationarity not rejected at 5%\n");
  return 0;
}

int run_granger(const RunConfig& config, const WeeklySource& src, const std::string& direction, std::ostream& out,
                std::ostream& err) {
  config.validate();
  const auto weekly = src.load(err);
  const auto scans = granger::granger_scan(weekly, config.max_lag, granger::parse_direction(direction));
  json j = json::array();
  for (const auto& s : scans) j.push_back(granger::to_json(s));
  ensure_dir(config.output_dir);
  write_json(config.output_dir / "granger.json", j);
  for (std::size_t i = 0; i < scans.size(); ++i) {
    if (i > 0) out << "\n";
    out << granger::format_table(scans[i]);
  }
  return 0;
}

int run_forecast(const WeeklySource& src, std::size_t holdout, const fs::path& out_dir, std::ostream& out,
                 std::ostream& err) {
  const auto weekly = src.load(err);
  const auto model = forecast::var_fit(weekly);
  ensure_dir(out_dir);
  write_json(out_dir / "var_model.json", forecast::to_json(model));
  out << forecast::format_table(model);
  if (holdout > 0) {
    const auto points = forecast::rolling_backtest(weekly, holdout);
    ingest::write_file(out_dir / "backtest.csv", forecast::backtest_to_csv(points));
    double abs_err = 0.0;
    out << fmt::format("\n{:<12} {:>10} {:>10}\n", "week_start", "actual", "predicted");
    for (const auto& p : points) {
      out << fmt::format("{:<12} {:>10.1f} {:>10.1f}\n", format_date(p.week_start), p.actual, p.predicted);
      abs_err += std::fabs(p.actual - p.predicted);
    }
    out << fmt::format("mean absolute error {:.2f} over {} weeks\n", abs_err / static_cast<double>(points.size()),
                       points.size());
  }
  return 0;
}

int run_betareg(const RunConfig& config, const std::string& covariates, const std::string& income_units,
                std::ostream& out, std::ostream& err) {
  config.validate();
  if (!config.pre_period && !config.post_period) throw UsageError("betareg needs --pre and/or --post");
  if (config.mobility.empty() || config.demographics.empty()) {
    throw UsageError("betareg needs --mobility and --demographics");
  }
  auto set = betareg::parse_covariate_set(covariates);
  if (income_units == "thousands") {
    set.income_units = betareg::IncomeUnits::thousands;
  } else if (income_units != "dollars") {
    throw UsageError(fmt::format("--income-units must be 'dollars' or 'thousands', got '{}'", income_units));
  }
  const auto records = load_mobility(config.mobility, err);
  const auto demo = ingest::parse_demographics_csv(config.demographics);
  ensure_dir(config.output_dir);

  std::optional<betareg::BetaRegFit> pre;
  std::optional<betareg::BetaRegFit> post;
  auto fit_one = [&](const betareg::DateRange& range, const char* label) {
    const auto design = betareg::design_from_records(records, demo, range, set);
    auto fit = betareg::betareg_fit(design);
    write_json(config.output_dir / fmt::format("betareg_{}.json", label), betareg::to_json(fit));
    out << betareg::format_table(
        fit, fmt::format("{}-period model ({} to {})", label, format_date(range.first), format_date(range.last)));
    out << "\n";
    return fit;
  };
  if (config.pre_period) pre = fit_one(*config.pre_period, "pre");
  if (config.post_period) post = fit_one(*config.post_period, "post");

  if (pre && post && set.race) {
    auto blocks = did::one_hot_blocks(*pre);
    blocks.resize(ingest::kRaceNames.size());
    const auto rows = did::hypothetical_block_report(*pre, *post, blocks);
    out << did::format_block_table(rows);
  }
  return 0;
}

int run_did(const RunConfig& config, std::string pre_model, std::string post_model, std::size_t samples,
            std::ostream& out) {
  if (config.population1.empty()) throw UsageError("did needs --p1");
  if (pre_model.empty()) pre_model = (config.output_dir / "betareg_pre.json").string();
  if (post_model.empty()) post_model = (config.output_dir / "betareg_post.json").string();
  const auto pre = betareg::load_fit(pre_model);
  const auto post = betareg::load_fit(post_model);
  const auto p1 = parse_population(config.population1, pre);
  const auto p2 = parse_population(config.population2, pre);
  const auto result = did::did_test(pre, post, p1, p2, samples, config.seed);

  auto j = did::to_json(result);
  j["population1"] = config.population1;
  j["population2"] = config.population2;
  ensure_dir(config.output_dir);
  write_json(config.output_dir / "did.json", j);

  out << fmt::format("{:<16} {:<16} {:>10} {:>10} {:>22}\n", "Population 1", "Population 2", "delta", "p-value",
                     "95% interval");
  out << fmt::format("{:<16} {:<16} {:>9.2f}% {:>10.2g} {:>10.2f}% .. {:.2f}%\n", config.population1,
                     config.population2, result.delta_estimate, result.p_value, result.delta_quantiles[0],
                     result.delta_quantiles[2]);
  out << fmt::format("{} samples, seed {}, analytic delta {:.2f}%, direction p-value {:.3g}\n", result.n_samples,
                     result.seed, result.analytic_delta, result.direction_p_value);
  return 0;
}

int run_export(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.mobility.empty() || config.demographics.empty()) {
    throw UsageError("export-dashboard needs --mobility and --demographics");
  }
  const auto records = load_mobility(config.mobility, err);
  const auto demo = ingest::parse_demographics_csv(config.demographics);
  bundle::export_dashboard_bundle(records, demo, config.output_dir);
  for (const char* name : {"cbgs.json", "flows.json", "timeseries.json"}) {
    out << fmt::format("wrote {}\n", (config.output_dir / name).string());
  }
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mobility and fatality statistics toolkit"};
  app.require_subcommand(1);

  RunConfig config;
  std::string out_dir_flag;
  WeeklySource src;

  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out-dir", out_dir_flag, fmt::format("output directory (default: ${} or .)", kOutputDirEnv));
  };

  ingest::SynthConfig synth_config;
  auto* synth = app.add_subcommand("synth", "write a synthetic mobility/fatality/demographics dataset");
  synth->add_option("--seed", synth_config.seed);
  synth->add_option("--cbgs", synth_config.cbg_count);
  synth->add_option("--days", synth_config.day_count);
  synth->add_option("--lag", synth_config.coupling_lag, "weeks between mobility and deaths");
  synth->add_option("--strength", synth_config.coupling_strength);
  synth->add_option("--death-noise", synth_config.death_noise);
  synth->add_option("--mobility-noise", synth_config.mobility_noise);
  std::string synth_start;
  synth->add_option("--start", synth_start, "first day (YYYY-MM-DD)");
  add_out(synth);

  auto* ingest_cmd = app.add_subcommand("ingest", "aggregate daily records into weekly h_us and deaths");
  src.attach(ingest_cmd);
  add_out(ingest_cmd);

  std::string kpss_input;
  std::string kpss_column = "h_us";
  std::optional<int> kpss_lag;
  auto* kpss = app.add_subcommand("kpss", "KPSS level-stationarity test on one CSV column");
  kpss->add_option("--input", kpss_input)->required();
  kpss->add_option("--column", kpss_column);
  kpss->add_option("--lag", kpss_lag, "truncation lag (default: floor(4 (T/100)^(1/4)))");
  add_out(kpss);

  std::string direction = "both";
  auto* granger_cmd = app.add_subcommand("granger", "Granger causality scan over lags 1..max-lag");
  src.attach(granger_cmd);
  granger_cmd->add_option("--max-lag", config.max_lag);
  granger_cmd->add_option("--direction", direction, "forward, reverse or both");
  add_out(granger_cmd);

  std::size_t holdout = 0;
  auto* forecast_cmd = app.add_subcommand("forecast", "fit the lag-3 VAR and optionally backtest it");
  src.attach(forecast_cmd);
  forecast_cmd->add_option("--holdout", holdout, "weeks to backtest with rolling refits");
  add_out(forecast_cmd);

  std::string mobility_path;
  std::string demographics_path;
  std::string pre_text;
  std::string post_text;
  std::string covariates = "race";
  std::string income_units = "dollars";
  auto* betareg_cmd = app.add_subcommand("betareg", "beta regression of stay-home time on demographics");
  betareg_cmd->add_option("--mobility", mobility_path);
  betareg_cmd->add_option("--demographics", demographics_path);
  betareg_cmd->add_option("--pre", pre_text, "FIRST:LAST");
  betareg_cmd->add_option("--post", post_text, "FIRST:LAST");
  betareg_cmd->add_option("--covariates", covariates, "race, age, race+income, ...");
  betareg_cmd->add_option("--income-units", income_units, "dollars or thousands");
  add_out(betareg_cmd);

  std::string pre_model;
  std::string post_model;
  std::size_t samples = did::kDefaultSamples;
  auto* did_cmd = app.add_subcommand("did", "difference-in-differences between two populations");
  did_cmd->add_option("--pre-model", pre_model, "default: <out-dir>/betareg_pre.json");
  did_cmd->add_option("--post-model", post_model, "default: <out-dir>/betareg_post.json");
  did_cmd->add_option("--p1", config.population1, "covariate name or comma-separated vector");
  did_cmd->add_option("--p2", config.population2);
  did_cmd->add_option("--samples", samples);
  did_cmd->add_option("--seed", config.seed);
  add_out(did_cmd);

  auto* export_cmd = app.add_subcommand("export-dashboard", "write the dashboard JSON bundle");
  export_cmd->add_option("--mobility", mobility_path);
  export_cmd->add_option("--demographics", demographics_path);
  add_out(export_cmd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::usage);
  }

  try {
    config.output_dir = resolve_output_dir(out_dir_flag);
    config.mobility = mobility_path;
    config.demographics = demographics_path;
    if (!pre_text.empty()) config.pre_period = parse_date_range(pre_text);
    if (!post_text.empty()) config.post_period = parse_date_range(post_text);

    if (synth->parsed()) {
      if (!synth_start.empty()) synth_config.start = parse_date(synth_start);
      return run_synth(synth_config, config.output_dir, out);
    }
    if (ingest_cmd->parsed()) return run_ingest(src, config.output_dir, out, err);
    if (kpss->parsed()) return run_kpss(kpss_input, kpss_column, kpss_lag, config.output_dir, out);
    if (granger_cmd->parsed()) return run_granger(config, src, direction, out, err);
    if (forecast_cmd->parsed()) return run_forecast(src, holdout, config.output_dir, out, err);
    if (betareg_cmd->parsed()) return run_betareg(config, covariates, income_units, out, err);
    if (did_cmd->parsed()) return run_did(config, pre_model, post_model, samples, out);
    if (export_cmd->parsed()) return run_export(config, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::data);
  }
  return static_cast<int>(ErrorKind::usage);
}

}  // namespace mobstat::cli
