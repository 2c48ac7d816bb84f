#pragma once

#include <filesystem>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "mobstat/ingest.hpp"

namespace mobstat::bundle {

inline constexpr int kSchemaVersion = 1;

struct Bundle {
  nlohmann::json cbgs;
  nlohmann::json flows;
  nlohmann::json timeseries;
};

/// Builds the three dashboard documents. A CBG appears if it has demographics
/// or any mobility record; flows to CBGs outside that set are kept as-is.
Bundle build_bundle(std::span<const ingest::DailyCbgRecord> mobility,
                    std::span<const ingest::CbgDemographics> demographics);

/// Writes cbgs.json, flows.json and timeseries.json into out_dir.
void write_bundle(const Bundle& bundle, const std::filesystem::path& out_dir);

void export_dashboard_bundle(std::span<const ingest::DailyCbgRecord> mobility,
                             std::span<const ingest::CbgDemographics> demographics,
                             const std::filesystem::path& out_dir);

}  // namespace mobstat::bundle
