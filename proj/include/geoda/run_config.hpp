#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoda/attack.hpp"
#include "geoda/metrics.hpp"
#include "geoda/oracle.hpp"

namespace geoda {

/// Environment variable that overrides (or supplies) the remote endpoint.
inline constexpr const char* kEndpointEnv = "GEODA_REMOTE_ENDPOINT";

enum class OracleKind { linear, ball, remote };

struct OracleSpec {
  OracleKind kind = OracleKind::ball;
  // linear
  Point normal;
  double offset = 0.0;
  // ball
  Point center;
  double radius = 1.0;
  // remote
  std::string endpoint;
  ImageShape shape;
  std::uint32_t timeout_ms = 30000;
  std::size_t max_batch = 64;

  std::size_t dimension() const;
};

enum class DatasetKind { synthetic, directory, inline_points };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::synthetic;
  std::size_t count = 1;
  /// Synthetic points sit this far on the original-label side of the
  /// boundary (negative: outside a ball, i.e. the concave case).
  double distance = 1.0;
  std::uint64_t seed = 0;
  std::filesystem::path path;
  std::vector<Point> points;
};

struct RunConfig {
  OracleSpec oracle;
  AttackConfig attack;
  DatasetSpec dataset;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  std::filesystem::path out_dir = "geoda_out";
  std::string report_name = "report.json";
  std::string csv_name = "iterations.csv";
  /// The validated document, echoed into reports.
  nlohmann::json raw;
};

/// Scalar fields that command-line flags may override.
struct ConfigOverrides {
  std::optional<std::size_t> budget;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> p;
  std::optional<double> lambda;
  std::optional<double> zeta;
  std::optional<std::size_t> workers;
  std::optional<std::string> out_dir;
  std::optional<std::string> endpoint;
};

/// Validate and convert a config document. Unknown keys, missing required
/// fields and inconsistent dimensions throw ConfigError; nothing here
/// touches an oracle. `env_endpoint` replaces oracle.endpoint when set.
RunConfig parse_run_config(nlohmann::json doc,
                           const std::optional<std::string>& env_endpoint = std::nullopt);

/// Read `path`, apply overrides and the endpoint environment variable, and
/// parse. Throws IoError if unreadable, ConfigError if invalid.
RunConfig load_run_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

std::unique_ptr<Oracle> make_oracle(const OracleSpec& spec);

/// Materialize the dataset for an oracle of dimension `dim`. Directory
/// datasets read every *.f64 file (raw little-endian doubles) in name order.
std::vector<NamedImage> load_dataset(const DatasetSpec& spec, const OracleSpec& oracle);

}  // namespace geoda
