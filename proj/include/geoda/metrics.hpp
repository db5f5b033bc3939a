#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoda/attack.hpp"

namespace geoda {

inline constexpr const char* kReportSchema = "geoda_report_v1";

struct ImageResult {
  std::string id;
  AttackReport report;
  /// Set when the attack threw (e.g. NoAdversarialFound). The report then
  /// holds the unperturbed image and fooled = false.
  std::optional<ErrorCode> error;
  std::string error_message;
};

struct BatchResult {
  std::string dataset;
  nlohmann::json config = nlohmann::json::object();
  std::vector<ImageResult> images;
};

/// Median of the final ||x_adv - x||_p over images (mean of the two middle
/// values for an even count). Throws EmptyBatch.
double median_lp(const BatchResult& batch, PNorm p);

/// Fraction of images whose final point is known to change the label.
double fooling_rate(const BatchResult& batch);

/// Percentage of coordinates with |x_adv_j - x_j| > 1e-12. Throws
/// NotSparseReport unless the report comes from the sparse attack.
double sparsity(const AttackReport& report, std::size_t d);

/// Number of coordinates counted by sparsity().
std::size_t perturbed_coordinates(const Point& original, const Point& adversarial);

double median(std::vector<double> values);

/// Per-image numbers as stored in a report file.
struct ImageSummary {
  std::string id;
  double final_lp = 0.0;
  double final_l2 = 0.0;
  double final_linf = 0.0;
  std::optional<double> sparsity;
  bool fooled = false;
  bool converged = false;
  QueryCounts queries;
  std::vector<IterationRecord> iterations;
};

struct BatchSummary {
  double median_l2 = 0.0;
  double median_linf = 0.0;
  double fooling_rate = 0.0;
  std::optional<double> median_sparsity;
  std::uint64_t total_queries = 0;
  std::size_t images = 0;
};

ImageSummary summarize_image(const ImageResult& image);
BatchSummary summarize(const std::vector<ImageSummary>& images);
BatchSummary summarize(const BatchResult& batch);

/// One-line human-readable summary.
std::string format_summary(const BatchSummary& s);

nlohmann::json report_json(const BatchResult& batch);

/// Write the JSON report and the per-iteration CSV
/// (image_id,t,queries_cum,lp_norm). Throws IoError.
void emit_report(const BatchResult& batch, const std::filesystem::path& json_path,
                 const std::filesystem::path& csv_path);

struct ReportFile {
  nlohmann::json config;
  std::vector<ImageSummary> images;
};

/// Parse a report written by emit_report. Throws IoError on unreadable
/// files or a schema mismatch.
ReportFile load_report(const std::filesystem::path& json_path);

struct NamedImage {
  std::string id;
  Point x;
};

/// Attack every image with run_attack on a pool of `workers` threads (0 =
/// hardware concurrency). Image i uses the i-th split of RandomSource(seed),
/// so results do not depend on the pool size. Remote and configuration
/// errors are rethrown after the pool drains; per-image algorithmic
/// failures are recorded in ImageResult::error.
BatchResult run_batch(const Oracle& oracle, const std::vector<NamedImage>& images,
                      const AttackConfig& cfg, std::uint64_t seed, std::size_t workers = 0);

}  // namespace geoda
