#pragma once

#include "relurec/match.hpp"
#include "relurec/network.hpp"
#include "relurec/recover.hpp"
#include "relurec/regress.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace relurec {

struct ThresholdSettings {
  double eta0 = 0.0;
  double eta1_rel = 1e-4;
  double eta2 = 1e-3;
  double eta3 = 0.1;
  /// 0 resolves to the network's m.
  int m_max = 0;
  double good_set_c = 1.5;
};

struct RegressionSettings {
  std::string mode = "coordinated2";  // or "full8"
  bool certify = true;
  int steps = 200000;
  std::size_t eval_samples = 200000;
};

/// Versioned experiment configuration. Parsing is strict: unknown keys are
/// rejected so threshold typos fail fast.
struct ExperimentConfig {
  int version = 1;
  std::uint64_t seed = 0;
  int threads = 0;
  int ell = 1;
  double epsilon = 0.05;
  std::size_t samples = 0;
  std::optional<std::string> network_file;
  std::optional<GeneratorOptions> generator;
  ThresholdSettings thresholds;
  RegressionSettings regression;

  RecoveryConfig recovery_config(int network_m) const;
  RegressionOptions regression_options(const ReluNetwork& net) const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Worker threads for sampling, estimation, and regression (0 = auto).
/// Results are bit-identical for any setting; this is throughput only.
void set_worker_threads(int n);
int worker_threads();

/// Artifact names inside a run directory.
namespace artifact {
inline constexpr const char* kNetwork = "network.json";
inline constexpr const char* kDataset = "dataset.bin";
inline constexpr const char* kEstimateReport = "estimate_report.json";
inline constexpr const char* kUnits = "recovered_units.json";
inline constexpr const char* kFinalNetwork = "final_network.json";
inline constexpr const char* kMetrics = "metrics.json";
inline constexpr const char* kMatchReport = "match_report.json";
inline constexpr const char* kRunReport = "run_report.json";
std::string tensor_name(int k);
}  // namespace artifact

void save_coefficients(const std::filesystem::path& dir, const HermiteCoefficientSet& set);
HermiteCoefficientSet load_coefficients(const std::filesystem::path& dir, int k_max);

void save_predictor(const std::filesystem::path& path, const ConsolidatedPredictor& g);
ConsolidatedPredictor load_predictor(const std::filesystem::path& path);

struct PipelineResult {
  bool success = false;
  std::string failed_stage;
  std::string error;
  std::size_t recovered_units = 0;
  std::size_t final_units = 0;
  double mse_estimate = -1.0;
  double mse_stderr = 0.0;
  double total_match_cost = -1.0;
  std::string report_json;
};

/// generate/sample -> estimate (first half) -> recover -> regress (second
/// half) -> match + held-out MSE. Every artifact lands in `out`; the run
/// report records every threshold and derived seed, and the whole run is a
/// pure function of (config, seed). Stage failures are recorded in the
/// report with the stage name; partial artifacts stay on disk.
PipelineResult run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out);

}  // namespace relurec
