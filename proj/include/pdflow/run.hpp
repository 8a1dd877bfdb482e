#ifndef PDFLOW_RUN_HPP
#define PDFLOW_RUN_HPP

#include "pdflow/analysis.hpp"
#include "pdflow/dynamics.hpp"
#include "pdflow/scenario.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pdflow {

inline constexpr double kAgreementOmegaTol = 1e-3;     // pu
inline constexpr double kAgreementResidualTol = 1e-4;

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<double> h;
  std::optional<double> t_end;
  double tail_fraction = 0.2;
};

struct SegmentReport {
  std::size_t index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  KktResiduals<double> residuals;
  ActiveSets active;
  SyncMetrics sync;
  FrequencyPrediction<double> prediction;
  Eigen::VectorXd final_injections;
  bool agreement = false;
};

struct RunReport {
  std::vector<SegmentReport> segments;
  std::vector<std::filesystem::path> files;
  bool completed = true;
  std::string error;

  bool all_agree() const;
};

/// Integrates the networked dynamics segment by segment, each segment starting
/// from the final state of the previous one. `trajectory` (if given) receives
/// the concatenated samples with strictly increasing times.
RunReport run(const Scenario& sc, const RunOptions& opt = {},
              Trajectory<double>* trajectory = nullptr);

/// key: value lines, one block per segment.
void write_run_report(std::ostream& os, const RunReport& report, const Scenario& sc);
void write_prediction(std::ostream& os, const FrequencyPrediction<double>& pred,
                      double base_power);

/// Appends `segment,case,omega_s,active_lower,active_upper` (header when empty).
void append_prediction_csv(const std::filesystem::path& path, std::size_t segment,
                           const FrequencyPrediction<double>& pred);

/// Order in which nodes first appear in the upper active set across segments.
std::vector<Index> upper_saturation_order(const RunReport& report);

}  // namespace pdflow

#endif  // PDFLOW_RUN_HPP
