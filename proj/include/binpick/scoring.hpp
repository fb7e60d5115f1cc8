#pragma once

#include "binpick/runlog.hpp"
#include "binpick/types.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace binpick {

/// Points per scoring event. Awards are >= 0 and penalties <= 0.
struct ScoreTable {
  double stow = 0.0;
  double pick = 0.0;
  double drop = 0.0;
  double protrusion = 0.0;
  double misreport = 0.0;
  double completion_bonus = 0.0;

  /// Non-official schedule that reproduces a 272 point finals total for 14
  /// stows, 9 picks and one completion bonus.
  static ScoreTable calibration();
};

std::vector<std::string> check_score_table(const ScoreTable& t);

/// Points for one event, or nullopt if the event kind does not score.
std::optional<double> event_points(const Event& e, const ScoreTable& table);

struct TracePoint {
  double time_s = 0.0;
  double points = 0.0;  // cumulative
};

struct Marker {
  double time_s = 0.0;
  std::string kind;  // "phase_start:<phase>" or "completion_bonus"
};

struct ScoreResult {
  double final_score = 0.0;
  std::vector<TracePoint> trace;
  std::vector<Marker> markers;
};

ScoreResult score_run(const RunLog& log, const ScoreTable& table);

inline constexpr std::size_t kOutcomeKinds = 5;
inline constexpr std::size_t kFailureCauses = 4;

struct FailureHistogram {
  std::array<std::size_t, kOutcomeKinds> by_kind{};   // indexed by OutcomeKind
  std::array<std::size_t, kFailureCauses> by_cause{};  // indexed by FailureCause

  std::size_t failed_grasps() const { return by_kind[static_cast<std::size_t>(OutcomeKind::FailedGrasp)]; }
  /// Fraction of failed grasps with the given cause; 0 when there are none.
  double cause_share(FailureCause c) const;
  void merge(const FailureHistogram& other);
};

FailureHistogram failure_taxonomy(const RunLog& log);

/// Raw counts; rates are derived so that merging stays associative.
struct MetricsReport {
  std::size_t attempts = 0;
  std::size_t successes = 0;
  double attempt_time_total = 0.0;  // sum of attempt intervals
  std::size_t penalties = 0;
  std::size_t stowed = 0;
  std::size_t picked = 0;
  std::size_t tasks = 0;
  std::size_t manual_interventions = 0;
  std::size_t runs = 1;
  double final_score = 0.0;
  FailureHistogram histogram;

  std::optional<double> grasp_success_rate() const;
  std::optional<double> avg_attempt_time() const;
  std::optional<double> error_rate() const;

  void merge(const MetricsReport& other);
};

MetricsReport compute_metrics(const RunLog& log, const ScoreTable& table = {});
MetricsReport merge_metrics(const std::vector<MetricsReport>& reports);

Json to_json(const MetricsReport& m);
Json to_json(const ScoreTable& t);

/// "seconds,points" with a header row.
std::string trace_csv(const ScoreResult& r);

}  // namespace binpick
