#include "binpick/scoring.hpp"

#include <iomanip>
#include <sstream>

namespace binpick {

ScoreTable ScoreTable::calibration() {
  ScoreTable t;
  t.stow = 10.0;
  t.pick = 14.0;
  t.drop = -10.0;
  t.protrusion = -5.0;
  t.misreport = -5.0;
  t.completion_bonus = 6.0;
  return t;
}

std::vector<std::string> check_score_table(const ScoreTable& t) {
  std::vector<std::string> out;
  if (t.stow < 0.0) out.emplace_back("stow award must be >= 0");
  if (t.pick < 0.0) out.emplace_back("pick award must be >= 0");
  if (t.completion_bonus < 0.0) out.emplace_back("completion_bonus must be >= 0");
  if (t.drop > 0.0) out.emplace_back("drop penalty must be <= 0");
  if (t.protrusion > 0.0) out.emplace_back("protrusion penalty must be <= 0");
  if (t.misreport > 0.0) out.emplace_back("misreport penalty must be <= 0");
  return out;
}

std::optional<double> event_points(const Event& e, const ScoreTable& t) {
  const std::string& k = e.event_kind;
  if (k == "stow") return t.stow;
  if (k == "pick") return t.pick;
  if (k == "drop") return t.drop;
  if (k == "protrusion") return t.protrusion;
  if (k == "misreport") return t.misreport;
  if (k == "completion_bonus") return t.completion_bonus;
  return std::nullopt;
}

namespace {
bool is_penalty(const std::string& kind) { return kind == "drop" || kind == "protrusion" || kind == "misreport"; }
}  // namespace

ScoreResult score_run(const RunLog& log, const ScoreTable& table) {
  ScoreResult r;
  for (const auto& e : log.events()) {
    if (e.event_kind == "phase_start") {
      r.markers.push_back({e.time_s, "phase_start:" + e.payload.value("phase", std::string())});
    }
    const auto pts = event_points(e, table);
    if (!pts) continue;
    if (e.event_kind == "completion_bonus") r.markers.push_back({e.time_s, "completion_bonus"});
    r.final_score += *pts;
    r.trace.push_back({e.time_s, r.final_score});
  }
  return r;
}

double FailureHistogram::cause_share(FailureCause c) const {
  std::size_t total = 0;
  for (auto n : by_cause) total += n;
  return total == 0 ? 0.0 : static_cast<double>(by_cause[static_cast<std::size_t>(c)]) / static_cast<double>(total);
}

void FailureHistogram::merge(const FailureHistogram& o) {
  for (std::size_t i = 0; i < kOutcomeKinds; ++i) by_kind[i] += o.by_kind[i];
  for (std::size_t i = 0; i < kFailureCauses; ++i) by_cause[i] += o.by_cause[i];
}

FailureHistogram failure_taxonomy(const RunLog& log) {
  FailureHistogram h;
  for (const auto& e : log.events()) {
    if (e.event_kind != "attempt_end") continue;
    const auto kind = parse_outcome_kind(e.payload.value("kind", std::string()));
    if (!kind || *kind == OutcomeKind::Success) continue;
    ++h.by_kind[static_cast<std::size_t>(*kind)];
    if (*kind == OutcomeKind::FailedGrasp && e.payload.contains("cause") && e.payload["cause"].is_string())
      if (const auto cause = parse_failure_cause(e.payload["cause"].get<std::string>()))
        ++h.by_cause[static_cast<std::size_t>(*cause)];
  }
  return h;
}

std::optional<double> MetricsReport::grasp_success_rate() const {
  if (attempts == 0) return std::nullopt;
  return static_cast<double>(successes) / static_cast<double>(attempts);
}

std::optional<double> MetricsReport::avg_attempt_time() const {
  if (attempts == 0) return std::nullopt;
  return attempt_time_total / static_cast<double>(attempts);
}

std::optional<double> MetricsReport::error_rate() const {
  if (penalties == 0) return 0.0;
  const std::size_t handled = stowed + picked;
  if (handled == 0) return std::nullopt;
  return static_cast<double>(penalties) / static_cast<double>(handled);
}

void MetricsReport::merge(const MetricsReport& o) {
  attempts += o.attempts;
  successes += o.successes;
  attempt_time_total += o.attempt_time_total;
  penalties += o.penalties;
  stowed += o.stowed;
  picked += o.picked;
  tasks += o.tasks;
  manual_interventions += o.manual_interventions;
  runs += o.runs;
  final_score += o.final_score;
  histogram.merge(o.histogram);
}

MetricsReport compute_metrics(const RunLog& log, const ScoreTable& table) {
  MetricsReport m;
  std::optional<double> mark;  // end of the previous attempt, or task start
  for (const auto& e : log.events()) {
    const std::string& k = e.event_kind;
    if (k == "task_start") {
      ++m.tasks;
      mark = e.time_s;
    } else if (k == "attempt_end") {
      ++m.attempts;
      if (e.payload.value("kind", std::string()) == to_string(OutcomeKind::Success)) ++m.successes;
      if (mark) m.attempt_time_total += e.time_s - *mark;
      mark = e.time_s;
    } else if (k == "stow") {
      ++m.stowed;
    } else if (k == "pick") {
      ++m.picked;
    } else if (k == "manual_intervention") {
      ++m.manual_interventions;
    }
    if (is_penalty(k)) ++m.penalties;
    if (const auto pts = event_points(e, table)) m.final_score += *pts;
  }
  m.histogram = failure_taxonomy(log);
  return m;
}

MetricsReport merge_metrics(const std::vector<MetricsReport>& reports) {
  MetricsReport total;
  total.runs = 0;
  for (const auto& r : reports) total.merge(r);
  return total;
}

Json to_json(const MetricsReport& m) {
  Json j;
  j["runs"] = m.runs;
  j["tasks"] = m.tasks;
  j["attempts"] = m.attempts;
  j["successes"] = m.successes;
  if (const auto r = m.grasp_success_rate()) j["grasp_success_rate"] = *r;
  if (const auto t = m.avg_attempt_time()) j["avg_attempt_time"] = *t;
  if (const auto e = m.error_rate()) j["error_rate"] = *e;
  j["penalties"] = m.penalties;
  j["stowed"] = m.stowed;
  j["picked"] = m.picked;
  j["manual_interventions"] = m.manual_interventions;
  j["final_score"] = m.final_score;
  Json kinds = Json::object();
  for (std::size_t i = 0; i < kOutcomeKinds; ++i) {
    const auto kind = static_cast<OutcomeKind>(i);
    if (kind == OutcomeKind::Success) continue;
    kinds[std::string(to_string(kind))] = m.histogram.by_kind[i];
  }
  Json causes = Json::object();
  for (std::size_t i = 0; i < kFailureCauses; ++i)
    causes[std::string(to_string(static_cast<FailureCause>(i)))] = m.histogram.by_cause[i];
  j["failure_histogram"] = Json{{"kinds", kinds}, {"causes", causes}};
  return j;
}

Json to_json(const ScoreTable& t) {
  return Json{{"stow", t.stow},
              {"pick", t.pick},
              {"drop", t.drop},
              {"protrusion", t.protrusion},
              {"misreport", t.misreport},
              {"completion_bonus", t.completion_bonus}};
}

std::string trace_csv(const ScoreResult& r) {
  std::ostringstream os;
  os << "seconds,points\n" << std::setprecision(17);
  for (const auto& p : r.trace) os << p.time_s << ',' << p.points << '\n';
  return os.str();
}

}  // namespace binpick
