#pragma once

#include "json.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace binpick {

using Json = nlohmann::ordered_json;

/// One timestamped record. `state` names the controller state that emitted it.
struct Event {
  double time_s = 0.0;
  std::string state;
  std::string event_kind;
  std::string item;
  std::string container;
  Json payload = Json::object();
};

class RunLog {
 public:
  void add(double time_s, std::string_view state, std::string_view kind, std::string_view item = {},
           std::string_view container = {}, Json payload = Json::object());
  void append(const RunLog& other);

  const std::vector<Event>& events() const { return events_; }
  std::vector<Event>& events() { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

 private:
  std::vector<Event> events_;
};

Json to_json(const Event& e);
Event event_from_json(const Json& j);

/// One JSON object per line. The optional header line carries run metadata
/// such as a wall-clock timestamp and is skipped by the parser.
void write_ndjson(std::ostream& os, const RunLog& log, const std::optional<Json>& header = std::nullopt);
std::string to_ndjson(const RunLog& log);

/// Throws LogParseError naming the 1-based line of the first malformed record.
RunLog parse_ndjson(std::istream& is);
RunLog parse_ndjson(std::string_view text);

}  // namespace binpick
