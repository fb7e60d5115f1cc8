#include "binpick/runlog.hpp"

#include "binpick/error.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace binpick {

void RunLog::add(double time_s, std::string_view state, std::string_view kind, std::string_view item,
                 std::string_view container, Json payload) {
  events_.push_back(Event{time_s, std::string(state), std::string(kind), std::string(item), std::string(container),
                          std::move(payload)});
}

void RunLog::append(const RunLog& other) {
  events_.insert(events_.end(), other.events_.begin(), other.events_.end());
}

Json to_json(const Event& e) {
  Json j;
  j["time_s"] = e.time_s;
  j["state"] = e.state;
  j["event_kind"] = e.event_kind;
  j["item"] = e.item;
  j["container"] = e.container;
  j["payload"] = e.payload;
  return j;
}

Event event_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("record is not an object");
  auto str = [&](const char* key) -> std::string {
    if (!j.contains(key)) return {};
    if (!j[key].is_string()) throw ConfigError(std::string("field '") + key + "' must be a string");
    return j[key].get<std::string>();
  };
  if (!j.contains("time_s") || !j["time_s"].is_number()) throw ConfigError("missing numeric 'time_s'");
  if (!j.contains("event_kind")) throw ConfigError("missing 'event_kind'");
  Event e;
  e.time_s = j["time_s"].get<double>();
  e.state = str("state");
  e.event_kind = str("event_kind");
  e.item = str("item");
  e.container = str("container");
  if (j.contains("payload")) {
    if (!j["payload"].is_object()) throw ConfigError("'payload' must be an object");
    e.payload = j["payload"];
  }
  return e;
}

void write_ndjson(std::ostream& os, const RunLog& log, const std::optional<Json>& header) {
  if (header) os << Json{{"header", *header}}.dump() << '\n';
  for (const auto& e : log.events()) os << to_json(e).dump() << '\n';
}

std::string to_ndjson(const RunLog& log) {
  std::ostringstream os;
  write_ndjson(os, log);
  return os.str();
}

RunLog parse_ndjson(std::istream& is) {
  RunLog log;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& ex) {
      throw LogParseError(n, ex.what());
    }
    if (j.is_object() && j.size() == 1 && j.contains("header")) continue;
    try {
      log.events().push_back(event_from_json(j));
    } catch (const ConfigError& ex) {
      throw LogParseError(n, ex.what());
    }
  }
  return log;
}

RunLog parse_ndjson(std::string_view text) {
  std::istringstream is{std::string(text)};
  return parse_ndjson(is);
}

}  // namespace binpick
