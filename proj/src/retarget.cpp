#include "atk/retarget.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include "atk/error.hpp"
#include "atk/json_io.hpp"
#include "atk/mesh_io.hpp"

namespace atk {

std::size_t posture_dimension(Channel c) {
  return c == Channel::ThumbYaw || c == Channel::ThumbRoll ? 1 : 3;
}

std::vector<double> channel_posture(const HumanHandFrame& frame, Channel c) {
  switch (c) {
    case Channel::ThumbYaw: return {frame.thumb_yaw};
    case Channel::ThumbRoll: return {frame.thumb_roll};
    default: {
      const auto& f = frame.flexion[static_cast<int>(c)];
      return {f.begin(), f.end()};
    }
  }
}

CalibrationTable::CalibrationTable(Channel channel, std::vector<CalibrationEntry> entries)
    : channel_(channel), entries_(std::move(entries)) {
  const std::string name(channel_name(channel));
  if (entries_.empty()) throw CalibrationError("calibration table for " + name + " is empty");
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const auto& e = entries_[k];
    if (e.posture.size() != dimension())
      throw CalibrationError("calibration row " + std::to_string(k) + " of " + name + " has dimension " +
                             std::to_string(e.posture.size()) + ", expected " + std::to_string(dimension()));
    for (double v : e.posture)
      if (!std::isfinite(v)) throw CalibrationError("calibration row " + std::to_string(k) + " of " + name + " is not finite");
    if (k > 0 && e.pulse <= entries_[k - 1].pulse)
      throw CalibrationError("calibration pulses for " + name + " must be strictly increasing (row " +
                             std::to_string(k) + ")");
  }
}

NearestPosture nearest_posture(const CalibrationTable& table, std::span<const double> posture) {
  if (posture.size() != table.dimension()) {
    throw InvalidInput("posture dimension " + std::to_string(posture.size()) + " does not match table dimension " +
                       std::to_string(table.dimension()));
  }
  const auto& rows = table.entries();
  NearestPosture best{0, rows[0].pulse};
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < posture.size(); ++i) {
      const double d = posture[i] - rows[k].posture[i];
      d2 += d * d;
    }
    // Strict comparison keeps the smallest index on ties.
    if (d2 < best_d2) {
      best_d2 = d2;
      best = {k, rows[k].pulse};
    }
  }
  return best;
}

namespace {

std::vector<CalibrationTable> order_tables(std::vector<CalibrationTable> tables) {
  std::vector<std::optional<CalibrationTable>> slots(kChannelCount);
  for (auto& t : tables) {
    auto& slot = slots[static_cast<int>(t.channel())];
    if (slot) throw ConfigError("duplicate calibration table for " + std::string(channel_name(t.channel())));
    slot = std::move(t);
  }
  std::vector<CalibrationTable> out;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    if (!slots[c]) throw ConfigError("missing calibration table for " + std::string(channel_name(kChannels[c])));
    out.push_back(std::move(*slots[c]));
  }
  return out;
}

}  // namespace

RetargetTables::RetargetTables(std::vector<CalibrationTable> tables,
                               const std::array<std::pair<int, int>, kChannelCount>& ranges)
    : tables_(order_tables(std::move(tables))) {
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const auto [lo, hi] = ranges[c];
    for (const auto& e : tables_[c].entries()) {
      if (e.pulse < lo || e.pulse > hi) {
        throw CalibrationError("calibration pulse " + std::to_string(e.pulse) + " for " +
                               std::string(channel_name(kChannels[c])) + " outside channel range [" +
                               std::to_string(lo) + ", " + std::to_string(hi) + "]");
      }
    }
  }
}

namespace {
std::array<std::pair<int, int>, kChannelCount> model_ranges(const HandModel& model) {
  std::array<std::pair<int, int>, kChannelCount> r;
  for (std::size_t c = 0; c < kChannelCount; ++c) r[c] = {model.channels()[c].pulse_min, model.channels()[c].pulse_max};
  return r;
}
}  // namespace

RetargetTables::RetargetTables(std::vector<CalibrationTable> tables, const HandModel& model)
    : RetargetTables(std::move(tables), model_ranges(model)) {}

ControlVector retarget_frame(const RetargetTables& tables, const HumanHandFrame& frame) {
  ControlVector u{};
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const auto posture = channel_posture(frame, kChannels[c]);
    u[c] = nearest_posture(tables.table(kChannels[c]), posture).pulse;
  }
  return u;
}

std::vector<CalibrationSample> expand_sample(const ControlVector& u, const HumanHandFrame& frame) {
  std::vector<CalibrationSample> out;
  for (std::size_t c = 0; c < kChannelCount; ++c) out.push_back({kChannels[c], u[c], frame});
  return out;
}

std::vector<CalibrationTable> record_calibration(std::span<const CalibrationSample> samples) {
  std::array<std::map<int, std::vector<std::vector<double>>>, kChannelCount> grouped;
  for (const auto& s : samples) {
    grouped[static_cast<int>(s.channel)][s.pulse].push_back(channel_posture(s.frame, s.channel));
  }
  std::vector<CalibrationTable> tables;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    if (grouped[c].empty()) throw CalibrationError("no calibration samples for " + std::string(channel_name(kChannels[c])));
    std::vector<CalibrationEntry> entries;
    for (auto& [pulse, postures] : grouped[c]) {
      // Canonical summation order makes the mean independent of input order.
      std::sort(postures.begin(), postures.end());
      std::vector<double> mean(postures.front().size(), 0.0);
      for (const auto& p : postures)
        for (std::size_t i = 0; i < p.size(); ++i) mean[i] += p[i];
      for (double& m : mean) m /= static_cast<double>(postures.size());
      entries.push_back({pulse, std::move(mean)});
    }
    tables.emplace_back(kChannels[c], std::move(entries));
  }
  return tables;
}

// ---------------------------------------------------------------- documents

std::string serialize_calibration(const std::vector<CalibrationTable>& tables) {
  OrderedJson doc;
  doc["format"] = "atk-calibration";
  doc["version"] = 1;
  OrderedJson list = OrderedJson::array();
  for (const auto& t : tables) {
    OrderedJson rows = OrderedJson::array();
    for (const auto& e : t.entries()) rows.push_back({{"pulse", e.pulse}, {"posture", e.posture}});
    list.push_back({{"channel", channel_name(t.channel())}, {"entries", rows}});
  }
  doc["tables"] = list;
  return doc.dump(2) + "\n";
}

std::vector<CalibrationTable> deserialize_calibration(const std::string& text, const std::string& source) {
  const Json doc = parse_json(text, source);
  check_header(doc, "atk-calibration", 1, source);
  std::vector<CalibrationTable> tables;
  try {
    for (const auto& t : doc.at("tables")) {
      const auto name = t.at("channel").get<std::string>();
      const auto channel = channel_from_name(name);
      if (!channel) throw CalibrationError(source + ": unknown channel '" + name + "'");
      std::vector<CalibrationEntry> entries;
      for (const auto& e : t.at("entries"))
        entries.push_back({e.at("pulse").get<int>(), e.at("posture").get<std::vector<double>>()});
      tables.emplace_back(*channel, std::move(entries));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(source, FormatError::Unit::Byte, 0, e.what());
  }
  return tables;
}

void save_calibration(const std::vector<CalibrationTable>& tables, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_calibration(tables));
}

std::vector<CalibrationTable> load_calibration(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return deserialize_calibration(std::string(bytes.begin(), bytes.end()), path.string());
}

// ---------------------------------------------------------------- line records

namespace {

HumanHandFrame frame_from_json(const Json& j, const std::string& where) {
  HumanHandFrame f;
  try {
    f.timestamp_ns = j.at("t").get<std::int64_t>();
    for (Finger finger : kFingers) {
      const auto v = j.at(std::string(finger_name(finger))).get<std::vector<double>>();
      if (v.size() != 3) throw StreamError(where + ": finger '" + std::string(finger_name(finger)) + "' needs 3 angles");
      for (int i = 0; i < 3; ++i) f.flexion[static_cast<int>(finger)][i] = v[i];
    }
    f.thumb_yaw = j.at("thumb_yaw").get<double>();
    f.thumb_roll = j.at("thumb_roll").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw StreamError(where + ": " + e.what());
  }
  for (const auto& finger : f.flexion)
    for (double v : finger)
      if (!std::isfinite(v)) throw StreamError(where + ": non-finite joint angle");
  if (!std::isfinite(f.thumb_yaw) || !std::isfinite(f.thumb_roll)) throw StreamError(where + ": non-finite thumb angle");
  return f;
}

Json parse_line(const std::string& line, const std::string& where) {
  try {
    return Json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw StreamError(where + ": malformed record at byte " + std::to_string(e.byte));
  }
}

}  // namespace

HumanHandFrame frame_from_json_line(const std::string& line, const std::string& where) {
  return frame_from_json(parse_line(line, where), where);
}

std::string frame_to_json_line(const HumanHandFrame& frame) {
  OrderedJson j;
  j["t"] = frame.timestamp_ns;
  for (Finger f : kFingers) j[std::string(finger_name(f))] = frame.flexion[static_cast<int>(f)];
  j["thumb_yaw"] = frame.thumb_yaw;
  j["thumb_roll"] = frame.thumb_roll;
  return j.dump();
}

std::vector<CalibrationSample> samples_from_json_line(const std::string& line, const std::string& where) {
  const Json j = parse_line(line, where);
  if (!j.is_object() || !j.contains("frame")) throw CalibrationError(where + ": calibration record needs a 'frame'");
  const HumanHandFrame frame = frame_from_json(j.at("frame"), where);
  try {
    if (j.contains("pulses")) {
      const auto p = j.at("pulses").get<std::vector<int>>();
      if (p.size() != kChannelCount) throw CalibrationError(where + ": 'pulses' needs 7 entries");
      ControlVector u;
      std::copy(p.begin(), p.end(), u.begin());
      return expand_sample(u, frame);
    }
    const auto name = j.at("channel").get<std::string>();
    const auto channel = channel_from_name(name);
    if (!channel) throw CalibrationError(where + ": unknown channel '" + name + "'");
    return {{*channel, j.at("pulse").get<int>(), frame}};
  } catch (const nlohmann::json::exception& e) {
    throw CalibrationError(where + ": " + e.what());
  }
}

std::string output_to_json_line(const StreamOutput& out) {
  OrderedJson j;
  j["t"] = out.timestamp_ns;
  j["u"] = out.u;
  j["unchanged"] = out.unchanged;
  return j.dump();
}

StreamOutput StreamProcessor::process(const HumanHandFrame& frame) {
  if (last_timestamp_ && frame.timestamp_ns <= *last_timestamp_) {
    ++dropped_;
    throw StreamError("timestamp " + std::to_string(frame.timestamp_ns) + " does not advance past " +
                      std::to_string(*last_timestamp_));
  }
  StreamOutput out;
  out.timestamp_ns = frame.timestamp_ns;
  out.u = retarget_frame(*tables_, frame);
  out.unchanged = last_output_ && *last_output_ == out.u;
  last_timestamp_ = frame.timestamp_ns;
  last_output_ = out.u;
  ++processed_;
  return out;
}

StreamSummary process_stream(const RetargetTables& tables, std::istream& in, std::ostream& out) {
  StreamProcessor proc(tables);
  StreamSummary summary;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++summary.frames_in;
    try {
      const auto result = proc.process(frame_from_json_line(line, "frame record"));
      out << output_to_json_line(result) << '\n';
      ++summary.frames_out;
    } catch (const StreamError& e) {
      ++summary.dropped;
      summary.warnings.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  out.flush();
  return summary;
}

}  // namespace atk
