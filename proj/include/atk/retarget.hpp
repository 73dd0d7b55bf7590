#pragma once

// Human-to-robot hand retargeting.
//
// Each actuation channel owns a calibration table of (pulse, human posture)
// rows recorded while an operator mirrored the robot hand. A live posture
// is mapped to the pulse of its nearest recorded posture (unweighted
// Euclidean distance over raw radians, smallest row index on ties). Flexion
// channels match the finger's three joint angles; thumb yaw and roll use
// one-dimensional tables built the same way.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "atk/hand_model.hpp"

namespace atk {

struct HumanHandFrame {
  std::array<std::array<double, 3>, 5> flexion{};  // per finger, thumb first
  double thumb_yaw = 0.0;
  double thumb_roll = 0.0;
  std::int64_t timestamp_ns = 0;
};

/// Posture seen by one channel: three angles for flexion channels, one for
/// thumb yaw or roll.
std::vector<double> channel_posture(const HumanHandFrame& frame, Channel c);
std::size_t posture_dimension(Channel c);

struct CalibrationEntry {
  int pulse = 0;
  std::vector<double> posture;

  bool operator==(const CalibrationEntry&) const = default;
};

class CalibrationTable {
 public:
  /// Validates: non-empty, strictly increasing pulses, postures of the
  /// channel's dimension with finite values. Throws CalibrationError.
  CalibrationTable(Channel channel, std::vector<CalibrationEntry> entries);

  Channel channel() const { return channel_; }
  const std::vector<CalibrationEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t dimension() const { return posture_dimension(channel_); }

  bool operator==(const CalibrationTable&) const = default;

 private:
  Channel channel_;
  std::vector<CalibrationEntry> entries_;
};

struct NearestPosture {
  std::size_t index = 0;  // 0-based row
  int pulse = 0;
};

/// Linear scan for the row minimizing ‖θ − Θ_k‖. Throws InvalidInput on a
/// dimension mismatch.
NearestPosture nearest_posture(const CalibrationTable& table, std::span<const double> posture);

/// Seven tables in control-vector order, checked against a hand's pulse ranges.
class RetargetTables {
 public:
  /// Throws ConfigError for a missing or duplicated channel and
  /// CalibrationError for pulses outside the bound hand's channel range.
  RetargetTables(std::vector<CalibrationTable> tables, const HandModel& model);
  /// Range-checks against explicit [min, max] pulse ranges.
  RetargetTables(std::vector<CalibrationTable> tables, const std::array<std::pair<int, int>, kChannelCount>& ranges);

  const CalibrationTable& table(Channel c) const { return tables_[static_cast<int>(c)]; }
  const std::vector<CalibrationTable>& tables() const { return tables_; }

 private:
  std::vector<CalibrationTable> tables_;
};

ControlVector retarget_frame(const RetargetTables& tables, const HumanHandFrame& frame);

struct CalibrationSample {
  Channel channel = Channel::ThumbFlexion;
  int pulse = 0;
  HumanHandFrame frame;
};

/// Expands a whole-hand sample (one frame recorded at control vector u)
/// into one sample per channel.
std::vector<CalibrationSample> expand_sample(const ControlVector& u, const HumanHandFrame& frame);

/// Averages samples sharing a pulse and sorts rows by pulse. The result
/// does not depend on sample order. Throws CalibrationError when a channel
/// has no samples.
std::vector<CalibrationTable> record_calibration(std::span<const CalibrationSample> samples);

// Calibration document.
std::string serialize_calibration(const std::vector<CalibrationTable>& tables);
std::vector<CalibrationTable> deserialize_calibration(const std::string& text, const std::string& source = "<calibration>");
void save_calibration(const std::vector<CalibrationTable>& tables, const std::filesystem::path& path);
std::vector<CalibrationTable> load_calibration(const std::filesystem::path& path);

// Line records.
HumanHandFrame frame_from_json_line(const std::string& line, const std::string& where);
std::string frame_to_json_line(const HumanHandFrame& frame);
/// {"channel": name, "pulse": p, "frame": {...}} or {"pulses": [7], "frame": {...}}.
std::vector<CalibrationSample> samples_from_json_line(const std::string& line, const std::string& where);

struct StreamOutput {
  std::int64_t timestamp_ns = 0;
  ControlVector u{};
  bool unchanged = false;  // u equals the previously emitted vector
};
std::string output_to_json_line(const StreamOutput& out);

/// Single-consumer, in-order frame processor.
class StreamProcessor {
 public:
  explicit StreamProcessor(const RetargetTables& tables) : tables_(&tables) {}

  /// Maps one frame. A timestamp that does not strictly increase throws
  /// StreamError; the frame is dropped and counted.
  StreamOutput process(const HumanHandFrame& frame);

  std::size_t processed() const { return processed_; }
  std::size_t dropped() const { return dropped_; }

 private:
  const RetargetTables* tables_;
  std::optional<std::int64_t> last_timestamp_;
  std::optional<ControlVector> last_output_;
  std::size_t processed_ = 0;
  std::size_t dropped_ = 0;
};

struct StreamSummary {
  std::size_t frames_in = 0;
  std::size_t frames_out = 0;
  std::size_t dropped = 0;
  std::vector<std::string> warnings;
};

/// Line-delimited stream: one frame record per input line, one output
/// record per accepted frame. Blank lines are skipped; malformed lines and
/// timestamp regressions are dropped with a warning.
StreamSummary process_stream(const RetargetTables& tables, std::istream& in, std::ostream& out);

}  // namespace atk
