#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "atk/error.hpp"
#include "atk/random.hpp"
#include "atk/retarget.hpp"
#include "oracles.hpp"

using namespace atk;

namespace {

const HandModel& hand() {
  static const HandModel model = load_hand(oracle::fixture("hand_5f.json"));
  return model;
}

CalibrationTable random_table(Channel c, int rows, Rng& rng, int pulse_max = 1000) {
  std::vector<CalibrationEntry> e;
  for (int k = 0; k < rows; ++k) {
    std::vector<double> posture(posture_dimension(c));
    for (double& v : posture) v = rng.uniform(0.0, 1.6);
    e.push_back({k * pulse_max / std::max(rows - 1, 1), posture});
  }
  return CalibrationTable(c, e);
}

std::vector<CalibrationTable> random_tables(int rows, Rng& rng) {
  std::vector<CalibrationTable> t;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const auto ch = kChannels[c];
    t.push_back(random_table(ch, rows, rng, ch == Channel::ThumbYaw || ch == Channel::ThumbRoll ? 600 : 1000));
  }
  return t;
}

std::size_t brute_force_nearest(const CalibrationTable& t, const std::vector<double>& q) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < t.size(); ++k) {
    double d = 0;
    for (std::size_t i = 0; i < q.size(); ++i) d += (q[i] - t.entries()[k].posture[i]) * (q[i] - t.entries()[k].posture[i]);
    if (d < best_d) best_d = d, best = k;
  }
  return best;
}

HumanHandFrame random_frame(Rng& rng, std::int64_t t) {
  HumanHandFrame f;
  for (auto& finger : f.flexion)
    for (double& v : finger) v = rng.uniform(0, 1.6);
  f.thumb_yaw = rng.uniform(-0.6, 0.6);
  f.thumb_roll = rng.uniform(-0.6, 0.6);
  f.timestamp_ns = t;
  return f;
}

}  // namespace

TEST(Nearest, Examples) {
  const CalibrationTable t(Channel::IndexFlexion, {{0, {0, 0, 0}}, {500, {0.8, 0.8, 0.6}}, {1000, {1.6, 1.6, 1.2}}});
  EXPECT_EQ(nearest_posture(t, std::vector<double>{0.1, 0.0, 0.0}).pulse, 0);
  EXPECT_EQ(nearest_posture(t, std::vector<double>{0.7, 0.9, 0.5}).pulse, 500);
  EXPECT_EQ(nearest_posture(t, std::vector<double>{2.0, 2.0, 2.0}).index, 2u);
  EXPECT_THROW(nearest_posture(t, std::vector<double>{0.1}), InvalidInput);
}

TEST(Nearest, TieGoesToSmallestIndex) {
  const CalibrationTable t(Channel::ThumbYaw, {{0, {0.0}}, {100, {0.2}}, {200, {0.4}}});
  const auto r = nearest_posture(t, std::vector<double>{0.1});
  EXPECT_EQ(r.index, 0u);
  EXPECT_EQ(r.pulse, 0);
  const CalibrationTable dup(Channel::ThumbRoll, {{0, {0.3}}, {10, {0.3}}});
  EXPECT_EQ(nearest_posture(dup, std::vector<double>{0.3}).index, 0u);
}

TEST(Nearest, MatchesBruteForce) {
  Rng rng(51);
  for (int c = 0; c < 40; ++c) {
    const auto t = random_table(Channel::MiddleFlexion, 50, rng);
    for (int q = 0; q < 25; ++q) {
      std::vector<double> query{rng.uniform(-0.2, 1.8), rng.uniform(-0.2, 1.8), rng.uniform(-0.2, 1.8)};
      EXPECT_EQ(nearest_posture(t, query).index, brute_force_nearest(t, query));
    }
  }
}

TEST(Nearest, ReplayIdentity) {
  Rng rng(53);
  const auto t = random_table(Channel::RingFlexion, 80, rng);
  for (std::size_t k = 0; k < t.size(); ++k) {
    EXPECT_EQ(nearest_posture(t, t.entries()[k].posture).pulse, t.entries()[k].pulse);
  }
}

TEST(Table, ValidationErrors) {
  EXPECT_THROW(CalibrationTable(Channel::ThumbYaw, {}), CalibrationError);
  EXPECT_THROW(CalibrationTable(Channel::ThumbYaw, {{10, {0.1}}, {10, {0.2}}}), CalibrationError);
  EXPECT_THROW(CalibrationTable(Channel::ThumbYaw, {{20, {0.1}}, {10, {0.2}}}), CalibrationError);
  EXPECT_THROW(CalibrationTable(Channel::IndexFlexion, {{0, {0.1}}}), CalibrationError);
  EXPECT_THROW(CalibrationTable(Channel::ThumbYaw, {{0, {std::nan("")}}}), CalibrationError);
}

TEST(Tables, BindingChecksCoverageAndRanges) {
  Rng rng(55);
  auto tables = random_tables(5, rng);
  EXPECT_NO_THROW(RetargetTables(tables, hand()));
  auto missing = tables;
  missing.pop_back();
  EXPECT_THROW(RetargetTables(missing, hand()), ConfigError);
  auto dup = tables;
  dup.back() = dup.front();
  EXPECT_THROW(RetargetTables(dup, hand()), ConfigError);
  auto wide = tables;
  wide[5] = CalibrationTable(Channel::ThumbYaw, {{0, {0.0}}, {700, {0.5}}});
  EXPECT_THROW(RetargetTables(wide, hand()), CalibrationError);
  // Order of the input list does not matter.
  auto shuffled = tables;
  std::reverse(shuffled.begin(), shuffled.end());
  const RetargetTables a(tables, hand()), b(shuffled, hand());
  EXPECT_EQ(a.tables(), b.tables());
}

TEST(Retarget, FrameUsesPerChannelPostures) {
  std::vector<CalibrationTable> tables;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const auto ch = kChannels[c];
    const auto dim = posture_dimension(ch);
    tables.emplace_back(ch, std::vector<CalibrationEntry>{{0, std::vector<double>(dim, 0.0)},
                                                          {300, std::vector<double>(dim, 0.5)}});
  }
  const RetargetTables rt(tables, hand());
  HumanHandFrame f;
  f.flexion[static_cast<int>(Finger::Middle)] = {0.5, 0.45, 0.5};
  f.thumb_roll = 0.4;
  EXPECT_EQ(retarget_frame(rt, f), (ControlVector{0, 0, 300, 0, 0, 0, 300}));
}

TEST(Calibrate, PermutationInvariantBytes) {
  Rng rng(59);
  std::vector<CalibrationSample> samples;
  for (int rep = 0; rep < 4; ++rep) {
    for (int k = 0; k < 6; ++k) {
      ControlVector u;
      for (std::size_t c = 0; c < kChannelCount; ++c) u[c] = k * 100;
      for (auto& s : expand_sample(u, random_frame(rng, 0))) samples.push_back(s);
    }
  }
  const std::string ref = serialize_calibration(record_calibration(samples));
  std::mt19937 shuffle_rng(3);
  for (int p = 0; p < 10; ++p) {
    std::shuffle(samples.begin(), samples.end(), shuffle_rng);
    EXPECT_EQ(serialize_calibration(record_calibration(samples)), ref);
  }
  const auto tables = record_calibration(samples);
  for (const auto& t : tables) EXPECT_EQ(t.size(), 6u);
  // Means of repeated rows.
  std::vector<double> sum(3, 0.0);
  int n = 0;
  for (const auto& s : samples) {
    if (s.channel == Channel::PinkyFlexion && s.pulse == 200) {
      const auto p = channel_posture(s.frame, s.channel);
      for (int i = 0; i < 3; ++i) sum[i] += p[i];
      ++n;
    }
  }
  ASSERT_EQ(n, 4);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(tables[4].entries()[2].posture[i], sum[i] / 4, 1e-12);
}

TEST(Calibrate, DocumentRoundTripAndErrors) {
  Rng rng(61);
  const auto tables = random_tables(7, rng);
  const auto text = serialize_calibration(tables);
  EXPECT_EQ(deserialize_calibration(text), tables);
  EXPECT_THROW(record_calibration(std::vector<CalibrationSample>{}), CalibrationError);
  auto bad = text;
  bad.replace(bad.find("\"version\": 1"), 12, "\"version\": 9");
  EXPECT_THROW(deserialize_calibration(bad), VersionError);
  EXPECT_THROW(samples_from_json_line("{\"channel\": \"index_flexion\"}", "line 1"), CalibrationError);
  EXPECT_THROW(samples_from_json_line("{\"channel\": \"sixth\", \"pulse\": 1, \"frame\": " +
                                          frame_to_json_line(HumanHandFrame{}) + "}",
                                      "line 2"),
               CalibrationError);
  const auto s = samples_from_json_line(
      "{\"channel\": \"thumb_yaw\", \"pulse\": 40, \"frame\": " + frame_to_json_line(HumanHandFrame{}) + "}", "l");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].channel, Channel::ThumbYaw);
  EXPECT_EQ(s[0].pulse, 40);
}

TEST(Stream, FrameLineRoundTrip) {
  Rng rng(63);
  const auto f = random_frame(rng, 12345);
  const auto g = frame_from_json_line(frame_to_json_line(f), "l");
  EXPECT_EQ(g.timestamp_ns, f.timestamp_ns);
  EXPECT_EQ(g.flexion, f.flexion);
  EXPECT_EQ(g.thumb_yaw, f.thumb_yaw);
  EXPECT_THROW(frame_from_json_line("{\"t\": 1}", "l"), StreamError);
  EXPECT_THROW(frame_from_json_line("not json", "l"), StreamError);
}

TEST(Stream, SuppressionFlagAndTimestampRegression) {
  Rng rng(65);
  const RetargetTables rt(random_tables(10, rng), hand());
  StreamProcessor proc(rt);
  const auto f = random_frame(rng, 100);
  const auto a = proc.process(f);
  EXPECT_FALSE(a.unchanged);
  auto f2 = f;
  f2.timestamp_ns = 200;
  const auto b = proc.process(f2);
  EXPECT_TRUE(b.unchanged);
  EXPECT_EQ(a.u, b.u);
  auto old = f;
  old.timestamp_ns = 150;
  EXPECT_THROW(proc.process(old), StreamError);
  EXPECT_EQ(proc.processed(), 2u);
  EXPECT_EQ(proc.dropped(), 1u);
}

TEST(Stream, ConservationAndDeterminism) {
  Rng rng(67);
  const RetargetTables rt(random_tables(20, rng), hand());
  std::string input;
  for (int i = 0; i < 200; ++i) input += frame_to_json_line(random_frame(rng, 1000 + i * 10)) + "\n";
  std::istringstream in1(input), in2(input);
  std::ostringstream out1, out2;
  const auto s1 = process_stream(rt, in1, out1);
  process_stream(rt, in2, out2);
  EXPECT_EQ(out1.str(), out2.str());
  EXPECT_EQ(s1.frames_in, 200u);
  EXPECT_EQ(s1.frames_out, 200u);
  const std::string text = out1.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 200);

  // A regressing timestamp and a malformed line are dropped, the rest pass.
  std::string mixed = frame_to_json_line(random_frame(rng, 10)) + "\n" + "garbage\n\n" +
                      frame_to_json_line(random_frame(rng, 5)) + "\n" + frame_to_json_line(random_frame(rng, 20)) + "\n";
  std::istringstream in3(mixed);
  std::ostringstream out3;
  const auto s3 = process_stream(rt, in3, out3);
  EXPECT_EQ(s3.frames_in, 4u);
  EXPECT_EQ(s3.frames_out, 2u);
  EXPECT_EQ(s3.dropped, 2u);
  EXPECT_EQ(s3.warnings.size(), 2u);
}
