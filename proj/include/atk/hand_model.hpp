#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "atk/mesh.hpp"

namespace atk {

enum class Finger { Thumb, Index, Middle, Ring, Pinky };
inline constexpr std::array<Finger, 5> kFingers = {Finger::Thumb, Finger::Index, Finger::Middle,
                                                   Finger::Ring, Finger::Pinky};
std::string_view finger_name(Finger f);
std::optional<Finger> finger_from_name(std::string_view name);

/// Actuation channels in control-vector order: five flexion channels, then
/// thumb yaw and thumb roll.
enum class Channel {
  ThumbFlexion,
  IndexFlexion,
  MiddleFlexion,
  RingFlexion,
  PinkyFlexion,
  ThumbYaw,
  ThumbRoll,
};
inline constexpr std::size_t kChannelCount = 7;
inline constexpr std::array<Channel, kChannelCount> kChannels = {
    Channel::ThumbFlexion, Channel::IndexFlexion, Channel::MiddleFlexion, Channel::RingFlexion,
    Channel::PinkyFlexion, Channel::ThumbYaw,     Channel::ThumbRoll};
std::string_view channel_name(Channel c);
std::optional<Channel> channel_from_name(std::string_view name);
inline Channel flexion_channel(Finger f) { return static_cast<Channel>(static_cast<int>(f)); }

using ControlVector = std::array<int, kChannelCount>;
using JointConfig = std::map<std::string, double>;

struct Link {
  std::string name;
  std::shared_ptr<const TriMesh> mesh;  // in the link frame
};

struct Joint {
  std::string name;
  int parent = -1;  // link index
  int child = -1;   // link index
  Vec3 axis = Vec3::UnitZ();
  Pose origin;      // child frame relative to parent at zero angle
  double lower = 0.0;
  double upper = 0.0;
};

struct Coupling {
  int joint = -1;
  double ratio = 0.0;  // rad / pulse, strictly positive
};

struct ActuationChannel {
  Channel id = Channel::ThumbFlexion;
  int pulse_min = 0;
  int pulse_max = 0;
  std::vector<Coupling> couplings;
};

struct FingerChain {
  Finger finger = Finger::Thumb;
  std::vector<int> joints;  // root to tip
  std::vector<int> links;   // child links of `joints`
};

/// Underactuated hand: a kinematic tree rooted at the palm (link 0), five
/// finger chains and seven actuation channels whose pulses drive coupled
/// revolute joints linearly.
class HandModel {
 public:
  HandModel(std::vector<Link> links, std::vector<Joint> joints, std::vector<FingerChain> fingers,
            std::array<ActuationChannel, kChannelCount> channels, Vec3 palm_normal = Vec3::UnitZ());

  const std::vector<Link>& links() const { return links_; }
  const std::vector<Joint>& joints() const { return joints_; }
  const Link& palm() const { return links_.front(); }
  const FingerChain& finger(Finger f) const { return fingers_[static_cast<int>(f)]; }
  const ActuationChannel& channel(Channel c) const { return channels_[static_cast<int>(c)]; }
  const std::array<ActuationChannel, kChannelCount>& channels() const { return channels_; }
  /// Unit direction, in the palm frame, that the palm faces when grasping.
  const Vec3& palm_normal() const { return palm_normal_; }

  std::optional<int> link_index(std::string_view name) const;
  std::optional<int> joint_index(std::string_view name) const;
  /// Channel driving the joint, if any.
  std::optional<Channel> driver(int joint) const { return driver_[joint]; }
  /// Joints in parent-before-child order.
  const std::vector<int>& topological_joints() const { return topo_; }

  /// Throws InvalidConfig for unknown joints or angles outside limits.
  void validate(const JointConfig& config) const;
  /// Every joint at zero, clamped into its limits.
  JointConfig zero_config() const;

 private:
  std::vector<Link> links_;
  std::vector<Joint> joints_;
  std::vector<FingerChain> fingers_;
  std::array<ActuationChannel, kChannelCount> channels_;
  Vec3 palm_normal_;
  std::vector<std::optional<Channel>> driver_;
  std::vector<int> topo_;
};

using LinkPoses = std::vector<Pose>;  // indexed like HandModel::links()

/// Palm at `base`; each child = parent ∘ origin ∘ rot(axis, angle). Joints
/// absent from `config` sit at zero. Throws InvalidConfig.
LinkPoses forward_kinematics(const HandModel& model, const JointConfig& config,
                             const Pose& base = Pose::identity());

/// Angle of one coupled joint for a (possibly fractional) pulse offset
/// above the channel minimum, clamped to the joint limits.
double coupled_angle(const HandModel& model, const Coupling& c, double pulse_offset);

/// Joint angles for a control vector: ratio × (pulse − p_min), clamped to
/// joint limits. Throws InvalidPulse naming the channel.
JointConfig actuate(const HandModel& model, const ControlVector& u);

/// World-frame mean of each link's local mesh vertices.
std::vector<Vec3> link_centers(const HandModel& model, const LinkPoses& poses);
std::map<std::string, Vec3> link_centers_by_name(const HandModel& model, const LinkPoses& poses);

/// Loads a hand description document (see README for the schema). Mesh
/// references resolve relative to the document's directory.
HandModel load_hand(const std::filesystem::path& path);
HandModel parse_hand(const std::string& text, const std::filesystem::path& base_dir,
                     const std::string& source = "<hand>");

}  // namespace atk
