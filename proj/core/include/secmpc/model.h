#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "secmpc/common.h"

namespace secmpc {

// Configuration partition. Actuated robot dofs come first; object dofs mirror
// a world frame and differ per waypoint; shared dofs are manipulation
// parameters (grasp offset, push placement) that take one value across all
// waypoints.
enum class DofKind { kActuated, kObject, kShared };

const char* ToString(DofKind kind);

struct DofBlock {
  std::string name;
  DofKind kind = DofKind::kActuated;
  int offset = 0;
  int size = 0;
  std::string frame;  // kObject only: world frame this block is measured from
  Vector initial;     // initial value (actuated and shared blocks)
};

class DofLayout {
 public:
  DofLayout() = default;
  // Assigns offsets in declaration order. Actuated blocks must precede all
  // others and at least one actuated dof must exist.
  explicit DofLayout(std::vector<DofBlock> blocks);

  int dim() const { return dim_; }
  int actuated_dim() const { return actuated_dim_; }
  const std::vector<DofBlock>& blocks() const { return blocks_; }
  const DofBlock* find(std::string_view name) const;
  const DofBlock& block(std::string_view name) const;

  // Indices of dofs that get a fresh value per waypoint (actuated + object),
  // and of shared manipulation dofs.
  const std::vector<int>& per_waypoint_indices() const { return per_waypoint_; }
  const std::vector<int>& shared_indices() const { return shared_; }

  Vector InitialConfig() const;

 private:
  std::vector<DofBlock> blocks_;
  std::vector<int> per_waypoint_;
  std::vector<int> shared_;
  int dim_ = 0;
  int actuated_dim_ = 0;
};

struct SystemState {
  Vector x;
  Vector xdot;

  SystemState() = default;
  SystemState(Vector x_in, Vector xdot_in) : x(std::move(x_in)), xdot(std::move(xdot_in)) {}
  static SystemState AtRest(const Vector& x) { return {x, Vector::Zero(x.size())}; }
  int dim() const { return static_cast<int>(x.size()); }
};

// A named pose in the scene: objects, targets, obstacles.
struct Frame {
  Vector position;
  double heading = 0.0;
  double half_size = 0.0;
  Vector half_extents;  // axis-aligned obstacles; falls back to half_size
  bool active = true;
  bool draggable = false;
};

using Scene = std::map<std::string, Frame, std::less<>>;

// A point in the workspace: either a world frame's position or a block of
// configuration dofs, optionally plus another dof block (e.g. object + grasp
// offset).
struct PointRef {
  enum class Source { kFrame, kDofs };
  Source source = Source::kFrame;
  std::string name;
  std::string plus;
  int offset = -1;       // resolved dof offset (kDofs)
  int plus_offset = -1;  // resolved dof offset of `plus`, -1 if none

  static PointRef OfFrame(std::string frame) { return {Source::kFrame, std::move(frame), {}, -1, -1}; }
  static PointRef OfDofs(std::string block) { return {Source::kDofs, std::move(block), {}, -1, -1}; }
};

enum class DistanceMode { kEqual, kAtLeast, kAtMost };
enum class PlacementMode { kBeside, kOnTop };

struct PositionParams {
  PointRef a;
  std::optional<PointRef> b;
  Vector offset;
};

struct DistanceParams {
  PointRef a;
  PointRef b;
  double distance = 0.0;
  DistanceMode mode = DistanceMode::kEqual;
};

// Planar: lateral offset of `through` from the line `from` -> `toward`, and
// optionally that `from` stays behind `through`.
struct AlignmentParams {
  PointRef from;
  PointRef through;
  PointRef toward;
  bool ordered = false;
};

// `tip` sits `standoff` behind `object`, opposite to `place`.
struct ContactParams {
  PointRef tip;
  PointRef object;
  PointRef place;
  double standoff = 0.0;
};

struct PlacementParams {
  PointRef object;
  PointRef target;
  double object_half = 0.0;
  double target_half = 0.0;
  PlacementMode mode = PlacementMode::kBeside;
};

struct ClearanceParams {
  PointRef point;
  std::string obstacle;
  double margin = 0.0;
};

struct DofVelocityParams {
  std::string block;
  int offset = -1;
  int size = 0;
};

struct RelativeVelocityParams {
  std::string a;
  std::string b;
  int offset_a = -1;
  int offset_b = -1;
  int size = 0;
};

using FeatureParams = std::variant<PositionParams, DistanceParams, AlignmentParams, ContactParams,
                                   PlacementParams, ClearanceParams, DofVelocityParams,
                                   RelativeVelocityParams>;

struct FeatureValue {
  Vector value;
  Matrix jacobian;  // d x 2n over [x; xdot]
};

// A differentiable vector-valued constraint from the closed feature catalog.
class ConstraintFeature {
 public:
  ConstraintFeature(std::string name, FeatureParams params, int space_dim,
                    std::optional<ConstraintType> type_override = std::nullopt);

  const std::string& name() const { return name_; }
  std::string_view kind() const;
  int dim() const { return static_cast<int>(labels_.size()); }
  int space_dim() const { return space_dim_; }
  const std::vector<ConstraintType>& labels() const { return labels_; }
  const FeatureParams& params() const { return params_; }
  const std::optional<ConstraintType>& type_override() const { return type_override_; }
  // True if the value ignores velocities.
  bool configuration_only() const;

  FeatureValue Evaluate(const SystemState& state, const Scene& scene) const;

 private:
  std::string name_;
  FeatureParams params_;
  int space_dim_ = 0;
  std::optional<ConstraintType> type_override_;
  std::vector<ConstraintType> labels_;
};

// Stacked features; itself behaves like a single feature.
class FeatureStack {
 public:
  FeatureStack() = default;
  explicit FeatureStack(std::vector<ConstraintFeature> features);

  const std::vector<ConstraintFeature>& features() const { return features_; }
  bool empty() const { return features_.empty(); }
  int dim() const { return static_cast<int>(labels_.size()); }
  const std::vector<ConstraintType>& labels() const { return labels_; }

  FeatureValue Evaluate(const SystemState& state, const Scene& scene) const;
  double Violation(const SystemState& state, const Scene& scene) const;

 private:
  std::vector<ConstraintFeature> features_;
  std::vector<ConstraintType> labels_;
};

// Max relative deviation between the analytic Jacobian and central finite
// differences; entries whose magnitude is below 1e-8 are compared
// absolutely.
double CheckFeatureJacobian(const ConstraintFeature& feature, const SystemState& state,
                            const Scene& scene, double h = 1e-6);

// Same check for any map z -> (value, jacobian).
using DifferentiableMap = std::function<void(const Vector& z, Vector* value, Matrix* jacobian)>;
double CheckJacobian(const DifferentiableMap& map, const Vector& z, double h = 1e-6);
double CompareJacobians(const Matrix& analytic, const Matrix& numeric);

struct PhaseSpec {
  std::string name;
  FeatureStack waypoint;  // configuration-only, must hold at the waypoint
  FeatureStack running;   // must hold throughout the phase
  // Pairwise coupling between consecutive waypoints, evaluated on
  // (x_k, x_k - x_{k-1}); velocity-type features express constancy.
  FeatureStack coupling;
};

struct SequenceSpec {
  std::string name;
  int space_dim = 2;
  DofLayout layout;
  Scene scene;
  std::vector<PhaseSpec> phases;
  double alpha = 1.0;
  double pose_reg_weight = 1e-2;
  Vector q_home;

  int num_phases() const { return static_cast<int>(phases.size()); }
  int dim() const { return layout.dim(); }
  // Throws SpecError on K = 0, non-positive alpha and similar.
  void Validate() const;
};

// Overwrites object-dof blocks of `x` with their frames' positions.
void ReadObjectDofs(const DofLayout& layout, const Scene& scene, Vector* x);

}  // namespace secmpc
