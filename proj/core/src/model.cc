#include "secmpc/model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace secmpc {
namespace {

constexpr double kUnitEps = 1e-6;
constexpr double kNormEps = 1e-9;

// Smoothed normalization u = v / sqrt(|v|^2 + eps^2) and its Jacobian.
Vector SmoothUnit(const Vector& v, Matrix* du_dv) {
  const double s = std::sqrt(v.squaredNorm() + kUnitEps * kUnitEps);
  const Vector u = v / s;
  if (du_dv != nullptr) {
    *du_dv = Matrix::Identity(v.size(), v.size()) / s - v * v.transpose() / (s * s * s);
  }
  return u;
}

double Cross2(const Vector& a, const Vector& b) { return a(0) * b(1) - a(1) * b(0); }

struct PointEval {
  Vector p;
  const PointRef* ref;
};

class PointResolver {
 public:
  PointResolver(const SystemState& state, const Scene& scene, int space_dim)
      : state_(state), scene_(scene), space_dim_(space_dim) {}

  Vector Position(const PointRef& ref) const {
    Vector p;
    if (ref.source == PointRef::Source::kFrame) {
      p = FrameOf(ref.name).position;
    } else {
      p = state_.x.segment(ref.offset, space_dim_);
    }
    if (ref.plus_offset >= 0) p += state_.x.segment(ref.plus_offset, space_dim_);
    return p;
  }

  const Frame& FrameOf(const std::string& name) const {
    auto it = scene_.find(name);
    if (it == scene_.end()) throw SpecError("feature references unknown frame '" + name + "'");
    if (it->second.position.size() != space_dim_) {
      throw SpecError("frame '" + name + "' has wrong dimension");
    }
    return it->second;
  }

  // jacobian(rows, x-cols of ref) += coeff, where coeff is rows x space_dim.
  void Accumulate(const PointRef& ref, const Matrix& coeff, int row, Matrix* jacobian) const {
    if (ref.source == PointRef::Source::kDofs) {
      jacobian->block(row, ref.offset, coeff.rows(), space_dim_) += coeff;
    }
    if (ref.plus_offset >= 0) {
      jacobian->block(row, ref.plus_offset, coeff.rows(), space_dim_) += coeff;
    }
  }

 private:
  const SystemState& state_;
  const Scene& scene_;
  int space_dim_;
};

std::vector<ConstraintType> NaturalLabels(const FeatureParams& params, int space_dim) {
  using E = ConstraintType;
  return std::visit(
      [&](const auto& p) -> std::vector<ConstraintType> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PositionParams>) {
          return std::vector<E>(space_dim, E::kEquality);
        } else if constexpr (std::is_same_v<T, DistanceParams>) {
          return {p.mode == DistanceMode::kEqual ? E::kEquality : E::kInequality};
        } else if constexpr (std::is_same_v<T, AlignmentParams>) {
          if (p.ordered) return {E::kEquality, E::kInequality};
          return {E::kEquality};
        } else if constexpr (std::is_same_v<T, ContactParams>) {
          return std::vector<E>(space_dim, E::kEquality);
        } else if constexpr (std::is_same_v<T, PlacementParams>) {
          if (p.mode == PlacementMode::kBeside) return {E::kEquality};
          return std::vector<E>(space_dim, E::kEquality);
        } else if constexpr (std::is_same_v<T, ClearanceParams>) {
          return {E::kInequality};
        } else if constexpr (std::is_same_v<T, DofVelocityParams>) {
          return std::vector<E>(p.size, E::kEquality);
        } else {
          return std::vector<E>(p.size, E::kEquality);
        }
      },
      params);
}

}  // namespace

const char* ToString(ConstraintType type) {
  return type == ConstraintType::kEquality ? "eq" : "ineq";
}

const char* ToString(DofKind kind) {
  switch (kind) {
    case DofKind::kActuated:
      return "actuated";
    case DofKind::kObject:
      return "object";
    case DofKind::kShared:
      return "shared";
  }
  return "?";
}

double ViolationNorm(const Vector& value, const std::vector<ConstraintType>& labels) {
  if (static_cast<size_t>(value.size()) != labels.size()) {
    std::ostringstream msg;
    msg << "violation norm: " << value.size() << " values but " << labels.size() << " labels";
    throw SpecError(msg.str());
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < value.size(); ++i) {
    const double v = labels[i] == ConstraintType::kEquality ? std::abs(value(i)) : std::max(0.0, value(i));
    worst = std::max(worst, v);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// DofLayout

DofLayout::DofLayout(std::vector<DofBlock> blocks) : blocks_(std::move(blocks)) {
  bool seen_other = false;
  for (auto& b : blocks_) {
    if (b.size <= 0) throw SpecError("dof block '" + b.name + "' must have positive size");
    for (const auto& other : blocks_) {
      if (&other != &b && other.name == b.name) throw SpecError("duplicate dof block '" + b.name + "'");
    }
    if (b.kind == DofKind::kActuated) {
      if (seen_other) throw SpecError("actuated dof block '" + b.name + "' must precede object/shared blocks");
      actuated_dim_ += b.size;
    } else {
      seen_other = true;
    }
    if (b.kind == DofKind::kObject && b.frame.empty()) {
      throw SpecError("object dof block '" + b.name + "' needs a frame");
    }
    if (b.initial.size() != 0 && b.initial.size() != b.size) {
      throw SpecError("dof block '" + b.name + "' initial value has wrong size");
    }
    b.offset = dim_;
    for (int i = 0; i < b.size; ++i) {
      (b.kind == DofKind::kShared ? shared_ : per_waypoint_).push_back(dim_ + i);
    }
    dim_ += b.size;
  }
  if (actuated_dim_ == 0) throw SpecError("layout needs at least one actuated dof");
}

const DofBlock* DofLayout::find(std::string_view name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

const DofBlock& DofLayout::block(std::string_view name) const {
  const DofBlock* b = find(name);
  if (b == nullptr) throw SpecError("unknown dof block '" + std::string(name) + "'");
  return *b;
}

Vector DofLayout::InitialConfig() const {
  Vector x = Vector::Zero(dim_);
  for (const auto& b : blocks_) {
    if (b.initial.size() == b.size) x.segment(b.offset, b.size) = b.initial;
  }
  return x;
}

void ReadObjectDofs(const DofLayout& layout, const Scene& scene, Vector* x) {
  for (const auto& b : layout.blocks()) {
    if (b.kind != DofKind::kObject) continue;
    auto it = scene.find(b.frame);
    if (it == scene.end()) throw SpecError("object block '" + b.name + "' frame '" + b.frame + "' missing");
    x->segment(b.offset, b.size) = it->second.position.head(b.size);
  }
}

// ---------------------------------------------------------------------------
// ConstraintFeature

ConstraintFeature::ConstraintFeature(std::string name, FeatureParams params, int space_dim,
                                     std::optional<ConstraintType> type_override)
    : name_(std::move(name)), params_(std::move(params)), space_dim_(space_dim), type_override_(type_override) {
  labels_ = NaturalLabels(params_, space_dim_);
  if (type_override_) std::fill(labels_.begin(), labels_.end(), *type_override_);
  if (std::holds_alternative<AlignmentParams>(params_) && space_dim_ != 2) {
    throw SpecError("feature '" + name_ + "': alignment is planar only");
  }
}

std::string_view ConstraintFeature::kind() const {
  static constexpr std::string_view kNames[] = {"position",           "distance",     "alignment",
                                                "opposite_contact",   "box_placement", "obstacle_clearance",
                                                "dof_velocity",       "relative_velocity"};
  return kNames[params_.index()];
}

bool ConstraintFeature::configuration_only() const {
  return !std::holds_alternative<DofVelocityParams>(params_) &&
         !std::holds_alternative<RelativeVelocityParams>(params_);
}

FeatureValue ConstraintFeature::Evaluate(const SystemState& state, const Scene& scene) const {
  const int n = state.dim();
  const int D = space_dim_;
  FeatureValue out;
  out.value = Vector::Zero(dim());
  out.jacobian = Matrix::Zero(dim(), 2 * n);
  PointResolver points(state, scene, D);
  Matrix& J = out.jacobian;
  const Matrix I = Matrix::Identity(D, D);

  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PositionParams>) {
          Vector v = points.Position(p.a);
          points.Accumulate(p.a, I, 0, &J);
          if (p.b) {
            v -= points.Position(*p.b);
            points.Accumulate(*p.b, -I, 0, &J);
          }
          if (p.offset.size() == D) v -= p.offset;
          out.value = v;
        } else if constexpr (std::is_same_v<T, DistanceParams>) {
          const Vector d = points.Position(p.a) - points.Position(p.b);
          const double len = std::sqrt(d.squaredNorm() + kNormEps * kNormEps);
          const Matrix grad = (d / len).transpose();
          const double sign = p.mode == DistanceMode::kAtLeast ? -1.0 : 1.0;
          out.value(0) = sign * (len - p.distance);
          points.Accumulate(p.a, sign * grad, 0, &J);
          points.Accumulate(p.b, -sign * grad, 0, &J);
        } else if constexpr (std::is_same_v<T, AlignmentParams>) {
          const Vector a = points.Position(p.from);
          const Vector b = points.Position(p.through);
          const Vector c = points.Position(p.toward);
          Matrix du;
          const Vector u = SmoothUnit(c - a, &du);
          const Vector w = b - a;
          out.value(0) = Cross2(u, w);
          // d cross(u, w)/dw = [-u_y, u_x]; d/du = [w_y, -w_x]
          Matrix dw(1, 2), dlat_du(1, 2);
          dw << -u(1), u(0);
          dlat_du << w(1), -w(0);
          const Matrix dc = dlat_du * du;
          points.Accumulate(p.through, dw, 0, &J);
          points.Accumulate(p.from, -dw - dc, 0, &J);
          points.Accumulate(p.toward, dc, 0, &J);
          if (p.ordered) {
            out.value(1) = -u.dot(w);
            const Matrix dwo = -u.transpose();
            const Matrix dco = -w.transpose() * du;
            points.Accumulate(p.through, dwo, 1, &J);
            points.Accumulate(p.from, -dwo - dco, 1, &J);
            points.Accumulate(p.toward, dco, 1, &J);
          }
        } else if constexpr (std::is_same_v<T, ContactParams>) {
          const Vector tip = points.Position(p.tip);
          const Vector obj = points.Position(p.object);
          const Vector place = points.Position(p.place);
          Matrix du;
          const Vector u = SmoothUnit(place - obj, &du);
          out.value = tip - obj + p.standoff * u;
          points.Accumulate(p.tip, I, 0, &J);
          points.Accumulate(p.object, -I - p.standoff * du, 0, &J);
          points.Accumulate(p.place, p.standoff * du, 0, &J);
        } else if constexpr (std::is_same_v<T, PlacementParams>) {
          const Vector d = points.Position(p.object) - points.Position(p.target);
          const double gap = p.object_half + p.target_half;
          if (p.mode == PlacementMode::kBeside) {
            const double len = std::sqrt(d.squaredNorm() + kNormEps * kNormEps);
            out.value(0) = len - gap;
            const Matrix grad = (d / len).transpose();
            points.Accumulate(p.object, grad, 0, &J);
            points.Accumulate(p.target, -grad, 0, &J);
          } else {
            Vector v = d;
            v(D - 1) -= gap;
            out.value = v;
            points.Accumulate(p.object, I, 0, &J);
            points.Accumulate(p.target, -I, 0, &J);
          }
        } else if constexpr (std::is_same_v<T, ClearanceParams>) {
          const Frame& obstacle = points.FrameOf(p.obstacle);
          if (!obstacle.active) {
            out.value(0) = -1.0;
            return;
          }
          const Vector half = obstacle.half_extents.size() == D ? obstacle.half_extents
                                                                 : Vector::Constant(D, obstacle.half_size);
          const Vector rel = points.Position(p.point) - obstacle.position;
          const Vector q = rel.cwiseAbs() - half;
          Vector grad = Vector::Zero(D);
          double sdf = 0.0;
          if ((q.array() > 0.0).any()) {
            const Vector outside = q.cwiseMax(0.0);
            sdf = outside.norm();
            for (int i = 0; i < D; ++i) {
              if (q(i) > 0.0) grad(i) = (rel(i) >= 0 ? 1.0 : -1.0) * q(i) / sdf;
            }
          } else {
            Eigen::Index i_max = 0;
            sdf = q.maxCoeff(&i_max);
            grad(i_max) = rel(i_max) >= 0 ? 1.0 : -1.0;
          }
          out.value(0) = p.margin - sdf;
          points.Accumulate(p.point, -grad.transpose(), 0, &J);
        } else if constexpr (std::is_same_v<T, DofVelocityParams>) {
          out.value = state.xdot.segment(p.offset, p.size);
          J.block(0, n + p.offset, p.size, p.size).setIdentity();
        } else {
          out.value = state.xdot.segment(p.offset_a, p.size) - state.xdot.segment(p.offset_b, p.size);
          J.block(0, n + p.offset_a, p.size, p.size) += Matrix::Identity(p.size, p.size);
          J.block(0, n + p.offset_b, p.size, p.size) -= Matrix::Identity(p.size, p.size);
        }
      },
      params_);

  if (!out.value.allFinite() || !out.jacobian.allFinite()) {
    throw EvaluationError("feature '" + name_ + "' (" + std::string(kind()) + ") produced a non-finite value");
  }
  return out;
}

// ---------------------------------------------------------------------------
// FeatureStack

FeatureStack::FeatureStack(std::vector<ConstraintFeature> features) : features_(std::move(features)) {
  for (const auto& f : features_) labels_.insert(labels_.end(), f.labels().begin(), f.labels().end());
}

FeatureValue FeatureStack::Evaluate(const SystemState& state, const Scene& scene) const {
  FeatureValue out;
  out.value = Vector::Zero(dim());
  out.jacobian = Matrix::Zero(dim(), 2 * state.dim());
  int row = 0;
  for (const auto& f : features_) {
    FeatureValue fv = f.Evaluate(state, scene);
    out.value.segment(row, f.dim()) = fv.value;
    out.jacobian.middleRows(row, f.dim()) = fv.jacobian;
    row += f.dim();
  }
  return out;
}

double FeatureStack::Violation(const SystemState& state, const Scene& scene) const {
  if (empty()) return 0.0;
  return ViolationNorm(Evaluate(state, scene).value, labels_);
}

// ---------------------------------------------------------------------------
// Jacobian checks

double CompareJacobians(const Matrix& analytic, const Matrix& numeric) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.rows(); ++i) {
    for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
      const double a = analytic(i, j);
      const double f = numeric(i, j);
      const double scale = std::max(std::abs(a), std::abs(f));
      const double err = scale < 1e-8 ? std::abs(a - f) : std::abs(a - f) / scale;
      worst = std::max(worst, err);
    }
  }
  return worst;
}

double CheckJacobian(const DifferentiableMap& map, const Vector& z, double h) {
  if (!(h > 0.0)) throw DomainError("finite-difference step must be positive");
  Vector value;
  Matrix analytic;
  map(z, &value, &analytic);
  if (!value.allFinite()) throw EvaluationError("map produced a non-finite value");
  Matrix numeric(value.size(), z.size());
  Vector zp = z;
  Vector vp, vm;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    zp(j) = z(j) + h;
    map(zp, &vp, nullptr);
    zp(j) = z(j) - h;
    map(zp, &vm, nullptr);
    zp(j) = z(j);
    numeric.col(j) = (vp - vm) / (2.0 * h);
  }
  return CompareJacobians(analytic, numeric);
}

double CheckFeatureJacobian(const ConstraintFeature& feature, const SystemState& state, const Scene& scene,
                            double h) {
  const int n = state.dim();
  DifferentiableMap map = [&](const Vector& z, Vector* value, Matrix* jacobian) {
    SystemState s(z.head(n), z.tail(n));
    FeatureValue fv = feature.Evaluate(s, scene);
    *value = fv.value;
    if (jacobian != nullptr) *jacobian = fv.jacobian;
  };
  Vector z(2 * n);
  z << state.x, state.xdot;
  return CheckJacobian(map, z, h);
}

void SequenceSpec::Validate() const {
  if (phases.empty()) throw SpecError("sequence '" + name + "' has no phases (K = 0)");
  if (!(alpha > 0.0)) throw SpecError("alpha must be positive");
  if (pose_reg_weight < 0.0) throw SpecError("pose_reg_weight must be non-negative");
  if (q_home.size() != layout.actuated_dim()) throw SpecError("q_home must cover the actuated dofs");
  for (const auto& ph : phases) {
    for (const auto& f : ph.waypoint.features()) {
      if (!f.configuration_only()) {
        throw SpecError("waypoint feature '" + f.name() + "' in phase '" + ph.name + "' depends on velocity");
      }
    }
  }
}

}  // namespace secmpc
