#include <random>
#include <set>

#include <gtest/gtest.h>

#include "catalog_scenario.h"
#include "secmpc/scenario.h"
#include "test_util.h"

namespace secmpc {
namespace {

using testing::RandomVec;

Matrix NumericFeatureJacobian(const ConstraintFeature& f, const SystemState& s, const Scene& scene) {
  const int n = s.dim();
  Vector z(2 * n);
  z << s.x, s.xdot;
  auto eval = [&](const Vector& w) {
    return f.Evaluate(SystemState(w.head(n), w.tail(n)), scene).value;
  };
  return testing::NumericJacobian(eval, z);
}

TEST(Features, CatalogCoversEveryKind) {
  const Scenario sc = ParseScenarioText(testing::kCatalogScenario);
  std::set<std::string> kinds;
  for (const auto* stack : {&sc.spec.phases[0].waypoint, &sc.spec.phases[0].coupling}) {
    for (const auto& f : stack->features()) kinds.insert(std::string(f.kind()));
  }
  EXPECT_EQ(kinds.size(), 8u);
}

TEST(Features, JacobiansMatchFiniteDifferences) {
  const Scenario sc = ParseScenarioText(testing::kCatalogScenario);
  const SequenceSpec& spec = sc.spec;
  std::mt19937_64 rng(21);
  for (const auto* stack : {&spec.phases[0].waypoint, &spec.phases[0].coupling}) {
    for (const auto& f : stack->features()) {
      double worst = 0.0;
      for (int i = 0; i < 100; ++i) {
        const SystemState s(spec.layout.InitialConfig() + RandomVec(rng, spec.dim(), -1, 1),
                            RandomVec(rng, spec.dim(), -1, 1));
        const FeatureValue v = f.Evaluate(s, spec.scene);
        worst = std::max(worst, testing::RelativeError(v.jacobian, NumericFeatureJacobian(f, s, spec.scene)));
      }
      EXPECT_LE(worst, 1e-4) << f.name();
    }
  }
}

TEST(Features, ShippedScenarioJacobiansMatchFiniteDifferences) {
  std::mt19937_64 rng(22);
  for (const auto& name : ShippedScenarioNames()) {
    const SequenceSpec spec = LoadScenario(name).spec;
    for (const auto& phase : spec.phases) {
      for (const auto* stack : {&phase.waypoint, &phase.running, &phase.coupling}) {
        for (const auto& f : stack->features()) {
          double worst = 0.0;
          for (int i = 0; i < 100; ++i) {
            const SystemState s(spec.layout.InitialConfig() + RandomVec(rng, spec.dim(), -0.5, 0.5),
                                RandomVec(rng, spec.dim(), -1, 1));
            worst = std::max(worst, testing::RelativeError(f.Evaluate(s, spec.scene).jacobian,
                                                           NumericFeatureJacobian(f, s, spec.scene)));
          }
          EXPECT_LE(worst, 1e-4) << name << "/" << phase.name << "/" << f.name();
        }
      }
    }
  }
}

const ConstraintFeature& Named(const SequenceSpec& spec, const std::string& name) {
  for (const auto* stack : {&spec.phases[0].waypoint, &spec.phases[0].coupling}) {
    for (const auto& f : stack->features()) {
      if (f.name() == name) return f;
    }
  }
  throw std::runtime_error("no feature " + name);
}

SystemState At(const SequenceSpec& spec, std::initializer_list<double> x) {
  Vector v(spec.dim());
  int i = 0;
  for (double e : x) v(i++) = e;
  return SystemState::AtRest(v);
}

TEST(Features, KnownValues) {
  const Scenario sc = ParseScenarioText(testing::kCatalogScenario);
  const SequenceSpec& spec = sc.spec;
  const Scene& scene = spec.scene;
  // hand, box, grasp
  {
    const Vector v = Named(spec, "pos").Evaluate(At(spec, {1, 2, 0.5, 0.5, 0.1, 0.2}), scene).value;
    EXPECT_NEAR(v(0), 1 - 0.6 - 0.1, 1e-12);
    EXPECT_NEAR(v(1), 2 - 0.7, 1e-12);
  }
  // |hand - target| = 5 with hand at (3.5, 4.5): 0.3 - 5.
  EXPECT_NEAR(Named(spec, "far").Evaluate(At(spec, {3.5, 4.5, 0, 0, 0, 0}), scene).value(0), 0.3 - 5.0, 1e-9);
  {
    // from (0,0) toward (2,0) through (1,0.5)
    const Vector v = Named(spec, "line").Evaluate(At(spec, {0, 0, 1, 0.5, 2, 0}), scene).value;
    EXPECT_NEAR(v(0), 0.5, 1e-6);
    EXPECT_NEAR(v(1), -1.0, 1e-6);
  }
  {
    // target at (0.5, 0.5); box at (0.5, 0); tip 0.1 below the box is in contact.
    const Vector v = Named(spec, "contact").Evaluate(At(spec, {0.5, -0.1, 0.5, 0, 0, 0}), scene).value;
    EXPECT_LT(v.norm(), 1e-6);
  }
  // Outside the post by 0.5 along x, inside by 0.15 from the top face.
  EXPECT_NEAR(Named(spec, "clear").Evaluate(At(spec, {1, 0, 0, 0, 0, 0}), scene).value(0), 0.05 - 0.5, 1e-12);
  EXPECT_NEAR(Named(spec, "clear").Evaluate(At(spec, {0, 0.1, 0, 0, 0, 0}), scene).value(0), 0.05 + 0.15, 1e-12);
  {
    const Vector v = Named(spec, "on_top").Evaluate(At(spec, {0, 0, 0.5, 0.6, 0, 0}), scene).value;
    EXPECT_LT(v.norm(), 1e-12);
  }
  {
    SystemState s = At(spec, {0, 0, 0, 0, 0, 0});
    s.xdot << 1, 2, 3, 4, 0, 0;
    EXPECT_NEAR((Named(spec, "carried").Evaluate(s, scene).value - Vector::Constant(2, 2)).norm(), 0, 1e-12);
    EXPECT_NEAR((Named(spec, "still").Evaluate(s, scene).value - s.xdot.segment(2, 2)).norm(), 0, 1e-12);
  }
}

TEST(Features, LabelsFollowTheMode) {
  const SequenceSpec spec = ParseScenarioText(testing::kCatalogScenario).spec;
  EXPECT_EQ(Named(spec, "far").labels(), std::vector<ConstraintType>{ConstraintType::kInequality});
  EXPECT_EQ(Named(spec, "exact").labels(), std::vector<ConstraintType>{ConstraintType::kEquality});
  EXPECT_EQ(Named(spec, "clear").labels(), std::vector<ConstraintType>{ConstraintType::kInequality});
  EXPECT_EQ(Named(spec, "pos").dim(), 2);
}

TEST(Features, ViolationNorm) {
  Vector v(3);
  v << -0.5, 0.2, -3.0;
  EXPECT_DOUBLE_EQ(ViolationNorm(v, {ConstraintType::kEquality, ConstraintType::kInequality,
                                     ConstraintType::kInequality}),
                   0.5);
  EXPECT_DOUBLE_EQ(ViolationNorm(v, {ConstraintType::kInequality, ConstraintType::kInequality,
                                     ConstraintType::kInequality}),
                   0.2);
}

}  // namespace
}  // namespace secmpc
