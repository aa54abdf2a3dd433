#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace secmpc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Malformed scenario documents, inconsistent dimensions, unknown names.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Arguments outside an operation's domain (non-positive durations, empty
// paths, queries before a path starts).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A feature or residual produced a non-finite value.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ConstraintType { kEquality, kInequality };

const char* ToString(ConstraintType type);

// Largest constraint violation: |v_i| for equalities, max(0, v_i) for
// inequalities. Zero iff every constraint holds.
double ViolationNorm(const Vector& value, const std::vector<ConstraintType>& labels);

inline bool AllFinite(const Vector& v) { return v.allFinite(); }

}  // namespace secmpc
