#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace semidfl {

using Scalar = double;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Probability vector over C classes.
using Prediction = Vector;
using SoftLabel = Vector;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat view of a model's parameters; the unit exchanged during consensus.
/// `layout` binds the flat layout to an architecture.
struct ParamVector {
  std::string layout;
  Vector values;

  Eigen::Index size() const { return values.size(); }
  bool combinable_with(const ParamVector& other) const {
    return layout == other.layout && values.size() == other.values.size();
  }
};

struct Sample {
  Vector features;
  std::optional<int> label;
};

/// A training item with a soft target (one-hot for hard labels).
struct SoftSample {
  Vector features;
  SoftLabel target;
};

inline SoftLabel one_hot(int c, int classes) {
  SoftLabel y = SoftLabel::Zero(classes);
  y(c) = 1.0;
  return y;
}

/// Index of the largest entry; ties resolve to the lowest index.
template <typename Derived>
int argmax(const Eigen::MatrixBase<Derived>& v) {
  int best = 0;
  for (Eigen::Index c = 1; c < v.size(); ++c) {
    if (v(c) > v(best)) best = static_cast<int>(c);
  }
  return best;
}

}  // namespace semidfl
