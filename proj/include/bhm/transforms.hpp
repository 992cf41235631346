#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "bhm/accum.hpp"
#include "bhm/spline.hpp"

namespace bhm {

enum class TransformKind {
  Identity,
  Arctan,  // y = 2 arctan(x) / pi, [0, inf) -> [0, 1)
  Exp,     // y = 1 - exp(-x),      [0, inf) -> [0, 1)
  Custom,
};

/// Monotone change of variable applied before sampling, with an optional
/// x^p weight compensating an x^-p divergence at the left domain edge.
///
/// A point x with sampled value v is recorded at y(x) with value
/// v * x^p / x'(y), so the y-histogram estimates f(x(y)) x(y)^p. The fitted
/// spline is brought back to the original variable by dividing by x^p.
struct Transform {
  TransformKind kind = TransformKind::Identity;
  double weight_power = 0.0;

  // Custom maps: y(x), x(y) and dx/dy. Unvalidated beyond monotonicity of use.
  std::function<double(double)> custom_forward;
  std::function<double(double)> custom_inverse;
  std::function<double(double)> custom_jacobian;

  static Transform parse(std::string_view kind, double weight_power = 0.0);
  static Transform custom(std::function<double(double)> forward,
                          std::function<double(double)> inverse,
                          std::function<double(double)> jacobian, double weight_power = 0.0);

  bool identity() const { return kind == TransformKind::Identity; }
  /// Domain of the sampling histogram for an original domain.
  Domain target_domain(const Domain& original) const;
};

std::string_view to_string(TransformKind k);

struct Forward {
  double y = 0.0;
  /// Multiplier for the sampled value: x^p / x'(y).
  double weight = 1.0;
};

Forward forward(const Transform& t, double x);
/// x(y).
double inverse(const Transform& t, double y);
/// 1 / x'(y).
double inverse_scale(const Transform& t, double y);
/// Factor taking the y-spline at y(x) to the original function: 1 / x^p.
double restore_factor(const Transform& t, double x);
/// f(x) = spline(y(x)) / x^p.
double restore(const Transform& t, const SplineModel& model_in_y, double x);

}  // namespace bhm
