#include "bhm/transforms.hpp"

#include <cmath>
#include <numbers>

#include "format.hpp"

namespace bhm {

namespace {

constexpr double kPi = std::numbers::pi;

void require_semi_infinite(double x) {
  if (!(x >= 0.0)) throw Error("semi-infinite transforms need x >= 0, got " + format_real(x));
}

void require_unit(double y) {
  if (!(y >= 0.0)) throw Error("y = " + format_real(y) + " below the transformed domain");
  if (!(y < 1.0)) throw Error("x(y) diverges at y = " + format_real(y));
}

}  // namespace

std::string_view to_string(TransformKind k) {
  switch (k) {
    case TransformKind::Identity: return "none";
    case TransformKind::Arctan: return "arctan";
    case TransformKind::Exp: return "exp";
    case TransformKind::Custom: return "custom";
  }
  return "?";
}

Transform Transform::parse(std::string_view kind, double weight_power) {
  if (!(weight_power >= 0.0)) throw Error("weight power must be non-negative");
  Transform t;
  t.weight_power = weight_power;
  if (kind == "none" || kind == "identity") t.kind = TransformKind::Identity;
  else if (kind == "arctan") t.kind = TransformKind::Arctan;
  else if (kind == "exp") t.kind = TransformKind::Exp;
  else throw Error("unknown transform '" + std::string(kind) + "'");
  return t;
}

Transform Transform::custom(std::function<double(double)> fwd, std::function<double(double)> inv,
                            std::function<double(double)> jacobian, double weight_power) {
  if (!(weight_power >= 0.0)) throw Error("weight power must be non-negative");
  Transform t;
  t.kind = TransformKind::Custom;
  t.weight_power = weight_power;
  t.custom_forward = std::move(fwd);
  t.custom_inverse = std::move(inv);
  t.custom_jacobian = std::move(jacobian);
  return t;
}

Domain Transform::target_domain(const Domain& original) const {
  switch (kind) {
    case TransformKind::Identity: return original;
    case TransformKind::Arctan:
    case TransformKind::Exp: return Domain(0.0, 1.0);
    case TransformKind::Custom:
      return Domain(custom_forward(original.lo), custom_forward(original.hi));
  }
  return original;
}

double inverse(const Transform& t, double y) {
  switch (t.kind) {
    case TransformKind::Identity: return y;
    case TransformKind::Arctan: require_unit(y); return std::tan(0.5 * kPi * y);
    case TransformKind::Exp: require_unit(y); return -std::log1p(-y);
    case TransformKind::Custom: return t.custom_inverse(y);
  }
  return y;
}

double inverse_scale(const Transform& t, double y) {
  switch (t.kind) {
    case TransformKind::Identity: return 1.0;
    case TransformKind::Arctan: {
      require_unit(y);
      const double c = std::cos(0.5 * kPi * y);
      return c * c / (0.5 * kPi);  // x'(y) = (pi/2) sec^2(pi y / 2)
    }
    case TransformKind::Exp: require_unit(y); return 1.0 - y;  // x'(y) = 1 / (1 - y)
    case TransformKind::Custom: return 1.0 / t.custom_jacobian(y);
  }
  return 1.0;
}

Forward forward(const Transform& t, double x) {
  Forward f;
  switch (t.kind) {
    case TransformKind::Identity: f.y = x; break;
    case TransformKind::Arctan: require_semi_infinite(x); f.y = 2.0 * std::atan(x) / kPi; break;
    case TransformKind::Exp: require_semi_infinite(x); f.y = -std::expm1(-x); break;
    case TransformKind::Custom: f.y = t.custom_forward(x); break;
  }
  const double w = t.weight_power == 0.0 ? 1.0 : std::pow(x, t.weight_power);
  // 1/x'(y) written in x to stay accurate for large x.
  double scale = 1.0;
  switch (t.kind) {
    case TransformKind::Identity: break;
    case TransformKind::Arctan: scale = 2.0 / (kPi * (1.0 + x * x)); break;
    case TransformKind::Exp: scale = std::exp(-x); break;
    case TransformKind::Custom: scale = inverse_scale(t, f.y); break;
  }
  f.weight = w * scale;
  return f;
}

double restore_factor(const Transform& t, double x) {
  if (t.weight_power == 0.0) return 1.0;
  if (!(x > 0.0)) throw Error("cannot restore at the divergent point x = " + format_real(x));
  return std::pow(x, -t.weight_power);
}

double restore(const Transform& t, const SplineModel& model_in_y, double x) {
  const double factor = restore_factor(t, x);
  const double y = t.identity() ? x : forward(t, x).y;
  return model_in_y(y) * factor;
}

}  // namespace bhm
