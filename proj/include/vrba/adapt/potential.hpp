#pragma once

#include <cmath>
#include <string>

#include "vrba/errors.hpp"

namespace vrba::adapt {

/// Convex potential Phi with derivative, inverse and convex conjugate.
class Potential {
 public:
  enum class Kind { Exponential, Quadratic };

  constexpr explicit Potential(Kind kind = Kind::Exponential) : kind_(kind) {}
  static constexpr Potential exponential() { return Potential(Kind::Exponential); }
  static constexpr Potential quadratic() { return Potential(Kind::Quadratic); }

  constexpr Kind kind() const { return kind_; }

  double phi(double r) const { return kind_ == Kind::Exponential ? std::exp(r) : r * r + 1.0; }
  double dphi(double r) const { return kind_ == Kind::Exponential ? std::exp(r) : 2.0 * r; }

  /// Inverse of Phi on its range: log y, or sqrt(y - 1) on the branch r >= 0.
  double phi_inv(double y) const {
    if (kind_ == Kind::Exponential) {
      if (!(y > 0.0)) throw DomainError("exponential potential inverse needs y > 0");
      return std::log(y);
    }
    if (!(y >= 1.0)) throw DomainError("quadratic potential inverse needs y >= 1");
    return std::sqrt(y - 1.0);
  }

  /// Convex conjugate Phi*(s) = sup_r (s r - Phi(r)).
  double conjugate(double s) const {
    if (kind_ == Kind::Exponential) {
      if (s < 0.0) throw DomainError("conjugate of exp is +inf for s < 0");
      return s == 0.0 ? 0.0 : s * std::log(s) - s;
    }
    return s * s / 4.0 - 1.0;
  }

  std::string name() const { return kind_ == Kind::Exponential ? "exponential" : "quadratic"; }

 private:
  Kind kind_;
};

inline Potential potential_from_name(const std::string& name) {
  if (name == "exponential") return Potential::exponential();
  if (name == "quadratic") return Potential::quadratic();
  throw ConfigError("unknown potential '" + name + "'");
}

}  // namespace vrba::adapt
