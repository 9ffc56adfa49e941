#pragma once

#include "vrba/ad/jet.hpp"

namespace vrba::nn {

/// u(t, x) = (1 - x^2) * t * net(t, x) - sin(pi x): zero on x = +-1 and equal to
/// -sin(pi x) at t = 0 for any network output.
inline ad::Field burgers_hard_constraint(ad::Field net) {
  return [net = std::move(net)](std::span<const ad::Jet> in) {
    const ad::Jet& t = in[0];
    const ad::Jet& x = in[1];
    ad::Jet bump = ad::affine(ad::square(x), -1.0, 1.0);
    return bump * t * net(in) - ad::sinpi(x);
  };
}

}  // namespace vrba::nn
