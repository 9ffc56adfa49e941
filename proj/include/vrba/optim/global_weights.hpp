#pragma once

#include <array>
#include <optional>

#include "vrba/errors.hpp"

namespace vrba::optim {

enum class Term { E = 0, B = 1, D = 2 };

/// Gradient-norm balancing of the global loss weights m_E (fixed), m_B, m_D.
///
/// Norms are smoothed first, nbar <- gamma_g nbar + (1 - gamma_g) |grad|, then
/// m <- alpha_g m + (1 - alpha_g) m_E nbar_E / nbar. With `data_only` set only m_D moves.
struct GlobalWeights {
  std::array<double, 3> m{1.0, 1.0, 1.0};
  std::array<double, 3> norm_ema{0.0, 0.0, 0.0};
  double alpha_g = 0.99975;
  double gamma_g = 0.99;
  bool data_only = false;

  double weight(Term t) const { return m[static_cast<std::size_t>(t)]; }

  /// `norms[t]` empty for inactive terms.
  void update(const std::array<std::optional<double>, 3>& norms) {
    for (std::size_t a = 0; a < 3; ++a) {
      if (norms[a]) norm_ema[a] = gamma_g * norm_ema[a] + (1.0 - gamma_g) * *norms[a];
    }
    const double ne = norm_ema[0];
    for (std::size_t a = 1; a < 3; ++a) {
      if (!norms[a] || (data_only && a == 1)) continue;
      if (!(norm_ema[a] > 0.0) || !(ne > 0.0)) continue;
      m[a] = alpha_g * m[a] + (1.0 - alpha_g) * m[0] * ne / norm_ema[a];
    }
  }
};

}  // namespace vrba::optim
