// Copyright 2026 The picket Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "picket/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace picket {

double probability(const TokenLikelihoods& lk, const ScoringConfig& cfg) {
  if (!std::isfinite(lk.ll_yes) || !std::isfinite(lk.ll_no)) {
    throw Error(Errc::non_finite_input,
                "token log-likelihoods must be finite");
  }
  if (!std::isfinite(cfg.temperature) || cfg.temperature <= 0.0) {
    throw Error(Errc::non_finite_input, "temperature must be finite and > 0");
  }
  if (!std::isfinite(cfg.alpha) || cfg.alpha < 0.0) {
    throw Error(Errc::non_finite_input, "alpha must be finite and >= 0");
  }

  const double a = lk.ll_yes / cfg.temperature;
  const double b = lk.ll_no / cfg.temperature;
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw Error(Errc::non_finite_input,
                "log-likelihood / temperature overflowed");
  }

  // Shift so the largest exponent is 0. With alpha > 0 the shift is clamped
  // at 0 so exp(-m) stays <= 1 and the smoothing terms cannot overflow.
  const double m =
      cfg.alpha > 0.0 ? std::max({a, b, 0.0}) : std::max(a, b);
  const double ey = std::exp(a - m);
  const double en = std::exp(b - m);
  const double smooth = cfg.alpha * std::exp(-m);

  const double num = ey + smooth;
  const double den = ey + en + 2.0 * smooth;
  if (!(den > 0.0)) {
    throw Error(Errc::degenerate_denominator,
                "probability denominator underflowed to zero");
  }
  const double p = num / den;
  return std::clamp(p, 0.0, 1.0);
}

Verdict decide(double probability, double threshold) {
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw Error(Errc::out_of_range, "probability must lie in [0,1]");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(Errc::out_of_range, "threshold must lie in [0,1]");
  }
  return Verdict{probability, threshold, probability >= threshold};
}

}  // namespace picket
