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

#pragma once

#include "picket/error.hpp"

namespace picket {

// Log-likelihoods (nats) of the "Yes" and "No" first tokens reported by the
// backend. Any finite real is accepted; NaN/inf signal a backend fault and
// are rejected.
struct TokenLikelihoods {
  double ll_yes = 0.0;
  double ll_no = 0.0;
};

// temperature divides the log-likelihoods before exponentiation; alpha is
// additive smoothing pulling the probability toward 0.5.
struct ScoringConfig {
  double temperature = 1.0;
  double alpha = 0.0;
};

struct Verdict {
  double probability = 0.0;
  double threshold = 0.0;
  bool violative = false;
};

// Violation probability
//
//   (exp(ll_yes/T) + a) / (exp(ll_yes/T) + exp(ll_no/T) + 2a)
//
// evaluated in a shifted form: both exponents are offset by
// m = max(ll_yes, ll_no)/T when a = 0, and by max(ll_yes/T, ll_no/T, 0)
// when a > 0 (the smoothing terms are scaled by exp(-m), which then never
// overflows and only underflows when the leading exp term already dominates).
// Throws NonFiniteInput for NaN/inf likelihoods or an invalid config, and
// DegenerateDenominator if the denominator still vanishes.
double probability(const TokenLikelihoods& lk, const ScoringConfig& cfg = {});

// Thresholded decision; probability == threshold counts as violative.
// Both arguments must lie in [0,1].
Verdict decide(double probability, double threshold);

}  // namespace picket
