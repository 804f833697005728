#pragma once

#include <span>

#include "lob/labeling.hpp"

namespace lob::naive {

/// Truncated return series x_{k,k'}(s) relative to prediction time t:
/// the full r_{k,k'}(s) while the whole future window is observable
/// (s <= t - k'), otherwise r_{k, t-s}(s), whose future average uses
/// only m(s+1..t). Throws IndexOutOfRange, ZeroDenominator.
double truncated_series(std::span<const double> m, int s, int t, int k, int k_prime);

/// Class of x_{k,k'}(t-1) under the policy's alpha: a prediction of the
/// class of r_{k,k'}(t) that sees nothing past m(t). The policy must
/// target the symmetric return (RkK).
labeling::Label naive_predict(std::span<const double> m, int t,
                              const labeling::LabelingPolicy& policy);

} // namespace lob::naive
