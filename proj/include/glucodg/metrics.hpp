// Copyright (c) 2026 The glucodg Authors. All rights reserved.
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

#ifndef GLUCODG_METRICS_HPP_
#define GLUCODG_METRICS_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "glucodg/core.hpp"

namespace glucodg {

struct Metrics {
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;  // percent, relative to the reference values
  std::size_t n = 0;
};

// MAE  = mean |r_i - p_i|
// RMSE = sqrt(mean (r_i - p_i)^2)
// MAPE = 100 * mean |r_i - p_i| / r_i
// MAPE divides by the reference (measured) glucose, which must be positive.
inline Metrics compute_metrics(std::span<const double> y_ref,
                               std::span<const double> y_pred) {
  require(y_ref.size() == y_pred.size(), "LengthMismatch",
          std::to_string(y_ref.size()) + " references vs " +
              std::to_string(y_pred.size()) + " predictions");
  require(!y_ref.empty(), "EmptyInput", "no values to score");
  double abs_sum = 0.0, sq_sum = 0.0, rel_sum = 0.0;
  for (std::size_t i = 0; i < y_ref.size(); ++i) {
    require(std::isfinite(y_ref[i]) && y_ref[i] > 0.0, "ZeroReference",
            "reference value " + std::to_string(y_ref[i]) +
                " at index " + std::to_string(i) + " must be > 0");
    const double d = y_ref[i] - y_pred[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
    rel_sum += std::abs(d) / y_ref[i];
  }
  const double n = static_cast<double>(y_ref.size());
  Metrics m;
  m.mae = abs_sum / n;
  m.rmse = std::sqrt(sq_sum / n);
  m.mape = 100.0 * rel_sum / n;
  m.n = y_ref.size();
  return m;
}

}  // namespace glucodg

#endif  // GLUCODG_METRICS_HPP_
