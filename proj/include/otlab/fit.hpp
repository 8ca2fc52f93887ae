#pragma once

#include <vector>

namespace otlab {

/// Least-squares line through (log x, log y).
struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Root-mean-square residual in log space.
  double rms_residual = 0.0;
  int points = 0;
};

/// Pairs with a non-positive or non-finite coordinate are dropped. Fewer than
/// two usable pairs give a fit with points < 2 and a NaN slope.
LogLogFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace otlab
