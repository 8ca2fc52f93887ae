#include "otlab/fit.hpp"

#include <cmath>
#include <limits>

namespace otlab {

LogLogFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  LogLogFit fit;
  fit.points = static_cast<int>(lx.size());
  if (fit.points < 2) {
    fit.slope = fit.intercept = fit.rms_residual = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < fit.points; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= fit.points;
  my /= fit.points;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < fit.points; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (int i = 0; i < fit.points; ++i) {
    const double r = ly[i] - fit.intercept - fit.slope * lx[i];
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / fit.points);
  return fit;
}

}  // namespace otlab
