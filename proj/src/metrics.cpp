#include "netgnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "netgnn/error.hpp"

namespace netgnn {

namespace {

void check(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) throw DataError(std::string(what) + ": length mismatch");
  if (a.empty()) throw DataError(std::string(what) + ": empty input");
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double r_squared(std::span<const double> predictions, std::span<const double> targets) {
  check(predictions, targets, "r_squared");
  const double m = mean(targets);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    ss_res += (predictions[i] - targets[i]) * (predictions[i] - targets[i]);
    ss_tot += (targets[i] - m) * (targets[i] - m);
  }
  if (ss_tot == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return 1.0 - ss_res / ss_tot;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  check(a, b, "pearson");
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace netgnn
