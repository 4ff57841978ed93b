#include "netgnn/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "netgnn/error.hpp"
#include "netgnn/random.hpp"

namespace netgnn {

TrafficMatrix::TrafficMatrix(int n)
    : n_(n), demand_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0) {
  if (n < 1) throw ConfigError("traffic matrix needs n >= 1");
}

TrafficMatrix::TrafficMatrix(int n, std::vector<double> demand) : n_(n), demand_(std::move(demand)) {
  if (n < 1) throw DataError("traffic matrix needs n >= 1");
  if (demand_.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
    throw DataError("traffic matrix must hold N^2 entries");
  }
  for (int s = 0; s < n; ++s) {
    for (int d = 0; d < n; ++d) {
      double v = at(s, d);
      if (!std::isfinite(v) || v < 0.0) throw DataError("traffic demands must be finite and >= 0");
      if (s == d && v != 0.0) throw DataError("traffic matrix diagonal must be zero");
    }
  }
}

void TrafficMatrix::set(int s, int d, double v) {
  if (s == d && v != 0.0) throw DataError("traffic matrix diagonal must be zero");
  if (!std::isfinite(v) || v < 0.0) throw DataError("traffic demands must be finite and >= 0");
  demand_[index(s, d)] = v;
}

double TrafficMatrix::max_entry() const {
  return demand_.empty() ? 0.0 : *std::max_element(demand_.begin(), demand_.end());
}

double TrafficMatrix::total() const {
  double sum = 0.0;
  for (double v : demand_) sum += v;
  return sum;
}

TrafficMatrix generate_tm(int n, double ti, std::uint64_t seed) {
  if (n < 2) throw ConfigError("traffic matrix generation needs n >= 2");
  if (!(ti > 0.0)) throw ConfigError("traffic intensity must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  const double scale = ti / static_cast<double>(n - 1);
  TrafficMatrix tm(n);
  for (int s = 0; s < n; ++s) {
    for (int d = 0; d < n; ++d) {
      if (s != d) tm.set(s, d, u(rng) * scale);
    }
  }
  return tm;
}

TrafficMatrix scale_user_demand(const TrafficMatrix& tm, int node, double factor) {
  if (node < 0 || node >= tm.size()) throw ConfigError("node " + std::to_string(node) + " out of range");
  if (!(factor > 0.0)) throw ConfigError("demand factor must be positive");
  TrafficMatrix out = tm;
  for (int k = 0; k < tm.size(); ++k) {
    if (k == node) continue;
    out.set(node, k, tm.at(node, k) * factor);
    out.set(k, node, tm.at(k, node) * factor);
  }
  return out;
}

}  // namespace netgnn
