#pragma once

#include <cstdint>
#include <vector>

namespace netgnn {

// N x N demand rates (packets per time-unit), row-major, zero diagonal.
class TrafficMatrix {
 public:
  TrafficMatrix() = default;
  explicit TrafficMatrix(int n);
  TrafficMatrix(int n, std::vector<double> demand);

  int size() const { return n_; }
  double at(int s, int d) const { return demand_[index(s, d)]; }
  void set(int s, int d, double v);
  const std::vector<double>& demand() const { return demand_; }
  double max_entry() const;
  double total() const;

  bool operator==(const TrafficMatrix&) const = default;

 private:
  std::size_t index(int s, int d) const {
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(d);
  }

  int n_ = 0;
  std::vector<double> demand_;
};

// Off-diagonal entries U(0.1, 1) * ti / (n - 1), i.i.d., deterministic per seed.
TrafficMatrix generate_tm(int n, double ti, std::uint64_t seed);

// Scales both the row and the column of `node` by `factor` (traffic sourced
// at and destined to the node). The diagonal stays zero.
TrafficMatrix scale_user_demand(const TrafficMatrix& tm, int node, double factor);

}  // namespace netgnn
