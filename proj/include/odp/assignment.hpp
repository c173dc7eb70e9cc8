#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "odp/kernels.hpp"

namespace odp {

struct Assignment {
  double total_cost = 0.0;
  std::vector<std::size_t> col_of_row;  // row i is matched to column col_of_row[i]
};

// Exact minimum-cost perfect matching on a square cost matrix, by successive
// shortest augmenting paths with dual potentials (Hungarian method), O(m^3).
Assignment solve_assignment(const kernels::RowMatrix& cost);

}  // namespace odp

namespace odp {

struct ClassTransport {
  double total_cost = 0.0;
  std::vector<std::size_t> class_of_row;
  std::vector<double> row_cost;  // cost of each row under the optimal matching
};

// The same matching problem when the m columns come in only C distinct kinds:
// class_cost is [m x C] and column kind k occurs capacity[k] times, with
// sum(capacity) == m. Solved exactly by augmenting paths over the C class
// nodes, O(m^2 C), so large subsamples stay cheap.
ClassTransport solve_class_transport(const kernels::RowMatrix& class_cost, std::span<const std::size_t> capacity);

}  // namespace odp
