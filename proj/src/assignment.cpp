#include "odp/assignment.hpp"

#include <limits>

#include "odp/errors.hpp"

namespace odp {

Assignment solve_assignment(const kernels::RowMatrix& cost) {
  const std::size_t m = static_cast<std::size_t>(cost.rows());
  if (static_cast<std::size_t>(cost.cols()) != m) {
    throw ArityError("assignment needs a square cost matrix");
  }
  if (m == 0) return {};

  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  // Columns are 1-based internally; column 0 is the virtual root of each search.
  std::vector<double> row_pot(m + 1, 0.0), col_pot(m + 1, 0.0);
  std::vector<std::size_t> row_of_col(m + 1, kNone);
  std::vector<std::size_t> prev_col(m + 1, 0);
  std::vector<double> dist(m + 1);
  std::vector<char> done(m + 1);

  for (std::size_t r = 0; r < m; ++r) {
    row_of_col[0] = r;
    std::size_t col = 0;
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(done.begin(), done.end(), 0);
    do {
      done[col] = 1;
      const std::size_t row = row_of_col[col];
      const double base = row_pot[row + 1];
      const double* crow = cost.row(static_cast<Eigen::Index>(row)).data();
      double best = kInf;
      std::size_t best_col = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (done[j]) continue;
        const double reduced = crow[j - 1] - base - col_pot[j];
        if (reduced < dist[j]) {
          dist[j] = reduced;
          prev_col[j] = col;
        }
        if (dist[j] < best) {
          best = dist[j];
          best_col = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (done[j]) {
          row_pot[row_of_col[j] + 1] += best;
          col_pot[j] -= best;
        } else {
          dist[j] -= best;
        }
      }
      col = best_col;
    } while (row_of_col[col] != kNone);

    // Flip the augmenting path.
    while (col != 0) {
      const std::size_t back = prev_col[col];
      row_of_col[col] = row_of_col[back];
      col = back;
    }
  }

  Assignment out;
  out.col_of_row.assign(m, 0);
  for (std::size_t j = 1; j <= m; ++j) out.col_of_row[row_of_col[j]] = j - 1;
  for (std::size_t i = 0; i < m; ++i) out.total_cost += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(out.col_of_row[i]));
  return out;
}

}  // namespace odp

namespace odp {

ClassTransport solve_class_transport(const kernels::RowMatrix& class_cost, std::span<const std::size_t> capacity) {
  const std::size_t m = static_cast<std::size_t>(class_cost.rows());
  const std::size_t classes = static_cast<std::size_t>(class_cost.cols());
  if (capacity.size() != classes) throw ArityError("capacity length must equal the number of cost columns");
  std::size_t total = 0;
  for (std::size_t c : capacity) total += c;
  if (total != m) {
    throw ArityError("capacities sum to " + std::to_string(total) + " but there are " + std::to_string(m) + " rows");
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  auto c = [&](std::size_t i, std::size_t k) {
    return class_cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  };

  // Class potentials; a row's potential is implied by tightness on its class.
  std::vector<double> pot(classes, 0.0);
  std::vector<std::size_t> assigned(m, kNone);
  std::vector<std::vector<std::size_t>> members(classes);
  std::vector<std::size_t> slot(m, 0);  // index of row inside members[assigned[row]]

  std::vector<double> dist(classes);
  std::vector<char> settled(classes);
  std::vector<std::size_t> via_row(classes), via_class(classes);

  auto move_row = [&](std::size_t row, std::size_t to) {
    if (assigned[row] != kNone) {
      auto& from = members[assigned[row]];
      const std::size_t last = from.back();
      from[slot[row]] = last;
      slot[last] = slot[row];
      from.pop_back();
    }
    assigned[row] = to;
    slot[row] = members[to].size();
    members[to].push_back(row);
  };

  for (std::size_t r = 0; r < m; ++r) {
    double base = kInf;
    for (std::size_t k = 0; k < classes; ++k) base = std::min(base, c(r, k) - pot[k]);
    for (std::size_t k = 0; k < classes; ++k) {
      dist[k] = c(r, k) - base - pot[k];
      via_row[k] = r;
      via_class[k] = kNone;
      settled[k] = 0;
    }

    std::size_t target = kNone;
    while (true) {
      std::size_t k = kNone;
      for (std::size_t j = 0; j < classes; ++j) {
        if (!settled[j] && (k == kNone || dist[j] < dist[k])) k = j;
      }
      settled[k] = 1;
      if (members[k].size() < capacity[k]) {
        target = k;
        break;
      }
      // Relax through every row currently in class k; their edge back to k is tight.
      for (std::size_t i : members[k]) {
        const double row_pot = c(i, k) - pot[k];
        for (std::size_t l = 0; l < classes; ++l) {
          if (settled[l]) continue;
          const double cand = dist[k] + c(i, l) - row_pot - pot[l];
          if (cand < dist[l]) {
            dist[l] = cand;
            via_row[l] = i;
            via_class[l] = k;
          }
        }
      }
    }

    const double reach = dist[target];
    for (std::size_t k = 0; k < classes; ++k) pot[k] += settled[k] ? dist[k] : reach;

    // Walk the path back from the free class, shifting each row one hop.
    for (std::size_t k = target; k != kNone;) {
      const std::size_t row = via_row[k];
      const std::size_t prev = via_class[k];
      move_row(row, k);
      k = prev;
    }
  }

  ClassTransport out;
  out.class_of_row = assigned;
  out.row_cost.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.row_cost[i] = c(i, assigned[i]);
    out.total_cost += out.row_cost[i];
  }
  return out;
}

}  // namespace odp
