#include "mpe/transport.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <fmt/core.h>

namespace mpe {
namespace {

constexpr double kPerturbation = 1e-12;

struct Cell {
  std::size_t row;
  std::size_t col;
  double flow;
};

// Spanning-tree basis over m row nodes followed by n column nodes.
class Basis {
 public:
  Basis(std::size_t m, std::size_t n) : m_(m), n_(n), adj_(m + n) {}

  std::size_t add(std::size_t i, std::size_t j, double flow) {
    cells_.push_back({i, j, flow});
    const std::size_t id = cells_.size() - 1;
    adj_[i].push_back(id);
    adj_[m_ + j].push_back(id);
    return id;
  }

  // Replaces cell `id` in place so ids stay dense.
  void replace(std::size_t id, std::size_t i, std::size_t j, double flow) {
    unlink(adj_[cells_[id].row], id);
    unlink(adj_[m_ + cells_[id].col], id);
    cells_[id] = {i, j, flow};
    adj_[i].push_back(id);
    adj_[m_ + j].push_back(id);
  }

  std::vector<Cell>& cells() { return cells_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<std::size_t>& adjacent(std::size_t node) const { return adj_[node]; }
  std::size_t other_end(std::size_t id, std::size_t node) const {
    const auto& c = cells_[id];
    return node < m_ ? m_ + c.col : c.row;
  }

  void duals(const RMatrix& cost, std::vector<double>& u, std::vector<double>& v) const {
    constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
    u.assign(m_, kUnset);
    v.assign(n_, kUnset);
    u[0] = 0.0;
    std::deque<std::size_t> queue{0};
    std::vector<bool> seen(m_ + n_, false);
    seen[0] = true;
    while (!queue.empty()) {
      const std::size_t node = queue.front();
      queue.pop_front();
      for (std::size_t id : adj_[node]) {
        const std::size_t next = other_end(id, node);
        if (seen[next]) continue;
        seen[next] = true;
        const auto& c = cells_[id];
        if (next >= m_)
          v[c.col] = cost(c.row, c.col) - u[c.row];
        else
          u[c.row] = cost(c.row, c.col) - v[c.col];
        queue.push_back(next);
      }
    }
  }

  // Cell ids on the tree path from row node `i` to column node `j`.
  std::vector<std::size_t> path(std::size_t i, std::size_t j) const {
    const std::size_t target = m_ + j;
    std::vector<std::size_t> via(m_ + n_, kNone);
    std::vector<bool> seen(m_ + n_, false);
    std::deque<std::size_t> queue{i};
    seen[i] = true;
    while (!queue.empty() && !seen[target]) {
      const std::size_t node = queue.front();
      queue.pop_front();
      for (std::size_t id : adj_[node]) {
        const std::size_t next = other_end(id, node);
        if (seen[next]) continue;
        seen[next] = true;
        via[next] = id;
        queue.push_back(next);
      }
    }
    if (!seen[target]) throw std::logic_error("transportation basis is not a spanning tree");
    std::vector<std::size_t> out;
    for (std::size_t node = target; node != i;) {
      const std::size_t id = via[node];
      out.push_back(id);
      node = other_end(id, node);
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  static void unlink(std::vector<std::size_t>& list, std::size_t id) {
    auto it = std::find(list.begin(), list.end(), id);
    if (it != list.end()) {
      *it = list.back();
      list.pop_back();
    }
  }

  std::size_t m_;
  std::size_t n_;
  std::vector<Cell> cells_;
  std::vector<std::vector<std::size_t>> adj_;
};

void check_marginals(std::span<const double> a, std::span<const double> b, const RMatrix& cost) {
  if (a.empty() || b.empty()) throw std::invalid_argument("transportation problem needs nonempty marginals");
  if (cost.rows() != a.size() || cost.cols() != b.size())
    throw std::invalid_argument(
        fmt::format("cost matrix is {}x{}, marginals are {}x{}", cost.rows(), cost.cols(), a.size(), b.size()));
  for (double x : a)
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("supply entries must be finite and >= 0");
  for (double x : b)
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("demand entries must be finite and >= 0");
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  if (std::abs(sa - sb) > 1e-9)
    throw std::invalid_argument(fmt::format("unbalanced marginals: supply {} vs demand {}", sa, sb));
  for (double c : cost.data())
    if (!std::isfinite(c)) throw std::invalid_argument("cost matrix has non-finite entries");
}

// Flows of the basic solution for the given marginals (leaf peeling).
void resolve_flows(Basis& basis, std::size_t m, std::size_t n, std::span<const double> a, std::span<const double> b) {
  std::vector<double> rest(m + n);
  for (std::size_t i = 0; i < m; ++i) rest[i] = a[i];
  for (std::size_t j = 0; j < n; ++j) rest[m + j] = b[j];
  std::vector<std::size_t> degree(m + n);
  for (std::size_t node = 0; node < m + n; ++node) degree[node] = basis.adjacent(node).size();
  std::vector<bool> done(basis.cells().size(), false);
  std::deque<std::size_t> leaves;
  for (std::size_t node = 0; node < m + n; ++node)
    if (degree[node] == 1) leaves.push_back(node);
  while (!leaves.empty()) {
    const std::size_t node = leaves.front();
    leaves.pop_front();
    if (degree[node] != 1) continue;
    std::size_t edge = 0;
    for (std::size_t id : basis.adjacent(node))
      if (!done[id]) edge = id;
    done[edge] = true;
    const std::size_t other = basis.other_end(edge, node);
    basis.cells()[edge].flow = rest[node];
    rest[other] -= rest[node];
    rest[node] = 0.0;
    --degree[node];
    if (--degree[other] == 1) leaves.push_back(other);
  }
}

}  // namespace

TransportPlan solve_assignment(const RMatrix& cost) {
  const std::size_t n = cost.rows();
  if (n == 0 || cost.cols() != n) throw std::invalid_argument("assignment needs a nonempty square cost matrix");
  for (double c : cost.data())
    if (!std::isfinite(c)) throw std::invalid_argument("cost matrix has non-finite entries");

  // 1-based potentials; column 0 is the virtual source.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  TransportPlan out;
  out.plan = RMatrix(n, n, 0.0);
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t j = 1; j <= n; ++j) out.plan(match[j] - 1, j - 1) = w;
  for (std::size_t j = 1; j <= n; ++j) out.cost += w * cost(match[j] - 1, j - 1);
  out.row_duals.assign(u.begin() + 1, u.end());
  out.col_duals.assign(v.begin() + 1, v.end());
  return out;
}

namespace {

bool same_uniform(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return false;
  const double w = a.front();
  return std::all_of(a.begin(), a.end(), [&](double x) { return x == w; }) &&
         std::all_of(b.begin(), b.end(), [&](double x) { return x == w; });
}

TransportPlan simplex(std::span<const double> a, std::span<const double> b, const RMatrix& cost);

}  // namespace

TransportPlan solve_transport(std::span<const double> a, std::span<const double> b, const RMatrix& cost,
                              TransportMethod method) {
  check_marginals(a, b, cost);
  const bool uniform = same_uniform(a, b);
  if (method == TransportMethod::assignment && !uniform)
    throw std::invalid_argument("assignment solver needs identical uniform marginals of equal length");
  if (method == TransportMethod::assignment || (method == TransportMethod::automatic && uniform))
    return solve_assignment(cost);
  return simplex(a, b, cost);
}

namespace {

TransportPlan simplex(std::span<const double> a, std::span<const double> b, const RMatrix& cost) {
  const std::size_t m = a.size();
  const std::size_t n = b.size();

  std::vector<double> ra(a.begin(), a.end());
  std::vector<double> rb(b.begin(), b.end());
  for (auto& x : ra) x += kPerturbation;
  rb.back() += static_cast<double>(m) * kPerturbation;

  // Northwest corner: m + n - 1 cells forming a staircase tree.
  Basis basis(m, n);
  {
    std::size_t i = 0, j = 0;
    std::vector<double> sa = ra, sb = rb;
    while (true) {
      const double x = std::min(sa[i], sb[j]);
      basis.add(i, j, x);
      sa[i] -= x;
      sb[j] -= x;
      if (i == m - 1 && j == n - 1) break;
      if (j == n - 1 || (i < m - 1 && sa[i] <= sb[j]))
        ++i;
      else
        ++j;
    }
  }

  std::vector<double> u, v;
  double scale = 1.0;
  for (double c : cost.data()) scale = std::max(scale, std::abs(c));
  const double tol = 1e-12 * scale;
  const long max_pivots = 50L * static_cast<long>((m + n) * (m + n)) + 1000;

  std::vector<char> is_basic(m * n, 0);
  for (const auto& c : basis.cells()) is_basic[c.row * n + c.col] = 1;

  int pivots = 0;
  while (true) {
    basis.duals(cost, u, v);
    double best = -tol;
    std::size_t ei = m, ej = n;
    for (std::size_t i = 0; i < m; ++i) {
      const double ui = u[i];
      for (std::size_t j = 0; j < n; ++j) {
        if (is_basic[i * n + j]) continue;
        const double d = cost(i, j) - ui - v[j];
        if (d < best) {
          best = d;
          ei = i;
          ej = j;
        }
      }
    }
    if (ei == m) break;
    if (++pivots > max_pivots) throw std::runtime_error("transportation simplex exceeded its pivot cap");

    const auto cycle = basis.path(ei, ej);
    // Cells at even positions lose flow, odd positions gain it.
    std::size_t leave = cycle.front();
    for (std::size_t k = 0; k < cycle.size(); k += 2) {
      const auto& c = basis.cells()[cycle[k]];
      const auto& l = basis.cells()[leave];
      if (c.flow < l.flow || (c.flow == l.flow && std::pair(c.row, c.col) < std::pair(l.row, l.col))) leave = cycle[k];
    }
    const double theta = basis.cells()[leave].flow;
    for (std::size_t k = 0; k < cycle.size(); ++k) basis.cells()[cycle[k]].flow += (k % 2 == 0) ? -theta : theta;
    const auto& old = basis.cells()[leave];
    is_basic[old.row * n + old.col] = 0;
    is_basic[ei * n + ej] = 1;
    basis.replace(leave, ei, ej, theta);
  }

  resolve_flows(basis, m, n, a, b);

  TransportPlan out;
  out.plan = RMatrix(m, n, 0.0);
  for (const auto& c : basis.cells()) {
    if (c.flow < -1e-9) throw std::logic_error(fmt::format("negative flow {} in optimal basis", c.flow));
    out.plan(c.row, c.col) = std::max(c.flow, 0.0);
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.cost += out.plan(i, j) * cost(i, j);
  out.row_duals = std::move(u);
  out.col_duals = std::move(v);
  out.pivots = pivots;
  return out;
}

}  // namespace

double optimality_gap(const TransportPlan& t, std::span<const double> a, std::span<const double> b,
                      const RMatrix& cost) {
  const std::size_t m = a.size(), n = b.size();
  double gap = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += t.plan(i, j);
    gap = std::max(gap, std::abs(s - a[i]));
  }
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += t.plan(i, j);
    gap = std::max(gap, std::abs(s - b[j]));
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double p = t.plan(i, j);
      gap = std::max(gap, -p);
      const double d = cost(i, j) - t.row_duals[i] - t.col_duals[j];
      gap = std::max(gap, -d);
      if (p > 1e-12) gap = std::max(gap, std::abs(d));
    }
  return gap;
}

}  // namespace mpe
