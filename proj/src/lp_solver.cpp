#include "curator/lp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "json.hpp"

namespace curator {

void LinearProgram::validate() const {
  const std::size_t n = objective.size();
  if (n == 0) fail(ErrorKind::Parameter, "LP has no variables");
  if (nonneg_mask.size() != n) fail(ErrorKind::Parameter, "nonneg_mask length mismatch");
  if (constraint_matrix.size() != constraint_rhs.size())
    fail(ErrorKind::Parameter, "constraint row count does not match rhs length");
  for (const auto& row : constraint_matrix)
    if (row.size() != n) fail(ErrorKind::Parameter, "constraint row length mismatch");
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(objective.begin(), objective.end(), finite))
    fail(ErrorKind::Parameter, "non-finite objective coefficient");
  if (!std::all_of(constraint_rhs.begin(), constraint_rhs.end(), finite))
    fail(ErrorKind::Parameter, "non-finite constraint rhs");
  for (const auto& row : constraint_matrix)
    if (!std::all_of(row.begin(), row.end(), finite))
      fail(ErrorKind::Parameter, "non-finite constraint coefficient");
}

namespace {

constexpr double kPivotTol = 1e-11;

// Dense tableau over the standard form
//   A x = b, x >= 0,  columns = [split vars | surplus | artificials]
// with the artificial block doubling as a running copy of B^{-1}.
struct Tableau {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;     // row-major rows x cols
  std::vector<double> b;     // rhs, kept nonnegative up to roundoff
  std::vector<std::size_t> basis;  // basic column per row

  double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  void pivot(std::size_t pr, std::size_t pc) {
    const double piv = at(pr, pc);
    for (std::size_t j = 0; j < cols; ++j) at(pr, j) /= piv;
    b[pr] /= piv;
    at(pr, pc) = 1.0;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == pr) continue;
      const double f = at(i, pc);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < cols; ++j) at(i, j) -= f * at(pr, j);
      b[i] -= f * b[pr];
      at(i, pc) = 0.0;
    }
    basis[pr] = pc;
  }
};

struct PricedColumn {
  bool found = false;
  std::size_t col = 0;
};

// Bland: smallest eligible column index with negative reduced cost.
PricedColumn price(const Tableau& t, const std::vector<double>& cost,
                   std::size_t scan_limit, double opt_tol) {
  std::vector<char> is_basic(t.cols, 0);
  for (auto c : t.basis) is_basic[c] = 1;
  for (std::size_t j = 0; j < scan_limit; ++j) {
    if (is_basic[j]) continue;
    double rc = cost[j];
    for (std::size_t i = 0; i < t.rows; ++i) {
      const double cb = cost[t.basis[i]];
      if (cb != 0.0) rc -= cb * t.at(i, j);
    }
    if (rc < -opt_tol) return {true, j};
  }
  return {false, 0};
}

// Min-ratio row; ties broken by smallest basic column index (Bland).
long choose_leaving(const Tableau& t, std::size_t pc) {
  long best = -1;
  double best_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t.rows; ++i) {
    const double aij = t.at(i, pc);
    if (aij <= kPivotTol) continue;
    const double ratio = t.b[i] / aij;
    if (ratio < best_ratio - 1e-12 ||
        (ratio <= best_ratio + 1e-12 && (best < 0 || t.basis[i] < t.basis[static_cast<std::size_t>(best)]))) {
      best_ratio = std::min(best_ratio, ratio);
      best = static_cast<long>(i);
    }
  }
  return best;
}

}  // namespace

LpSolution solve(const LinearProgram& lp, const SimplexOptions& options) {
  lp.validate();

  const std::size_t n = lp.num_vars();
  const std::size_t m = lp.num_constraints();
  const std::size_t max_iter =
      options.max_iterations ? options.max_iterations : 1000 * (n + m);

  // Split free variables: column -> (original var, sign).
  std::vector<std::pair<std::size_t, double>> col_map;
  for (std::size_t j = 0; j < n; ++j) {
    col_map.emplace_back(j, 1.0);
    if (!lp.nonneg_mask[j]) col_map.emplace_back(j, -1.0);
  }
  const std::size_t ns = col_map.size();
  const std::size_t surplus0 = ns;
  const std::size_t art0 = ns + m;

  LpSolution sol;
  if (m == 0) {
    // No constraints: optimum is 0 unless some cost direction is unbounded.
    for (std::size_t j = 0; j < n; ++j) {
      if ((lp.nonneg_mask[j] && lp.objective[j] < 0) ||
          (!lp.nonneg_mask[j] && lp.objective[j] != 0)) {
        sol.status = LpStatus::Unbounded;
        return sol;
      }
    }
    sol.status = LpStatus::Optimal;
    sol.point.assign(n, 0.0);
    sol.objective_value = 0.0;
    return sol;
  }

  Tableau t;
  t.rows = m;
  t.cols = ns + 2 * m;
  t.a.assign(t.rows * t.cols, 0.0);
  t.b.resize(m);
  t.basis.resize(m);

  std::vector<double> row_sign(m, 1.0);
  double h_scale = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double sigma = lp.constraint_rhs[i] < 0 ? -1.0 : 1.0;
    row_sign[i] = sigma;
    h_scale = std::max(h_scale, std::abs(lp.constraint_rhs[i]));
    for (std::size_t j = 0; j < ns; ++j)
      t.at(i, j) = sigma * col_map[j].second * lp.constraint_matrix[i][col_map[j].first];
    t.at(i, surplus0 + i) = -sigma;  // G.z - s = h
    t.at(i, art0 + i) = 1.0;
    t.b[i] = sigma * lp.constraint_rhs[i];
    t.basis[i] = art0 + i;
  }

  // ---- Phase 1: drive artificials to zero.
  std::vector<double> cost1(t.cols, 0.0);
  for (std::size_t i = 0; i < m; ++i) cost1[art0 + i] = 1.0;

  std::size_t iterations = 0;
  auto run = [&](const std::vector<double>& cost, std::size_t scan_limit) -> int {
    for (;;) {
      auto entering = price(t, cost, scan_limit, options.optimality_tol);
      if (!entering.found) return 0;  // optimal for this phase
      const long lv = choose_leaving(t, entering.col);
      if (lv < 0) return 1;  // unbounded ray
      t.pivot(static_cast<std::size_t>(lv), entering.col);
      if (++iterations > max_iter)
        fail(ErrorKind::Numerical,
             "simplex exceeded " + std::to_string(max_iter) + " iterations (" +
                 std::to_string(n) + " vars, " + std::to_string(m) + " constraints)");
    }
  };

  if (run(cost1, art0) != 0)
    fail(ErrorKind::Numerical, "phase-1 objective unbounded; numerical breakdown");

  double phase1 = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    if (t.basis[i] >= art0) phase1 += t.b[i];
  if (phase1 > options.feasibility_tol * (1.0 + h_scale)) {
    sol.status = LpStatus::Infeasible;
    sol.iterations = iterations;
    return sol;
  }

  // Sweep out feasibility noise so degenerate pivots below stay clean.
  for (std::size_t i = 0; i < m; ++i) {
    if (t.basis[i] >= art0)
      t.b[i] = 0.0;  // basic artificial at tolerance level
    else if (t.b[i] < 0.0 && t.b[i] >= -options.feasibility_tol * (1.0 + h_scale))
      t.b[i] = 0.0;  // roundoff below zero
  }

  // Pivot surviving artificials out of the basis; rows where no real column
  // has a nonzero entry are redundant and harmless, their artificial stays
  // at value 0 and the column is barred from re-entering.
  for (std::size_t i = 0; i < m; ++i) {
    if (t.basis[i] < art0) continue;
    for (std::size_t j = 0; j < art0; ++j) {
      if (std::abs(t.at(i, j)) > 1e-7) {
        t.pivot(i, j);
        break;
      }
    }
  }

  // ---- Phase 2: real objective, artificial columns barred.
  std::vector<double> cost2(t.cols, 0.0);
  for (std::size_t j = 0; j < ns; ++j) cost2[j] = col_map[j].second * lp.objective[col_map[j].first];

  if (run(cost2, art0) != 0) {
    sol.status = LpStatus::Unbounded;
    sol.iterations = iterations;
    return sol;
  }

  // ---- Extract the solution in the original variable space.
  std::vector<double> split(ns, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (t.basis[i] < ns) split[t.basis[i]] = t.b[i];

  sol.point.assign(n, 0.0);
  for (std::size_t j = 0; j < ns; ++j) sol.point[col_map[j].first] += col_map[j].second * split[j];
  sol.objective_value =
      std::inner_product(lp.objective.begin(), lp.objective.end(), sol.point.begin(), 0.0);

  // Row multipliers: y = c_B B^{-1}, where B^{-1} sits in the artificial
  // block; undo the row flips applied during setup.
  sol.duals.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double y = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double cb = cost2[t.basis[k]];
      if (cb != 0.0) y += cb * t.at(k, art0 + i);
    }
    sol.duals[i] = row_sign[i] * y;
  }

  // Guard the advertised feasibility of the returned point.
  for (std::size_t i = 0; i < m; ++i) {
    double lhs = std::inner_product(lp.constraint_matrix[i].begin(), lp.constraint_matrix[i].end(),
                                    sol.point.begin(), 0.0);
    if (lhs < lp.constraint_rhs[i] - options.feasibility_tol * (1.0 + std::abs(lp.constraint_rhs[i])))
      fail(ErrorKind::Numerical, "simplex returned an infeasible point on row " + std::to_string(i));
  }
  for (std::size_t j = 0; j < n; ++j)
    if (lp.nonneg_mask[j] && sol.point[j] < -1e-10)
      fail(ErrorKind::Numerical, "simplex returned a negative value for nonnegative variable " +
                                     std::to_string(j));

  sol.status = LpStatus::Optimal;
  sol.iterations = iterations;
  return sol;
}

void save_lp(const LinearProgram& lp, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["c"] = lp.objective;
  doc["G"] = lp.constraint_matrix;
  doc["h"] = lp.constraint_rhs;
  doc["nonneg_mask"] = std::vector<int>(lp.nonneg_mask.begin(), lp.nonneg_mask.end());
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write LP dump '" + path.string() + "'");
  out << doc.dump(2) << "\n";
}

LinearProgram load_lp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open LP dump '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, "LP dump '" + path.string() + "': " + e.what());
  }
  LinearProgram lp;
  lp.objective = doc.at("c").get<std::vector<double>>();
  lp.constraint_matrix = doc.at("G").get<std::vector<std::vector<double>>>();
  lp.constraint_rhs = doc.at("h").get<std::vector<double>>();
  auto mask = doc.at("nonneg_mask").get<std::vector<int>>();
  lp.nonneg_mask.assign(mask.begin(), mask.end());
  lp.validate();
  return lp;
}

}  // namespace curator
