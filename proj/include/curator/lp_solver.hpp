#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "curator/error.hpp"

namespace curator {

/// minimize c.z  subject to  G.z >= h, and z_j >= 0 where nonneg_mask[j].
struct LinearProgram {
  std::vector<double> objective;                      // c
  std::vector<std::vector<double>> constraint_matrix; // rows of G
  std::vector<double> constraint_rhs;                 // h
  std::vector<bool> nonneg_mask;                      // false = free variable

  std::size_t num_vars() const { return objective.size(); }
  std::size_t num_constraints() const { return constraint_rhs.size(); }
  void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> point;       // set when Optimal
  double objective_value = 0.0;    // set when Optimal
  std::vector<double> duals;       // one multiplier per constraint row, set when Optimal
  std::size_t iterations = 0;
};

struct SimplexOptions {
  double feasibility_tol = 1e-8;
  double optimality_tol = 1e-9;   // reduced-cost threshold
  std::size_t max_iterations = 0; // 0 selects 1000*(vars+constraints)
};

// Two-phase primal simplex, Bland's rule. Free variables are split into
// differences of nonnegatives internally. Deterministic.
LpSolution solve(const LinearProgram& lp, const SimplexOptions& options = {});

void save_lp(const LinearProgram& lp, const std::filesystem::path& path);
LinearProgram load_lp(const std::filesystem::path& path);

}  // namespace curator
