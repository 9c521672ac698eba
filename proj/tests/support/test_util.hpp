#pragma once

// Shared fixtures and independent oracles for the test suites. Everything
// here recomputes expectations from first principles; nothing calls into the
// code paths under test except where a signature is the thing being checked.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "curator/core.hpp"
#include "curator/image_features.hpp"
#include "curator/lp_solver.hpp"
#include "curator/multiview.hpp"

namespace testutil {

using curator::FeatureVec;

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("curator_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------
// Random data
// ---------------------------------------------------------------------------

inline std::vector<FeatureVec> gaussian_blob(std::mt19937_64& eng, const FeatureVec& center,
                                             double stddev, std::size_t count) {
  std::normal_distribution<double> gauss(0.0, stddev);
  std::vector<FeatureVec> out(count, FeatureVec(center.size()));
  for (auto& row : out)
    for (std::size_t i = 0; i < center.size(); ++i) row[i] = center[i] + gauss(eng);
  return out;
}

inline curator::Dataset make_dataset(std::size_t dim,
                                     const std::vector<std::vector<FeatureVec>>& bags_of_rows,
                                     const std::vector<std::optional<int>>& labels = {}) {
  curator::Dataset ds;
  ds.dimensionality = dim;
  for (std::size_t b = 0; b < bags_of_rows.size(); ++b) {
    curator::Bag bag;
    bag.id = "bag" + std::to_string(b);
    bag.query_text = bag.id;
    if (b < labels.size()) bag.label = labels[b];
    for (std::size_t j = 0; j < bags_of_rows[b].size(); ++j) {
      curator::Instance inst;
      inst.id = bag.id + "_i" + std::to_string(j);
      inst.features = bags_of_rows[b][j];
      bag.instances.push_back(inst.id);
      ds.instances.emplace(inst.id, std::move(inst));
    }
    ds.bags.emplace(bag.id, std::move(bag));
  }
  ds.validate();
  return ds;
}

// ---------------------------------------------------------------------------
// LP oracle: enumerate basic feasible vertices of {G z >= h, z_I >= 0}.
// Valid for bounded feasible regions, where an optimum sits on a vertex.
// ---------------------------------------------------------------------------

struct VertexOptimum {
  bool found = false;
  double value = 0.0;
  std::vector<double> point;
};

inline VertexOptimum enumerate_vertices(const curator::LinearProgram& lp, double tol = 1e-7) {
  const std::size_t n = lp.num_vars();
  const std::size_t m = lp.num_constraints();

  // Constraint pool: rows of G, then axis planes for nonnegative variables.
  std::vector<std::vector<double>> normals;
  std::vector<double> offsets;
  for (std::size_t i = 0; i < m; ++i) {
    normals.push_back(lp.constraint_matrix[i]);
    offsets.push_back(lp.constraint_rhs[i]);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!lp.nonneg_mask[j]) continue;
    std::vector<double> row(n, 0.0);
    row[j] = 1.0;
    normals.push_back(row);
    offsets.push_back(0.0);
  }

  VertexOptimum best;
  const std::size_t pool = normals.size();
  if (pool < n) return best;

  std::vector<std::size_t> combo(n);
  std::vector<bool> mask(pool, false);
  std::fill(mask.begin(), mask.begin() + static_cast<long>(n), true);
  std::sort(mask.begin(), mask.end());  // lexicographically iterate via next_permutation

  do {
    std::size_t c = 0;
    Eigen::MatrixXd a(n, n);
    Eigen::VectorXd b(n);
    for (std::size_t i = 0; i < pool; ++i) {
      if (!mask[i]) continue;
      for (std::size_t j = 0; j < n; ++j) a(static_cast<long>(c), static_cast<long>(j)) = normals[i][j];
      b(static_cast<long>(c)) = offsets[i];
      ++c;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd z = lu.solve(b);

    bool feasible = true;
    for (std::size_t i = 0; i < m && feasible; ++i) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < n; ++j) lhs += lp.constraint_matrix[i][j] * z(static_cast<long>(j));
      feasible = lhs >= lp.constraint_rhs[i] - tol;
    }
    for (std::size_t j = 0; j < n && feasible; ++j)
      if (lp.nonneg_mask[j]) feasible = z(static_cast<long>(j)) >= -tol;
    if (!feasible) continue;

    double value = 0.0;
    for (std::size_t j = 0; j < n; ++j) value += lp.objective[j] * z(static_cast<long>(j));
    if (!best.found || value < best.value) {
      best.found = true;
      best.value = value;
      best.point.assign(z.data(), z.data() + n);
    }
  } while (std::next_permutation(mask.begin(), mask.end()));
  return best;
}

// A random LP with a known interior feasible point, all variables
// nonnegative, and a simplex cap that keeps the region bounded.
inline curator::LinearProgram random_bounded_lp(std::mt19937_64& eng, std::size_t max_vars = 6,
                                                std::size_t max_rows = 5) {
  std::uniform_int_distribution<std::size_t> nd(1, max_vars);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_real_distribution<double> pos(0.0, 2.0);

  const std::size_t n = nd(eng);
  std::uniform_int_distribution<std::size_t> md(1, max_rows);
  const std::size_t m = md(eng);

  curator::LinearProgram lp;
  lp.nonneg_mask.assign(n, true);
  lp.objective.resize(n);
  for (auto& c : lp.objective) c = coef(eng);

  std::vector<double> anchor(n);
  for (auto& v : anchor) v = pos(eng);

  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> row(n);
    double lhs = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = coef(eng);
      lhs += row[j] * anchor[j];
    }
    lp.constraint_matrix.push_back(std::move(row));
    lp.constraint_rhs.push_back(lhs - pos(eng));  // anchor stays feasible
  }
  // Bounding cap: sum z <= sum anchor + margin.
  double cap = 0.0;
  for (double v : anchor) cap += v;
  lp.constraint_matrix.push_back(std::vector<double>(n, -1.0));
  lp.constraint_rhs.push_back(-(cap + 3.0));
  return lp;
}

// ---------------------------------------------------------------------------
// Co-regularization objective, written straight from its definition.
// ---------------------------------------------------------------------------

inline double coreg_objective_ref(const curator::CoRegModel& m,
                                  const std::vector<double>& alpha1,
                                  const std::vector<double>& alpha2,
                                  const std::vector<int>& labels) {
  const std::size_t total = m.points1.size();
  const std::size_t l = m.labeled_count;
  auto f = [&](const curator::ViewKernel& k, const std::vector<double>& pts,
               const std::vector<double>& alpha, std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < total; ++j) s += alpha[j] * curator::kernel_eval(k, pts[j], pts[i]);
    return s;
  };
  double loss = 0.0;
  for (std::size_t i = 0; i < l; ++i) {
    const double d1 = f(m.kernel1, m.points1, alpha1, i) - labels[i];
    const double d2 = f(m.kernel2, m.points2, alpha2, i) - labels[i];
    loss += d1 * d1 + d2 * d2;
  }
  loss /= 2.0 * static_cast<double>(l);

  double norm1 = 0.0, norm2 = 0.0;
  for (std::size_t i = 0; i < total; ++i)
    for (std::size_t j = 0; j < total; ++j) {
      norm1 += alpha1[i] * alpha1[j] * curator::kernel_eval(m.kernel1, m.points1[i], m.points1[j]);
      norm2 += alpha2[i] * alpha2[j] * curator::kernel_eval(m.kernel2, m.points2[i], m.points2[j]);
    }

  double disagreement = 0.0;
  for (std::size_t i = l; i < total; ++i) {
    const double d = f(m.kernel1, m.points1, alpha1, i) - f(m.kernel2, m.points2, alpha2, i);
    disagreement += d * d;
  }
  return loss + m.gamma1 * norm1 + m.gamma2 * norm2 + m.lambda * disagreement;
}

// ---------------------------------------------------------------------------
// Synthetic image corpora: flat-color line art vs. noisy photo-like images.
// ---------------------------------------------------------------------------

inline curator::PixelImage flat_artificial_image(std::mt19937_64& eng, int w = 48, int h = 48) {
  std::uniform_int_distribution<int> channel(0, 255);
  std::uniform_int_distribution<int> coord_x(2, w - 3), coord_y(2, h - 3);
  curator::PixelImage im;
  im.width = w;
  im.height = h;
  im.pixels.assign(3u * static_cast<std::size_t>(w) * h, 0);

  auto set_px = [&](int x, int y, int r, int g, int b) {
    const std::size_t p = 3u * (static_cast<std::size_t>(y) * w + x);
    im.pixels[p] = static_cast<std::uint8_t>(r);
    im.pixels[p + 1] = static_cast<std::uint8_t>(g);
    im.pixels[p + 2] = static_cast<std::uint8_t>(b);
  };

  const int bg_r = channel(eng), bg_g = channel(eng), bg_b = channel(eng);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) set_px(x, y, bg_r, bg_g, bg_b);

  // One solid rectangle and one axis-aligned line: few colors, hard edges.
  const int rx0 = std::min(coord_x(eng), w / 2), ry0 = std::min(coord_y(eng), h / 2);
  const int rx1 = rx0 + w / 4, ry1 = ry0 + h / 4;
  const int fg_r = channel(eng), fg_g = channel(eng), fg_b = channel(eng);
  for (int y = ry0; y <= ry1 && y < h; ++y)
    for (int x = rx0; x <= rx1 && x < w; ++x) set_px(x, y, fg_r, fg_g, fg_b);
  const int line_y = coord_y(eng);
  for (int x = 0; x < w; ++x) set_px(x, line_y, 255 - bg_r, 255 - bg_g, 255 - bg_b);
  return im;
}

inline curator::PixelImage noisy_natural_image(std::mt19937_64& eng, int w = 48, int h = 48) {
  std::uniform_int_distribution<int> base(60, 195);
  std::normal_distribution<double> noise(0.0, 28.0);
  const double gx = base(eng), gy = base(eng), g0 = base(eng);
  curator::PixelImage im;
  im.width = w;
  im.height = h;
  im.pixels.resize(3u * static_cast<std::size_t>(w) * h);
  std::size_t p = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double ramp = g0 + (gx - g0) * x / w + (gy - g0) * y / h;
      for (int c = 0; c < 3; ++c) {
        const double v = ramp + noise(eng);
        im.pixels[p++] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
    }
  return im;
}

}  // namespace testutil
