#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "curator/classifiers.hpp"
#include "support/test_util.hpp"

using namespace curator;

namespace {

// Analytic gradient of (1/m) sum (w.x+b-y)^2 + reg|w|^2 at the solution.
double linear_gradient_norm(const LinearModel& model, const std::vector<FeatureVec>& pos,
                            const std::vector<FeatureVec>& neg, double reg) {
  const std::size_t d = model.weights.size();
  std::vector<double> grad_w(d, 0.0);
  double grad_b = 0.0;
  const double m = static_cast<double>(pos.size() + neg.size());
  auto accumulate = [&](const FeatureVec& x, double y) {
    const double r = predict(model, x) - y;
    for (std::size_t i = 0; i < d; ++i) grad_w[i] += 2.0 / m * r * x[i];
    grad_b += 2.0 / m * r;
  };
  for (const auto& x : pos) accumulate(x, 1.0);
  for (const auto& x : neg) accumulate(x, -1.0);
  double norm2 = grad_b * grad_b;
  for (std::size_t i = 0; i < d; ++i) {
    grad_w[i] += 2.0 * reg * model.weights[i];
    norm2 += grad_w[i] * grad_w[i];
  }
  return std::sqrt(norm2);
}

double solution_norm(const LinearModel& model) {
  double s = model.bias * model.bias;
  for (double w : model.weights) s += w * w;
  return std::sqrt(s);
}

// Analytic gradient of (1/m)|Kc+b1-y|^2 + reg c'Kc.
double rbf_gradient_norm(const KernelModel& model, std::size_t npos, double reg) {
  const auto m = static_cast<Eigen::Index>(model.support_points.size());
  Eigen::MatrixXd k(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      double d2 = 0.0;
      for (std::size_t t = 0; t < model.support_points[0].size(); ++t) {
        const double diff = model.support_points[static_cast<std::size_t>(i)][t] -
                            model.support_points[static_cast<std::size_t>(j)][t];
        d2 += diff * diff;
      }
      k(i, j) = std::exp(-model.gamma * d2);
    }
  Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(model.coefficients.data(), m);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) y(i) = i < static_cast<Eigen::Index>(npos) ? 1.0 : -1.0;
  const Eigen::VectorXd resid = k * c + Eigen::VectorXd::Constant(m, model.bias) - y;
  const Eigen::VectorXd grad_c = 2.0 / static_cast<double>(m) * (k * resid) + 2.0 * reg * (k * c);
  const double grad_b = 2.0 / static_cast<double>(m) * resid.sum();
  return std::sqrt(grad_c.squaredNorm() + grad_b * grad_b);
}

}  // namespace

TEST_CASE("separable pair trains a correct linear model") {
  const std::vector<FeatureVec> pos{{1.0, 0.0}};
  const std::vector<FeatureVec> neg{{-1.0, 0.0}};
  const LinearModel model = train_linear(pos, neg, 0.01);
  CHECK(model.weights[0] > 0.0);
  CHECK(predict(model, pos[0]) > 0.0);
  CHECK(predict(model, neg[0]) < 0.0);
  CHECK(!model.low_margin);
}

TEST_CASE("identical classes give indifferent scores and the low-margin flag") {
  const std::vector<FeatureVec> same{{0.5, -0.25}, {1.5, 2.0}};
  const LinearModel model = train_linear(same, same, 0.01);
  for (const auto& x : same) CHECK(std::abs(predict(model, x)) < 1e-6);
  CHECK(model.low_margin);
}

TEST_CASE("well-separated gaussian blobs are fit perfectly") {
  std::mt19937_64 eng(2024);
  const auto pos = testutil::gaussian_blob(eng, {4.0, 4.0, 4.0}, 1.0, 50);
  const auto neg = testutil::gaussian_blob(eng, {-4.0, -4.0, -4.0}, 1.0, 50);
  const LinearModel model = train_linear(pos, neg, 1e-3);
  std::size_t correct = 0;
  for (const auto& x : pos) correct += predict(model, x) > 0;
  for (const auto& x : neg) correct += predict(model, x) < 0;
  CHECK(correct == 100);
}

TEST_CASE("training gradient vanishes at the returned linear solution") {
  std::mt19937_64 eng(99);
  for (int rep = 0; rep < 10; ++rep) {
    const auto pos = testutil::gaussian_blob(eng, {1.0, 0.5, -0.5, 2.0}, 2.0, 20);
    const auto neg = testutil::gaussian_blob(eng, {-1.0, 0.0, 1.0, -2.0}, 2.0, 15);
    const double reg = 1e-3;
    const LinearModel model = train_linear(pos, neg, reg);
    CHECK(linear_gradient_norm(model, pos, neg, reg) <= 1e-6 * (1.0 + solution_norm(model)));
  }
}

TEST_CASE("rbf model separates the xor pattern") {
  const std::vector<FeatureVec> pos{{0.0, 0.0}, {1.0, 1.0}};
  const std::vector<FeatureVec> neg{{0.0, 1.0}, {1.0, 0.0}};
  const KernelModel model = train_kernel_rbf(pos, neg, 1.0, 1e-4);
  for (const auto& x : pos) CHECK(predict(model, x) > 0.0);
  for (const auto& x : neg) CHECK(predict(model, x) < 0.0);
}

TEST_CASE("identical single points of opposite class score zero") {
  const std::vector<FeatureVec> pos{{0.7, 0.7}};
  const std::vector<FeatureVec> neg{{0.7, 0.7}};
  const KernelModel model = train_kernel_rbf(pos, neg, 2.0, 1e-3);
  CHECK(std::abs(predict(model, pos[0])) < 1e-9);
}

TEST_CASE("non-positive rbf width is a parameter error") {
  const std::vector<FeatureVec> pos{{1.0}};
  const std::vector<FeatureVec> neg{{0.0}};
  CHECK_THROWS_AS(train_kernel_rbf(pos, neg, 0.0, 1e-3), Error);
  CHECK_THROWS_AS(train_kernel_rbf(pos, neg, -1.0, 1e-3), Error);
}

TEST_CASE("training gradient vanishes at the returned rbf solution") {
  std::mt19937_64 eng(4242);
  const auto pos = testutil::gaussian_blob(eng, {1.0, 1.0}, 1.0, 12);
  const auto neg = testutil::gaussian_blob(eng, {-1.0, -1.0}, 1.0, 9);
  const double reg = 1e-3;
  const KernelModel model = train_kernel_rbf(pos, neg, 0.5, reg);
  double cnorm = model.bias * model.bias;
  for (double c : model.coefficients) cnorm += c * c;
  CHECK(rbf_gradient_norm(model, pos.size(), reg) <= 1e-6 * (1.0 + std::sqrt(cnorm)));
}

TEST_CASE("zero-weight model predicts its bias") {
  LinearModel model;
  model.weights = {0.0, 0.0};
  model.bias = 0.37;
  CHECK(predict(model, FeatureVec{5.0, -3.0}) == 0.37);
}

TEST_CASE("dimension mismatch is rejected") {
  LinearModel model;
  model.weights = {1.0, 2.0};
  CHECK_THROWS_AS(predict(model, FeatureVec{1.0}), Error);
}

TEST_CASE("prediction is linear in the input") {
  std::mt19937_64 eng(77);
  const auto pos = testutil::gaussian_blob(eng, {2.0, 1.0, 0.0}, 1.0, 10);
  const auto neg = testutil::gaussian_blob(eng, {-2.0, -1.0, 0.0}, 1.0, 10);
  const LinearModel model = train_linear(pos, neg, 1e-3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int rep = 0; rep < 100; ++rep) {
    FeatureVec x{u(eng), u(eng), u(eng)}, z{u(eng), u(eng), u(eng)}, xz(3);
    for (int i = 0; i < 3; ++i) xz[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] + z[static_cast<std::size_t>(i)];
    const double residual = predict(model, xz) - predict(model, x) - predict(model, z) + model.bias;
    CHECK(std::abs(residual) <= 1e-9);
  }
}

TEST_CASE("salience score is the validation sign-match rate") {
  const std::vector<FeatureVec> train_pos{{2.0}, {3.0}};
  const std::vector<FeatureVec> train_neg{{-2.0}, {-3.0}};
  const std::vector<FeatureVec> val_pos{{2.5}, {1.5}};
  const std::vector<FeatureVec> val_neg{{-2.5}, {-1.5}};
  CHECK(salience_score(train_pos, train_neg, val_pos, val_neg, 1e-3) == 1.0);
}

TEST_CASE("a constant-sign classifier scores one half on balanced validation") {
  // Identical training classes force an indifferent model; zero scores
  // resolve to +1, so exactly the positive half is right.
  const std::vector<FeatureVec> same{{1.0}, {-1.0}};
  const std::vector<FeatureVec> val_pos{{0.3}, {0.9}};
  const std::vector<FeatureVec> val_neg{{-0.3}, {-0.9}};
  CHECK(salience_score(same, same, val_pos, val_neg, 1e-3) == doctest::Approx(0.5));
}

TEST_CASE("synthetic salient query scores at least 0.9") {
  std::mt19937_64 eng(31);
  FeatureVec center(5, 6.0);
  const auto images = testutil::gaussian_blob(eng, center, 0.5, 100);
  const auto pool = testutil::gaussian_blob(eng, FeatureVec(5, 0.0), 1.0, 50);
  const std::vector<FeatureVec> train_pos(images.begin(), images.begin() + 75);
  const std::vector<FeatureVec> val_pos(images.begin() + 75, images.end());
  const std::vector<FeatureVec> train_neg(pool.begin(), pool.begin() + 25);
  const std::vector<FeatureVec> val_neg(pool.begin() + 25, pool.begin() + 50);
  CHECK(salience_score(train_pos, train_neg, val_pos, val_neg, 1e-3) >= 0.9);
}

namespace {

struct SalienceFixture {
  Dataset images;
  std::vector<FeatureVec> pool;
  std::vector<CandidateQuery> candidates;
};

SalienceFixture make_salience_fixture() {
  std::mt19937_64 eng(555);
  SalienceFixture fx;
  std::vector<std::vector<FeatureVec>> bags;
  // Three coherent queries at increasing distance from the pool, two that
  // sample the pool distribution itself, one starved of images.
  bags.push_back(testutil::gaussian_blob(eng, {8.0, 0.0, 0.0}, 0.5, 100));
  bags.push_back(testutil::gaussian_blob(eng, {0.0, 7.0, 0.0}, 0.7, 100));
  bags.push_back(testutil::gaussian_blob(eng, {0.0, 0.0, 2.4}, 1.2, 100));
  bags.push_back(testutil::gaussian_blob(eng, {0.0, 0.0, 0.0}, 1.0, 100));
  bags.push_back(testutil::gaussian_blob(eng, {0.1, -0.1, 0.0}, 1.0, 100));
  bags.push_back(testutil::gaussian_blob(eng, {9.0, 9.0, 9.0}, 0.5, 40));
  fx.images = testutil::make_dataset(3, bags);
  fx.pool = testutil::gaussian_blob(eng, {0.0, 0.0, 0.0}, 1.0, 60);
  for (std::size_t b = 0; b < bags.size(); ++b) {
    CandidateQuery c;
    c.phrase = "bag" + std::to_string(b);
    fx.candidates.push_back(c);
  }
  return fx;
}

std::size_t accepted_like(const std::vector<CandidateQuery>& cands) {
  std::size_t n = 0;
  for (const auto& c : cands)
    if (c.verdict != Verdict::RejectedNonSalient) ++n;
  return n;
}

}  // namespace

TEST_CASE("threshold one rejects every imperfect candidate") {
  SalienceFixture fx = make_salience_fixture();
  salience_filter(fx.candidates, fx.images, fx.pool, 1.0 + 1e-12);
  for (const auto& c : fx.candidates) CHECK(c.verdict == Verdict::RejectedNonSalient);
}

TEST_CASE("salience filter is monotone in the threshold") {
  std::size_t previous = SIZE_MAX;
  for (double threshold : {0.4, 0.5, 0.6, 0.7, 0.8}) {
    SalienceFixture fx = make_salience_fixture();
    salience_filter(fx.candidates, fx.images, fx.pool, threshold);
    const std::size_t now = accepted_like(fx.candidates);
    CHECK(now <= previous);
    previous = now;
    for (const auto& c : fx.candidates) {
      REQUIRE(c.salience_score);
      CHECK(*c.salience_score >= 0.0);
      CHECK(*c.salience_score <= 1.0);
    }
  }
}

TEST_CASE("candidates with too few images are flagged and rejected") {
  SalienceFixture fx = make_salience_fixture();
  salience_filter(fx.candidates, fx.images, fx.pool, 0.6);
  const auto& starved = fx.candidates[5];  // bag5 has 40 images, split needs 100
  CHECK(starved.verdict == Verdict::RejectedNonSalient);
  CHECK(starved.note.find("too-few-images") != std::string::npos);
  // Coherent far clusters survive, pool-identical queries do not.
  CHECK(fx.candidates[0].verdict == Verdict::Pending);
  CHECK(fx.candidates[1].verdict == Verdict::Pending);
  CHECK(fx.candidates[3].verdict == Verdict::RejectedNonSalient);
}

TEST_CASE("visual distances separate target-like and pool-like queries") {
  std::mt19937_64 eng(808);
  const FeatureVec center{6.0, 6.0};
  const auto target_rows = testutil::gaussian_blob(eng, center, 0.5, 60);
  const auto pool = testutil::gaussian_blob(eng, {0.0, 0.0}, 1.0, 60);
  const LinearModel center_model = train_linear(target_rows, pool, 1e-3);

  std::vector<std::vector<FeatureVec>> bags;
  bags.push_back(testutil::gaussian_blob(eng, center, 0.5, 30));      // target-like
  bags.push_back(testutil::gaussian_blob(eng, {0.0, 0.0}, 1.0, 30));  // pool-like
  Dataset images = testutil::make_dataset(2, bags);

  std::vector<CandidateQuery> cands(3);
  cands[0].phrase = "bag0";
  cands[1].phrase = "bag1";
  cands[2].phrase = "bag-with-no-images";
  visual_distance_graph(center_model, cands, images);

  REQUIRE(cands[0].visual_distance);
  REQUIRE(cands[1].visual_distance);
  CHECK(*cands[0].visual_distance < 0.2);
  CHECK(*cands[1].visual_distance > 0.8);
  CHECK(!cands[2].visual_distance);
  CHECK(cands[2].note.find("no-images") != std::string::npos);
}

TEST_CASE("model serialization round-trips predictions") {
  std::mt19937_64 eng(3);
  const auto pos = testutil::gaussian_blob(eng, {1.0, 2.0}, 1.0, 8);
  const auto neg = testutil::gaussian_blob(eng, {-1.0, -2.0}, 1.0, 8);
  const auto dir = testutil::temp_dir("classifier_models");

  const LinearModel lin = train_linear(pos, neg, 1e-3);
  save_linear_model(lin, dir / "linear.json");
  const LinearModel lin2 = load_linear_model(dir / "linear.json");
  const KernelModel rbf = train_kernel_rbf(pos, neg, 0.8, 1e-3);
  save_kernel_model(rbf, dir / "rbf.json");
  const KernelModel rbf2 = load_kernel_model(dir / "rbf.json");

  for (const auto& x : pos) {
    CHECK(predict(lin, x) == predict(lin2, x));
    CHECK(predict(rbf, x) == predict(rbf2, x));
  }
}
