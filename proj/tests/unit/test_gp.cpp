#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "hoturbo/error.hpp"
#include "hoturbo/gp.hpp"
#include "support.hpp"

using namespace hoturbo;

namespace {

Eigen::MatrixXd uniform_points(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = u(rng);
  return x;
}

Dataset random_dataset(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd x = uniform_points(rng, n, d);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = std::sin(4.0 * x(i, 0)) + 0.3 * g(rng);
  return Dataset(x, y);
}

// Matern-5/2, written out independently of the library.
double matern_ref(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const GpHyper& h) {
  double r2 = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) r2 += std::pow((a(i) - b(i)) / h.length_scales(i), 2);
  const double r = std::sqrt(r2);
  return h.signal_var * (1.0 + std::sqrt(5.0) * r + 5.0 * r2 / 3.0) * std::exp(-std::sqrt(5.0) * r);
}

GpHyper random_hyper(std::mt19937_64& rng, Eigen::Index d) {
  std::uniform_real_distribution<double> ls(0.1, 1.0), sv(0.5, 2.0), nv(1e-4, 1e-2), mu(-1.0, 1.0);
  GpHyper h = GpHyper::isotropic(static_cast<std::size_t>(d), 1.0, sv(rng), nv(rng), mu(rng));
  for (Eigen::Index i = 0; i < d; ++i) h.length_scales(i) = ls(rng);
  return h;
}

}  // namespace

TEST_CASE("kernel examples") {
  GpHyper h = GpHyper::isotropic(1, 1.0, 1.0, 0.0);
  Eigen::VectorXd a(1), b(1);
  a << 0.2;
  b << 1.2;
  CHECK(kernel(a, b, h) == doctest::Approx(0.52399).epsilon(1e-4));
  CHECK(kernel(a, a, h) == 1.0);
  GpHyper h2 = GpHyper::isotropic(3, 0.4, 2.5, 0.0);
  Eigen::VectorXd c = Eigen::VectorXd::Constant(3, 0.7);
  CHECK(kernel(c, c, h2) == 2.5);
  CHECK_THROWS_AS(kernel(a, c, h2), ValidationError);
}

TEST_CASE("kernel matches the closed form and is symmetric") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    GpHyper h = random_hyper(rng, 4);
    Eigen::MatrixXd p = uniform_points(rng, 2, 4);
    Eigen::VectorXd a = p.row(0).transpose(), b = p.row(1).transpose();
    CHECK(kernel(a, b, h) == doctest::Approx(matern_ref(a, b, h)).epsilon(1e-12));
    CHECK(kernel(a, b, h) == kernel(b, a, h));
  }
}

TEST_CASE("Gram matrices are positive semi-definite") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    GpHyper h = random_hyper(rng, 3);
    Eigen::MatrixXd x = uniform_points(rng, 40, 3);
    Eigen::MatrixXd k = kernel_matrix(x, x, h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8);
  }
}

TEST_CASE("prior when there is no data") {
  GpHyper h = GpHyper::isotropic(2, 0.3, 1.7, 1e-3, 0.4);
  GpModel m = GpModel::condition(h, Dataset(2));
  Eigen::VectorXd x(2);
  x << 0.1, 0.9;
  Posterior p = m.posterior(x);
  CHECK(p.mean == 0.4);
  CHECK(p.var == 1.7);
}

TEST_CASE("noise-free interpolation") {
  std::mt19937_64 rng(13);
  Dataset data = random_dataset(rng, 12, 2);
  GpModel m = GpModel::condition(GpHyper::isotropic(2, 0.3, 1.0, 0.0), data);
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    Posterior p = m.posterior(data.x.row(i).transpose());
    CHECK(std::abs(p.mean - data.y(i)) < 1e-8);
    CHECK(p.var < 1e-8);
    CHECK(p.var >= 0.0);
  }
}

TEST_CASE("posterior agrees with a dense explicit-inverse oracle") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 50);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 4);
    Dataset data = random_dataset(rng, n, d);
    GpHyper h = random_hyper(rng, d);
    GpModel m = GpModel::condition(h, data);

    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        k(i, j) = matern_ref(data.x.row(i).transpose(), data.x.row(j).transpose(), h);
    k.diagonal().array() += h.noise_var + m.jitter();
    Eigen::MatrixXd kinv = k.inverse();
    Eigen::VectorXd resid = data.y.array() - h.mean_const;

    // Factor invariants.
    Eigen::MatrixXd l = m.chol().triangularView<Eigen::Lower>();
    CHECK((l * l.transpose() - k).norm() <= 1e-8 * k.norm());
    CHECK((k * m.alpha() - resid).norm() <= 1e-8 * std::max(1.0, resid.norm()));

    Eigen::MatrixXd q = uniform_points(rng, 5, d);
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
      Eigen::VectorXd x = q.row(r).transpose();
      Eigen::VectorXd kx(n);
      for (Eigen::Index i = 0; i < n; ++i) kx(i) = matern_ref(x, data.x.row(i).transpose(), h);
      const double mean = h.mean_const + kx.dot(kinv * resid);
      const double var = std::max(0.0, h.signal_var - kx.dot(kinv * kx));
      Posterior p = m.posterior(x);
      CHECK(std::abs(p.mean - mean) < 1e-8);
      CHECK(std::abs(p.var - var) < 1e-8);
      CHECK(p.var <= h.signal_var + 1e-10);
    }
  }
}

TEST_CASE("an extra observation never increases posterior variance") {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    Dataset data = random_dataset(rng, 15, 2);
    GpHyper h = random_hyper(rng, 2);
    GpModel before = GpModel::condition(h, data.tail(14));
    GpModel after = GpModel::condition(h, data);
    Eigen::MatrixXd q = uniform_points(rng, 10, 2);
    for (Eigen::Index r = 0; r < q.rows(); ++r)
      CHECK(after.posterior(q.row(r).transpose()).var <= before.posterior(q.row(r).transpose()).var + 1e-10);
  }
}

TEST_CASE("fit on constant data predicts the constant") {
  std::mt19937_64 rng(16);
  Eigen::MatrixXd x = uniform_points(rng, 20, 3);
  Dataset data(x, Eigen::VectorXd::Constant(20, 4.25));
  GpModel m = GpModel::fit(data, 1);
  Eigen::MatrixXd q = uniform_points(rng, 10, 3);
  for (Eigen::Index r = 0; r < q.rows(); ++r) CHECK(std::abs(m.posterior(q.row(r).transpose()).mean - 4.25) < 1e-6);
}

TEST_CASE("fit preconditions") {
  Dataset one(Eigen::MatrixXd::Constant(1, 2, 0.5), Eigen::VectorXd::Constant(1, 1.0));
  CHECK_THROWS_AS(GpModel::fit(one, 0), ValidationError);
  Dataset bad(Eigen::MatrixXd::Constant(3, 2, 0.5), Eigen::VectorXd::Constant(3, 1.0));
  bad.y(1) = NAN;
  CHECK_THROWS_AS(GpModel::fit(bad, 0), ValidationError);
  Dataset outside(Eigen::MatrixXd::Constant(3, 2, 1.5), Eigen::VectorXd::Constant(3, 1.0));
  CHECK_THROWS_AS(outside.validate(), ValidationError);
}

TEST_CASE("fit is deterministic") {
  std::mt19937_64 rng(17);
  Dataset data = random_dataset(rng, 40, 3);
  GpModel a = GpModel::fit(data, 99), b = GpModel::fit(data, 99);
  CHECK(a.hyper().length_scales == b.hyper().length_scales);
  CHECK(a.hyper().signal_var == b.hyper().signal_var);
  CHECK(a.hyper().noise_var == b.hyper().noise_var);
  CHECK(a.hyper().mean_const == b.hyper().mean_const);
}

TEST_CASE("fit recovers length scales of a known GP") {
  GpHyper truth = GpHyper::isotropic(2, 0.3, 1.0, 1e-4);
  std::vector<double> err0, err1;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    Eigen::MatrixXd x = uniform_points(rng, 200, 2);
    Eigen::MatrixXd k = kernel_matrix(x, x, truth);
    k.diagonal().array() += truth.noise_var;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    REQUIRE(llt.info() == Eigen::Success);
    std::normal_distribution<double> g;
    Eigen::VectorXd z(200);
    for (Eigen::Index i = 0; i < 200; ++i) z(i) = g(rng);
    Eigen::VectorXd y = llt.matrixL() * z;
    GpModel m = GpModel::fit(Dataset(x, y), seed);
    err0.push_back(std::abs(std::log(m.hyper().length_scales(0)) - std::log(0.3)));
    err1.push_back(std::abs(std::log(m.hyper().length_scales(1)) - std::log(0.3)));
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[4] + v[5]);
  };
  CHECK(median(err0) <= 0.5);
  CHECK(median(err1) <= 0.5);
}

TEST_CASE("joint draws reproduce the posterior moments") {
  std::mt19937_64 rng(18);
  Dataset data = random_dataset(rng, 10, 2);
  GpModel m = GpModel::condition(GpHyper::isotropic(2, 0.4, 1.3, 1e-3, 0.2), data);
  Eigen::MatrixXd cands = uniform_points(rng, 6, 2);
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  m.joint(cands, mean, cov);

  const int n = 10000;
  Eigen::MatrixXd draws = m.sample_joint(cands, 5, n);
  REQUIRE(draws.rows() == 6);
  REQUIRE(draws.cols() == n);
  Eigen::VectorXd emp_mean = draws.rowwise().mean();
  Eigen::MatrixXd centered = draws.colwise() - emp_mean;
  Eigen::MatrixXd emp_cov = centered * centered.transpose() / (n - 1);
  for (Eigen::Index i = 0; i < 6; ++i) {
    const double se = std::sqrt(cov(i, i) / n);
    CHECK(std::abs(emp_mean(i) - mean(i)) <= 3.0 * se);
  }
  CHECK((emp_cov - cov).norm() <= 0.1 * cov.norm());
  CHECK(m.sample_joint(cands, 5, 3) == m.sample_joint(cands, 5, 3));
  CHECK_THROWS_AS(m.sample_joint(Eigen::MatrixXd(0, 2), 5), ValidationError);
}

TEST_CASE("degenerate draw at a noise-free training point is the mean") {
  std::mt19937_64 rng(19);
  Dataset data = random_dataset(rng, 8, 2);
  GpModel m = GpModel::condition(GpHyper::isotropic(2, 0.3, 1.0, 0.0), data);
  Eigen::MatrixXd c = data.x.row(3);
  Eigen::MatrixXd draw = m.sample_joint(c, 7);
  CHECK(draw(0, 0) == m.posterior(c.row(0).transpose()).mean);
}

TEST_CASE("jitter escalation") {
  Eigen::MatrixXd singular = Eigen::MatrixXd::Ones(4, 4);
  Eigen::MatrixXd l;
  const double j = robust_cholesky(singular, 1.0, l);
  CHECK(j >= 1e-6);
  CHECK(j <= 1e-2);
  Eigen::MatrixXd neg = -Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(robust_cholesky(neg, 1.0, l), NumericalError);
}

TEST_CASE("dataset CSV round trip") {
  std::mt19937_64 rng(20);
  Dataset data = random_dataset(rng, 25, 4);
  auto p = testing::temp_path("dataset.csv");
  save_dataset_csv(p, data, "hoturbo test");
  Dataset back = load_dataset_csv(p);
  REQUIRE(back.size() == 25);
  REQUIRE(back.dim() == 4);
  CHECK((back.x - data.x).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((back.y - data.y).cwiseAbs().maxCoeff() <= 1e-15);
}
