#include "hoturbo/gp.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hoturbo/error.hpp"
#include "hoturbo/rng.hpp"

namespace hoturbo {

namespace {

const double kSqrt5 = std::sqrt(5.0);

double matern52(double r) { return (1.0 + kSqrt5 * r + 5.0 / 3.0 * r * r) * std::exp(-kSqrt5 * r); }

// Rows of x divided by the length scales.
Eigen::MatrixXd scaled(const Eigen::MatrixXd& x, const Eigen::VectorXd& ls) {
  return x * ls.cwiseInverse().asDiagonal();
}

// Pairwise Euclidean distances between rows, via the Gram expansion.
Eigen::MatrixXd distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::VectorXd na = a.rowwise().squaredNorm();
  Eigen::VectorXd nb = b.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = (-2.0 * a * b.transpose()).colwise() + na;
  d2.rowwise() += nb.transpose();
  return d2.cwiseMax(0.0).cwiseSqrt();
}

// Extended-precision accumulation; with ill-conditioned K the weights are
// large and a plain dot product cancels badly.
long double wide_dot(const Eigen::Ref<const Eigen::VectorXd>& a, const std::vector<long double>& b) {
  long double acc = 0.0L;
  for (Eigen::Index i = 0; i < a.size(); ++i) acc += a(i) * b[static_cast<std::size_t>(i)];
  return acc;
}

}  // namespace

void Dataset::append(const Eigen::Ref<const Eigen::VectorXd>& point, double value) {
  if (x.cols() == 0 && x.rows() == 0) x.resize(0, point.size());
  if (point.size() != x.cols()) throw ValidationError("Dataset::append: dimension mismatch");
  x.conservativeResize(x.rows() + 1, Eigen::NoChange);
  x.row(x.rows() - 1) = point.transpose();
  y.conservativeResize(y.size() + 1);
  y(y.size() - 1) = value;
}

Dataset Dataset::tail(std::size_t n) const {
  if (n >= size()) return *this;
  auto k = static_cast<Eigen::Index>(n);
  return Dataset(x.bottomRows(k), y.tail(k));
}

void Dataset::validate() const {
  if (x.rows() != y.size()) throw ValidationError("Dataset: row count of x differs from length of y");
  if (x.size() > 0 && (x.minCoeff() < 0.0 || x.maxCoeff() > 1.0))
    throw ValidationError("Dataset: x entries must lie in [0, 1]");
}

void save_dataset_csv(const std::filesystem::path& path, const Dataset& data, std::string_view preamble) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset " + path.string());
  if (!preamble.empty()) out << "# " << preamble << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t j = 0; j < data.dim(); ++j) out << 'x' << j << ',';
  out << "y\n";
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) out << data.x(i, j) << ',';
    out << data.y(i) << '\n';
  }
}

Dataset load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset " + path.string());
  std::string line;
  do {
    if (!std::getline(in, line)) throw ParseError("dataset: missing header");
  } while (line.rfind('#', 0) == 0);
  std::size_t cols = 1;
  for (char c : line) cols += c == ',';
  if (cols < 2 || line.substr(line.rfind(',') + 1).rfind('y', 0) != 0)
    throw ParseError("dataset: header must be x0,...,y");
  Dataset data(cols - 1);
  Eigen::VectorXd row(static_cast<Eigen::Index>(cols - 1));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(fields, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw ParseError("dataset: bad number on line " + std::to_string(lineno));
      }
    }
    if (vals.size() != cols) throw ParseError("dataset: wrong column count on line " + std::to_string(lineno));
    for (std::size_t j = 0; j + 1 < cols; ++j) row(static_cast<Eigen::Index>(j)) = vals[j];
    data.append(row, vals.back());
  }
  data.validate();
  return data;
}

GpHyper GpHyper::isotropic(std::size_t d, double length_scale, double signal_var, double noise_var,
                           double mean_const) {
  GpHyper h;
  h.length_scales = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d), length_scale);
  h.signal_var = signal_var;
  h.noise_var = noise_var;
  h.mean_const = mean_const;
  return h;
}

void GpHyper::validate() const {
  if (length_scales.size() == 0 || length_scales.minCoeff() <= 0.0)
    throw ValidationError("GpHyper: length scales must be > 0");
  if (!(signal_var > 0.0)) throw ValidationError("GpHyper: signal_var must be > 0");
  if (!(noise_var >= 0.0)) throw ValidationError("GpHyper: noise_var must be >= 0");
}

double kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
              const GpHyper& hyper) {
  if (a.size() != hyper.length_scales.size() || b.size() != hyper.length_scales.size())
    throw ValidationError("kernel: point dimension does not match the length scales");
  double r = (a - b).cwiseQuotient(hyper.length_scales).norm();
  return hyper.signal_var * matern52(r);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const GpHyper& hyper) {
  if (a.cols() != hyper.length_scales.size() || b.cols() != hyper.length_scales.size())
    throw ValidationError("kernel_matrix: dimension does not match the length scales");
  Eigen::MatrixXd r = distances(scaled(a, hyper.length_scales), scaled(b, hyper.length_scales));
  return hyper.signal_var * r.unaryExpr([](double v) { return matern52(v); });
}

double robust_cholesky(const Eigen::MatrixXd& a, double scale, Eigen::MatrixXd& lower) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) {
    lower = llt.matrixL();
    return 0.0;
  }
  for (double rel = 1e-6; rel <= 1e-2 * (1.0 + 1e-9); rel *= 10.0) {
    double jitter = rel * scale;
    Eigen::MatrixXd b = a;
    b.diagonal().array() += jitter;
    llt.compute(b);
    if (llt.info() == Eigen::Success) {
      lower = llt.matrixL();
      return jitter;
    }
  }
  throw NumericalError("covariance matrix is not positive definite after jitter escalation");
}

double profiled_log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpHyper& hyper,
                                        Eigen::VectorXd* grad, double* mean_out) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Eigen::MatrixXd xs = scaled(x, hyper.length_scales);
  Eigen::MatrixXd r = distances(xs, xs);
  Eigen::MatrixXd k = hyper.signal_var * r.unaryExpr([](double v) { return matern52(v); });
  Eigen::MatrixXd kt = k;
  kt.diagonal().array() += hyper.noise_var;

  Eigen::MatrixXd lower;
  try {
    robust_cholesky(kt, hyper.signal_var, lower);
  } catch (const NumericalError&) {
    return -std::numeric_limits<double>::infinity();
  }
  auto tri = lower.triangularView<Eigen::Lower>();
  auto solve = [&](const Eigen::MatrixXd& rhs) {
    Eigen::MatrixXd t = tri.solve(rhs);
    return Eigen::MatrixXd(tri.transpose().solve(t));
  };

  // Generalized least squares estimate of the constant mean.
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd kinv_one = solve(ones);
  Eigen::VectorXd kinv_y = solve(y);
  double mu = ones.dot(kinv_y) / ones.dot(kinv_one);
  if (mean_out) *mean_out = mu;
  Eigen::VectorXd alpha = kinv_y - mu * kinv_one;
  Eigen::VectorXd resid = y - mu * ones;

  double lml = -0.5 * resid.dot(alpha) - lower.diagonal().array().log().sum() -
               0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

  if (grad) {
    grad->setZero(d + 2);
    Eigen::MatrixXd kinv = solve(Eigen::MatrixXd::Identity(n, n));
    Eigen::MatrixXd w = alpha * alpha.transpose() - kinv;
    // d/dlog(signal_var): K_f; d/dlog(noise_var): noise_var * I.
    (*grad)(d) = 0.5 * (w.cwiseProduct(k)).sum();
    (*grad)(d + 1) = 0.5 * hyper.noise_var * w.trace();
    // d/dlog(l_i): signal_var * 5/3 (1 + sqrt5 r) exp(-sqrt5 r) * (delta_i / l_i)^2.
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = a + 1; b < n; ++b) {
        double rab = r(a, b);
        double c = w(a, b) * hyper.signal_var * (5.0 / 3.0) * (1.0 + kSqrt5 * rab) * std::exp(-kSqrt5 * rab);
        // Factor 2 for the symmetric (b, a) entry, times the 1/2 of the trace formula.
        for (Eigen::Index i = 0; i < d; ++i) {
          double delta = xs(a, i) - xs(b, i);
          (*grad)(i) += c * delta * delta;
        }
      }
    }
  }
  return lml;
}

GpModel GpModel::condition(GpHyper hyper, Dataset data) {
  hyper.validate();
  if (data.size() > 0 && static_cast<Eigen::Index>(data.dim()) != hyper.length_scales.size())
    throw ValidationError("GpModel: data dimension does not match the length scales");
  GpModel m;
  m.hyper_ = std::move(hyper);
  m.data_ = std::move(data);
  if (m.data_.x.cols() == 0) m.data_.x.resize(0, m.hyper_.length_scales.size());
  m.y_std_ = m.data_.y;
  m.factorize();
  return m;
}

void GpModel::factorize() {
  const Eigen::Index n = data_.x.rows();
  if (n == 0) {
    chol_.resize(0, 0);
    alpha_.resize(0);
    alpha_wide_.clear();
    return;
  }
  Eigen::MatrixXd kt = kernel_matrix(data_.x, data_.x, hyper_);
  kt.diagonal().array() += hyper_.noise_var;
  jitter_ = robust_cholesky(kt, hyper_.signal_var, chol_);
  auto tri = chol_.triangularView<Eigen::Lower>();
  Eigen::VectorXd resid = y_std_.array() - hyper_.mean_const;
  alpha_ = tri.transpose().solve(tri.solve(resid));
  // Iterative refinement with extended-precision weights. Near-duplicate
  // inputs leave K badly conditioned, and the mean at a training point is
  // exactly (K alpha)_i, which a double dot product gets wrong by cond * eps.
  kt.diagonal().array() += jitter_;
  alpha_wide_.assign(alpha_.data(), alpha_.data() + n);
  for (int it = 0; it < 3; ++it) {
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) r(i) = static_cast<double>(resid(i) - wide_dot(kt.col(i), alpha_wide_));
    if (r.lpNorm<Eigen::Infinity>() <= 1e-16 * std::max(1.0, resid.lpNorm<Eigen::Infinity>())) break;
    const Eigen::VectorXd step = tri.transpose().solve(tri.solve(r));
    for (Eigen::Index i = 0; i < n; ++i) alpha_wide_[static_cast<std::size_t>(i)] += step(i);
  }
  for (Eigen::Index i = 0; i < n; ++i) alpha_(i) = static_cast<double>(alpha_wide_[static_cast<std::size_t>(i)]);
}

namespace {

struct FitProblem {
  const Eigen::MatrixXd* x;
  const Eigen::VectorXd* y;
  Eigen::VectorXd lo, hi;  // log-space bounds
  std::size_t d;
};

// Box constraints by a logistic map from unconstrained u to log-parameters.
void to_params(const FitProblem& p, const gsl_vector* u, Eigen::VectorXd& theta, Eigen::VectorXd& dtheta) {
  const auto k = static_cast<Eigen::Index>(p.d + 2);
  theta.resize(k);
  dtheta.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    double s = 1.0 / (1.0 + std::exp(-gsl_vector_get(u, static_cast<std::size_t>(i))));
    theta(i) = p.lo(i) + (p.hi(i) - p.lo(i)) * s;
    dtheta(i) = (p.hi(i) - p.lo(i)) * s * (1.0 - s);
  }
}

GpHyper hyper_from(const FitProblem& p, const Eigen::VectorXd& theta) {
  GpHyper h;
  auto d = static_cast<Eigen::Index>(p.d);
  h.length_scales = theta.head(d).array().exp();
  h.signal_var = std::exp(theta(d));
  h.noise_var = std::exp(theta(d + 1));
  return h;
}

constexpr double kBadValue = 1e25;

double neg_lml(const gsl_vector* u, void* params) {
  const auto& p = *static_cast<const FitProblem*>(params);
  Eigen::VectorXd theta, dtheta;
  to_params(p, u, theta, dtheta);
  double v = profiled_log_marginal_likelihood(*p.x, *p.y, hyper_from(p, theta), nullptr);
  return std::isfinite(v) ? -v : kBadValue;
}

void neg_lml_fdf(const gsl_vector* u, void* params, double* f, gsl_vector* g) {
  const auto& p = *static_cast<const FitProblem*>(params);
  Eigen::VectorXd theta, dtheta, grad;
  to_params(p, u, theta, dtheta);
  double v = profiled_log_marginal_likelihood(*p.x, *p.y, hyper_from(p, theta), &grad);
  if (!std::isfinite(v)) {
    if (f) *f = kBadValue;
    gsl_vector_set_zero(g);
    return;
  }
  if (f) *f = -v;
  for (std::size_t i = 0; i < p.d + 2; ++i)
    gsl_vector_set(g, i, -grad(static_cast<Eigen::Index>(i)) * dtheta(static_cast<Eigen::Index>(i)));
}

void neg_lml_df(const gsl_vector* u, void* params, gsl_vector* g) { neg_lml_fdf(u, params, nullptr, g); }

double logit(double s) { return std::log(s / (1.0 - s)); }

}  // namespace

GpModel GpModel::fit(const Dataset& data, std::uint64_t seed, const FitOptions& options) {
  if (data.size() < 2) throw ValidationError("GP fit needs at least 2 observations");
  if (!data.y.allFinite()) throw ValidationError("GP fit: non-finite objective values");
  data.validate();
  static const bool handler_off = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)handler_off;

  const std::size_t d = data.dim();
  double shift = data.y.mean();
  double sd = std::sqrt((data.y.array() - shift).square().mean());
  double scale = sd > 1e-12 * std::max(1.0, std::abs(shift)) ? sd : 1.0;
  Eigen::VectorXd y_std = (data.y.array() - shift) / scale;

  FitProblem prob{&data.x, &y_std, Eigen::VectorXd(d + 2), Eigen::VectorXd(d + 2), d};
  auto de = static_cast<Eigen::Index>(d);
  prob.lo.head(de).setConstant(std::log(options.min_length_scale));
  prob.hi.head(de).setConstant(std::log(options.max_length_scale));
  prob.lo(de) = std::log(options.min_signal_var);
  prob.hi(de) = std::log(options.max_signal_var);
  prob.lo(de + 1) = std::log(options.min_noise_var);
  prob.hi(de + 1) = std::log(options.max_noise_var);

  gsl_multimin_function_fdf fn;
  fn.n = d + 2;
  fn.f = &neg_lml;
  fn.df = &neg_lml_df;
  fn.fdf = &neg_lml_fdf;
  fn.params = &prob;

  Rng rng(derive_seed(seed, {stream::kGpFit}));
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  gsl_vector* u = gsl_vector_alloc(d + 2);
  gsl_multimin_fdfminimizer* solver = gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, d + 2);

  Eigen::VectorXd best_theta;
  double best_value = std::numeric_limits<double>::infinity();
  for (int start = 0; start < std::max(1, options.restarts); ++start) {
    for (std::size_t i = 0; i < d + 2; ++i) {
      double s;
      if (start == 0) {
        // Deterministic first start: l = 0.5, signal_var = 1, noise_var = 1e-3.
        double target = i < d ? std::log(0.5) : (i == d ? 0.0 : std::log(1e-3));
        auto ii = static_cast<Eigen::Index>(i);
        s = std::clamp((target - prob.lo(ii)) / (prob.hi(ii) - prob.lo(ii)), 0.02, 0.98);
      } else {
        s = unif(rng);
      }
      gsl_vector_set(u, i, logit(s));
    }
    gsl_multimin_fdfminimizer_set(solver, &fn, u, 0.1, 0.1);
    for (int it = 0; it < options.max_iterations; ++it) {
      if (gsl_multimin_fdfminimizer_iterate(solver) != GSL_SUCCESS) break;
      if (gsl_multimin_test_gradient(solver->gradient, 1e-5) == GSL_SUCCESS) break;
    }
    double value = solver->f;
    if (std::isfinite(value) && value < best_value) {
      best_value = value;
      Eigen::VectorXd theta, dtheta;
      to_params(prob, solver->x, theta, dtheta);
      best_theta = theta;
    }
  }
  gsl_multimin_fdfminimizer_free(solver);
  gsl_vector_free(u);
  if (best_theta.size() == 0 || best_value >= kBadValue)
    throw NumericalError("GP fit: covariance singular for every hyperparameter start");

  GpModel m;
  m.hyper_ = hyper_from(prob, best_theta);
  profiled_log_marginal_likelihood(data.x, y_std, m.hyper_, nullptr, &m.hyper_.mean_const);
  m.data_ = data;
  m.y_std_ = y_std;
  m.y_shift_ = shift;
  m.y_scale_ = scale;
  m.factorize();
  return m;
}

double GpModel::log_marginal_likelihood() const {
  const auto n = static_cast<double>(data_.size());
  if (data_.size() == 0) return 0.0;
  Eigen::VectorXd resid = y_std_.array() - hyper_.mean_const;
  return -0.5 * resid.dot(alpha_) - chol_.diagonal().array().log().sum() - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

Posterior GpModel::posterior(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != hyper_.length_scales.size()) throw ValidationError("posterior: dimension mismatch");
  double mean = hyper_.mean_const;
  double var = hyper_.signal_var;
  if (data_.size() > 0) {
    Eigen::VectorXd kx = kernel_matrix(data_.x, x.transpose(), hyper_).col(0);
    mean = static_cast<double>(mean + wide_dot(kx, alpha_wide_));
    Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(kx);
    var -= v.squaredNorm();
  }
  return {mean * y_scale_ + y_shift_, std::max(0.0, var) * y_scale_ * y_scale_};
}

void GpModel::joint(const Eigen::MatrixXd& points, Eigen::VectorXd& mean, Eigen::MatrixXd& cov) const {
  if (points.cols() != hyper_.length_scales.size()) throw ValidationError("joint: dimension mismatch");
  cov = kernel_matrix(points, points, hyper_);
  mean = Eigen::VectorXd::Constant(points.rows(), hyper_.mean_const);
  if (data_.size() > 0) {
    Eigen::MatrixXd kxs = kernel_matrix(data_.x, points, hyper_);  // N x M
    for (Eigen::Index j = 0; j < kxs.cols(); ++j) mean(j) = static_cast<double>(mean(j) + wide_dot(kxs.col(j), alpha_wide_));
    Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(kxs);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(v.transpose(), -1.0);
    cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
  }
  mean = mean.array() * y_scale_ + y_shift_;
  cov *= y_scale_ * y_scale_;
}

Eigen::MatrixXd GpModel::sample_joint(const Eigen::MatrixXd& candidates, std::uint64_t seed, int count) const {
  if (candidates.rows() < 1) throw ValidationError("sample_joint: needs at least one candidate");
  if (count < 1) throw ValidationError("sample_joint: count must be >= 1");
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  joint(candidates, mean, cov);
  const Eigen::Index m = candidates.rows();

  Rng rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(m, count);
  for (Eigen::Index j = 0; j < count; ++j)
    for (Eigen::Index i = 0; i < m; ++i) z(i, j) = normal(rng);

  Eigen::MatrixXd draws = mean.replicate(1, count);
  // Degenerate posterior (every candidate pinned by noise-free data): the draw is the mean.
  if (cov.diagonal().maxCoeff() <= 1e-10 * hyper_.signal_var * y_scale_ * y_scale_) return draws;
  Eigen::MatrixXd lower;
  robust_cholesky(cov, hyper_.signal_var * y_scale_ * y_scale_, lower);
  draws.noalias() += lower.triangularView<Eigen::Lower>() * z;
  return draws;
}

}  // namespace hoturbo
