#pragma once

#include <Eigen/Core>
#include <Eigen/Cholesky>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace hoturbo {

/// Observations on the normalized decision space.
struct Dataset {
  Eigen::MatrixXd x;  // N x d, entries in [0,1]
  Eigen::VectorXd y;  // N

  Dataset() = default;
  explicit Dataset(std::size_t d) : x(0, static_cast<Eigen::Index>(d)) {}
  Dataset(Eigen::MatrixXd x_, Eigen::VectorXd y_) : x(std::move(x_)), y(std::move(y_)) {}

  std::size_t size() const { return static_cast<std::size_t>(y.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(x.cols()); }
  void append(const Eigen::Ref<const Eigen::VectorXd>& point, double value);
  /// Last `n` rows (all rows when n >= size()).
  Dataset tail(std::size_t n) const;
  void validate() const;
};

/// Dataset CSV: header x0..x{d-1},y, one row per observation.
/// `preamble`, when given, is written as a leading '#' comment line.
void save_dataset_csv(const std::filesystem::path& path, const Dataset& data, std::string_view preamble = {});
Dataset load_dataset_csv(const std::filesystem::path& path);

struct GpHyper {
  Eigen::VectorXd length_scales;
  double signal_var = 1.0;
  double noise_var = 1e-6;
  double mean_const = 0.0;

  static GpHyper isotropic(std::size_t d, double length_scale, double signal_var, double noise_var,
                           double mean_const = 0.0);
  void validate() const;
};

/// Matern-5/2 with per-dimension length scales.
double kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
              const GpHyper& hyper);
/// Cross-covariance matrix k(A_i, B_j), without the noise term.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const GpHyper& hyper);

struct FitOptions {
  int restarts = 5;
  int max_iterations = 100;
  double min_length_scale = 0.005;
  double max_length_scale = 2.0;
  double min_signal_var = 0.05;
  double max_signal_var = 20.0;
  double min_noise_var = 1e-8;
  double max_noise_var = 1.0;
};

struct Posterior {
  double mean = 0.0;
  double var = 0.0;
};

/// Exact GP conditioned on a dataset. Immutable; safe to query concurrently.
class GpModel {
 public:
  /// Conditions on `data` with fixed hyperparameters, y in raw units.
  static GpModel condition(GpHyper hyper, Dataset data);

  /// Maximizes the log marginal likelihood (multi-start, seeded). y is
  /// standardized internally; hyper() is then in standardized units.
  static GpModel fit(const Dataset& data, std::uint64_t seed, const FitOptions& options = {});

  Posterior posterior(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// Posterior mean vector and covariance over a set of points (raw units).
  void joint(const Eigen::MatrixXd& points, Eigen::VectorXd& mean, Eigen::MatrixXd& cov) const;
  /// `count` independent draws from the joint posterior over the rows of
  /// `candidates`, as columns of a M x count matrix.
  Eigen::MatrixXd sample_joint(const Eigen::MatrixXd& candidates, std::uint64_t seed, int count = 1) const;

  const GpHyper& hyper() const { return hyper_; }
  const Dataset& data() const { return data_; }
  /// Lower Cholesky factor of K(X) + (noise_var + jitter) I.
  const Eigen::MatrixXd& chol() const { return chol_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  double jitter() const { return jitter_; }
  double y_shift() const { return y_shift_; }
  double y_scale() const { return y_scale_; }
  /// Log marginal likelihood of the (standardized) data under hyper().
  double log_marginal_likelihood() const;

 private:
  GpModel() = default;
  void factorize();

  GpHyper hyper_;
  Dataset data_;
  Eigen::VectorXd y_std_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  std::vector<long double> alpha_wide_;  // refined weights used for the mean
  double jitter_ = 0.0;
  double y_shift_ = 0.0;
  double y_scale_ = 1.0;
};

/// Log marginal likelihood with the constant mean profiled out, and its
/// gradient w.r.t. (log length_scales..., log signal_var, log noise_var).
/// Returns -inf when the covariance cannot be factorized.
double profiled_log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpHyper& hyper,
                                        Eigen::VectorXd* grad, double* mean_out = nullptr);

/// Cholesky with jitter escalation: first without jitter, then
/// 1e-6 * scale, x10 up to 1e-2 * scale. Returns the jitter used; throws
/// NumericalError if every attempt fails.
double robust_cholesky(const Eigen::MatrixXd& a, double scale, Eigen::MatrixXd& lower);

}  // namespace hoturbo
