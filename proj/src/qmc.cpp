#include "hoturbo/qmc.hpp"

#include <boost/random/sobol.hpp>
#include <random>
#include <vector>

#include "hoturbo/error.hpp"
#include "hoturbo/rng.hpp"

namespace hoturbo {

Eigen::MatrixXd sobol_points(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (d == 0) throw ValidationError("sobol_points: dimension must be >= 1");
  boost::random::sobol_engine<std::uint32_t, 32> engine(d);
  Rng rng(seed);
  std::vector<std::uint32_t> shift(d);
  for (auto& s : shift) s = static_cast<std::uint32_t>(rng() >> 32);

  constexpr double kScale = 1.0 / 4294967296.0;  // 2^-32
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (static_cast<double>(engine() ^ shift[j]) + 0.5) * kScale;
  return pts;
}

}  // namespace hoturbo
