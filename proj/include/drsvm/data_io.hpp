#ifndef DRSVM_DATA_IO_HPP
#define DRSVM_DATA_IO_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "drsvm/core.hpp"

namespace drsvm {

/// One labelled record; features are (1-based index, value), strictly
/// increasing in index.
struct Sample {
  std::vector<std::pair<std::size_t, double>> features;
  int label = 1;

  bool operator==(const Sample&) const = default;
};

struct LibsvmFile {
  std::vector<Sample> samples;
  std::size_t dimension = 0;  ///< largest index seen
};

/// Signed samples z_i = y_i x_i stored densely, one row per sample.
struct Dataset {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> z;

  std::size_t n() const { return static_cast<std::size_t>(z.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(z.cols()); }
};

LibsvmFile parse_libsvm(std::istream& in);
LibsvmFile parse_libsvm(std::string_view text);
LibsvmFile load_libsvm(const std::string& path);

/// Densifies and signs.  Throws dimension_error if an index exceeds d.
Dataset signed_samples(const std::vector<Sample>& samples, std::size_t d);

/// Parses a file and builds the dataset with d = max(declared_d, max index).
Dataset load_dataset(const std::string& path, std::size_t declared_d = 0);

void write_libsvm(std::ostream& out, const std::vector<Sample>& samples);

struct SyntheticData {
  std::vector<Sample> samples;  ///< all d features written per record
  Dataset data;
  Eigen::VectorXd w_star;
};

/// w* and x_i ~ N(0, I), y_i = sign(<w*, x_i> + noise_sigma * xi_i) with
/// sign(0) = +1.  Draw order: w*, then per sample x_i followed by xi_i.
SyntheticData gen_synthetic(std::size_t n, std::size_t d, double noise_sigma, std::uint64_t seed);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

}  // namespace drsvm

#endif  // DRSVM_DATA_IO_HPP
