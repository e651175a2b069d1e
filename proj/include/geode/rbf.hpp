#pragma once

#include <optional>
#include <vector>

#include "geode/geopatch.hpp"

namespace geode::analytics {

struct Sample {
  LatLon position;
  double value = 0.0;
};

/// Gaussian kernel k(a, b) = exp(-d^2 / (2 l^2)), d in degrees with the
/// longitude axis scaled by cos(mean sample latitude).
struct RbfConfig {
  /// Degrees; defaults to the median pairwise sample distance (floor 1e-6).
  std::optional<double> length_scale;
  /// Defaults to 1e-6 x mean kernel diagonal.
  std::optional<double> nugget;
};

/// Fitted field: value(p) = mean + sum_j weight_j * k(p, center_j).
struct RbfModel {
  std::vector<Sample> centers;
  std::vector<double> weights;
  double mean = 0.0;
  double length_scale = 1.0;
  double nugget = 0.0;
  double lon_scale = 1.0;

  double predict(const LatLon& p) const;
};

/// Sorts by position and merges samples sharing a position (values averaged).
/// Throws precondition on non-finite values.
std::vector<Sample> dedupe_samples(std::vector<Sample> samples);

/// Median pairwise distance heuristic, floored at 1e-6 degrees.
double median_length_scale(const std::vector<Sample>& samples, double lon_scale);

RbfModel rbf_fit(const std::vector<Sample>& samples, const RbfConfig& config = {});

/// Fits and evaluates on every cell center of `spec`.
/// Throws empty_input for no samples, numerical_failure when the regularized
/// system cannot be factored.
Grid rbf_fit_predict(const std::vector<Sample>& samples, const GridSpec& spec,
                     const RbfConfig& config = {});

} // namespace geode::analytics
