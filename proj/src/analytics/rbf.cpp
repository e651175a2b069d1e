#include "geode/rbf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

namespace geode::analytics {

namespace {

double sq_distance(const LatLon& a, const LatLon& b, double lon_scale)
{
  const double dlat = a.lat() - b.lat();
  const double dlon = (a.lon() - b.lon()) * lon_scale;
  return dlat * dlat + dlon * dlon;
}

double mean_lat_scale(const std::vector<Sample>& samples)
{
  double sum = 0.0;
  for (const auto& s : samples)
    sum += s.position.lat();
  const double mean = sum / static_cast<double>(samples.size());
  return std::cos(mean * std::numbers::pi / 180.0);
}

} // namespace

double RbfModel::predict(const LatLon& p) const
{
  const double inv = 1.0 / (2.0 * length_scale * length_scale);
  double v = mean;
  for (std::size_t j = 0; j < centers.size(); ++j)
    v += weights[j] * std::exp(-sq_distance(p, centers[j].position, lon_scale) * inv);
  return v;
}

std::vector<Sample> dedupe_samples(std::vector<Sample> samples)
{
  for (const auto& s : samples)
    if (!std::isfinite(s.value))
      throw Error(Errc::precondition, "sample value is not finite");
  std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) {
    if (a.position.lat() != b.position.lat())
      return a.position.lat() < b.position.lat();
    if (a.position.lon() != b.position.lon())
      return a.position.lon() < b.position.lon();
    return a.value < b.value;
  });
  std::vector<Sample> out;
  std::size_t i = 0;
  while (i < samples.size()) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < samples.size() && samples[j].position == samples[i].position) {
      sum += samples[j].value;
      ++j;
    }
    const double count = static_cast<double>(j - i);
    // Identical values must survive averaging bit-for-bit.
    const bool uniform = std::all_of(samples.begin() + static_cast<long>(i),
                                     samples.begin() + static_cast<long>(j),
                                     [&](const Sample& s) { return s.value == samples[i].value; });
    out.push_back({samples[i].position, uniform ? samples[i].value : sum / count});
    i = j;
  }
  return out;
}

double median_length_scale(const std::vector<Sample>& samples, double lon_scale)
{
  std::vector<double> d;
  d.reserve(samples.size() * (samples.size() - 1) / 2);
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j)
      d.push_back(std::sqrt(sq_distance(samples[i].position, samples[j].position, lon_scale)));
  if (d.empty())
    return 1.0;
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  const double median = n % 2 == 1 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
  return std::max(median, 1e-6);
}

RbfModel rbf_fit(const std::vector<Sample>& samples, const RbfConfig& config)
{
  if (samples.empty())
    throw Error(Errc::empty_input, "RBF fit needs at least one sample");
  if (config.length_scale && !(*config.length_scale > 0.0))
    throw Error(Errc::precondition, "RBF length scale must be positive");
  if (config.nugget && !(*config.nugget >= 0.0))
    throw Error(Errc::precondition, "RBF nugget must be non-negative");

  RbfModel model;
  model.centers = dedupe_samples(samples);
  const auto& c = model.centers;
  const std::size_t n = c.size();
  model.lon_scale = mean_lat_scale(c);

  double sum = 0.0;
  for (const auto& s : c)
    sum += s.value;
  model.mean = sum / static_cast<double>(n);
  model.length_scale = config.length_scale ? *config.length_scale : median_length_scale(c, model.lon_scale);
  // Gaussian kernel diagonal is exactly 1.
  model.nugget = config.nugget ? *config.nugget : 1e-6;
  model.weights.assign(n, 0.0);
  if (n == 1)
    return model;

  Eigen::MatrixXd k(n, n);
  Eigen::VectorXd y(n);
  const double inv = 1.0 / (2.0 * model.length_scale * model.length_scale);
  for (std::size_t i = 0; i < n; ++i) {
    y(static_cast<Eigen::Index>(i)) = c[i].value - model.mean;
    for (std::size_t j = 0; j < n; ++j)
      k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::exp(-sq_distance(c[i].position, c[j].position, model.lon_scale) * inv);
  }
  k.diagonal().array() += model.nugget;

  Eigen::VectorXd w;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() == Eigen::Success) {
    w = llt.solve(y);
  } else {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(k);
    const double rcond = ldlt.rcond();
    if (ldlt.info() != Eigen::Success || !(rcond > 1e-15)) {
      std::ostringstream os;
      os << "kernel system is singular (reciprocal condition estimate " << rcond << ")";
      throw Error(Errc::numerical_failure, os.str());
    }
    w = ldlt.solve(y);
  }
  if (!w.allFinite())
    throw Error(Errc::numerical_failure, "kernel solve produced non-finite weights");
  for (std::size_t i = 0; i < n; ++i)
    model.weights[i] = w(static_cast<Eigen::Index>(i));
  return model;
}

Grid rbf_fit_predict(const std::vector<Sample>& samples, const GridSpec& spec,
                     const RbfConfig& config)
{
  const RbfModel model = rbf_fit(samples, config);
  Grid grid(spec.rows, spec.cols);
  for (std::size_t r = 0; r < spec.rows; ++r)
    for (std::size_t col = 0; col < spec.cols; ++col)
      grid.at(r, col) = model.centers.size() == 1 ? model.mean
                                                  : model.predict(cell_to_latlon(spec, r, col));
  return grid;
}

} // namespace geode::analytics
