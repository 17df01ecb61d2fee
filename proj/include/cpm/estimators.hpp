#pragma once
// Likelihood estimators driven entirely by an auxiliary block of standard
// normals: per-observation importance sampling for random-effects models and
// a particle filter with sorted systematic resampling for state-space models.
#include <stdexcept>
#include <vector>

#include "cpm/aux.hpp"
#include "cpm/hilbert.hpp"
#include "cpm/models.hpp"

namespace cpm {

struct LoglikEstimate {
  double value = 0.0;
  std::vector<double> per_obs;
};

// Every weight at observation t underflowed (or was invalid); samplers treat
// the proposal as rejected and leave the chain state untouched.
class degenerate_estimate : public std::runtime_error {
 public:
  explicit degenerate_estimate(std::size_t t);
  std::size_t t() const { return t_; }

 private:
  std::size_t t_;
};

struct ISEstimator {
  std::size_t N = 1;
  AuxLayout layout(const REModel& model, std::size_t T) const {
    return {T, N, model.coords_per_obs(), false};
  }
};

LoglikEstimate is_loglik(const REModel& model, const Eigen::VectorXd& theta,
                         const Eigen::MatrixXd& y, const AuxBlock& u);

// Systematic resampling against weights given in sorted order. u_normal is
// mapped through the normal CDF to the common uniform offset. anc[j] is the
// sorted-order index of the ancestor for output slot j; anc is nondecreasing.
void sorted_systematic_resample(const double* lw_sorted, std::size_t N, double u_normal,
                                std::vector<std::size_t>& anc);

struct PFEstimator {
  std::size_t N = 1;
  HilbertMap map;

  AuxLayout layout(const StateSpaceModel& model, std::size_t T) const {
    return {T, N, model.coords_per_particle(), true};
  }

  // Calibrates the sorting map from unconditional model draws: per-axis
  // center = median, spread = 3 * interquartile range.
  static PFEstimator with_pilot(const StateSpaceModel& model, const Eigen::VectorXd& theta,
                                std::size_t N, const RngStream& pilot_stream,
                                std::size_t n_pilot = 512, int order = 16);
};

LoglikEstimate pf_loglik(const StateSpaceModel& model, const PFEstimator& est,
                         const Eigen::VectorXd& theta, const Eigen::MatrixXd& y,
                         const AuxBlock& u);

}  // namespace cpm
