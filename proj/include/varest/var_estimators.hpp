#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "varest/datagen.hpp"
#include "varest/kernels.hpp"

namespace varest {

// ratio numerator / denominator of kernel-weighted pair sums, 0/0 -> 0
struct UStatEstimate {
    double value = 0.0;
    double numerator = 0.0;
    double denominator = 0.0;
    long long pairs_in_bandwidth = 0;
};

/// sum_{i<j} K_h(X_i - X_j)(Y_i - Y_j)^2 / 2 over sum_{i<j} K_h(X_i - X_j).
/// Pairs are visited by a sweep over the design sorted by (x, y), so only
/// pairs inside the kernel support are touched.
UStatEstimate ustat_variance(std::span<const double> x, std::span<const double> y, double h,
                             const KernelSpec& kernel);
UStatEstimate ustat_variance(const SampleSet& sample, double h, const KernelSpec& kernel);

/// Product-kernel version; one bandwidth per coordinate.
UStatEstimate ustat_variance_multivariate(const SampleSet& sample, std::span<const double> h,
                                          const KernelSpec& kernel);

/// sum (Y_{i+1} - Y_i)^2 / (2 (n - 1)) for responses on an ordered fixed design.
double diff_variance_equidistant(std::span<const double> y);

/// Responses on the m^d grid (row-major, last coordinate fastest). Disjoint
/// pairs are differenced along every axis, which annihilates any additive
/// mean; the result is the sample variance of the differenced array over 2^d.
double additive_gd_variance(std::span<const double> y, int d);

/// sum_l ustat(X_l, Y) - (d - 1) * sample_variance(Y).
double additive_mom_variance(const SampleSet& sample, std::span<const double> h, const KernelSpec& kernel);
double additive_mom_variance(const SampleSet& sample, std::span<const BandwidthPlan> plans,
                             const KernelSpec& kernel);

/// sum (y - ybar)^2 / (n - 1)
double sample_variance(std::span<const double> y);

enum class ProjectionBasis { Additive, Tensor };

struct ProjectionConfig {
    std::vector<int> resolution_levels;  // J_k per design coordinate
    std::vector<DesignSpec> design_cdfs;  // univariate design law per coordinate
    ProjectionBasis basis = ProjectionBasis::Additive;

    /// CDFs from a univariate or product design; UnknownDesignCDF for fixed designs.
    static ProjectionConfig from_design(const DesignSpec& design, std::vector<int> levels,
                                        ProjectionBasis basis = ProjectionBasis::Additive);
};

void validate(const ProjectionConfig& cfg, std::size_t d);

/// Sample variance minus the U-statistic estimate of ||projection of f||^2 on
/// the Haar basis of the transformed design U = F(X).
double projection_variance(const SampleSet& sample, const ProjectionConfig& cfg);

/// Brute-force pair loop over explicit Haar vectors; for cross-checks.
double projection_variance_direct(const SampleSet& sample, const ProjectionConfig& cfg);

/// (1/n) sum Y^2 w(X) - ((1/n) sum w(X)) * sigma2_hat
double quadratic_functional(const SampleSet& sample, const FunctionSpec& w, double sigma2_hat);

/// max{[(1/n) sum Y^2 w(X) - q_hat] / [(1/n) sum w(X)], 0}, zero when sum w = 0.
double conjugate_sigma2(const SampleSet& sample, const FunctionSpec& w, double q_hat);

nlohmann::json estimate_record(std::string_view estimator, double value, std::size_t n,
                               const std::vector<double>& bandwidths, long long pairs_in_bandwidth,
                               std::uint64_t seed);

}  // namespace varest
