#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "varest/rng.hpp"

namespace varest {

// Finitely supported law; atoms are stored in increasing order.
struct DiscreteDistribution {
    std::vector<double> atoms;
    std::vector<double> probs;

    /// max |atom|
    double range() const noexcept;
};

/// Throws InvalidArgument unless probabilities are nonnegative, sum to one
/// (1e-12) and the law is symmetric about zero.
void validate(const DiscreteDistribution& dist);

double sample(const DiscreteDistribution& dist, Rng& rng);

/// Symmetric compactly supported law sharing the first q moments of N(0, 1),
/// realized as the (q+1)/2-point Gauss-Hermite rule. q must be odd.
DiscreteDistribution moment_matched_distribution(int q);

/// Smallest odd q with q > threshold.
int smallest_odd_above(double threshold);

double dist_moment(const DiscreteDistribution& dist, int j);

/// E Z^j for Z ~ N(0, 1): 0 for odd j, (j-1)!! for even j.
double normal_moment(int j);

/// (2k-1)!! as a double; exact for k <= 40 up to rounding of the product.
double double_factorial_odd(int k);

/// Probabilists' Hermite polynomial He_k(t).
double hermite(int k, double t);

/// m-point probabilists' Gauss-Hermite rule (weights sum to one).
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
QuadratureRule gauss_hermite_rule(int m);

struct TvBounds {
    double lower = 0.0;
    double upper = 0.0;
    double rho = 0.0;
};

/// Sandwich for TV(N(0, S1), N(0, S2)) via rho = min{1, ||S1^{-1} S2 - I||_F}.
TvBounds gaussian_tv_bound(const Eigen::MatrixXd& sigma1, const Eigen::MatrixXd& sigma2);

struct MonteCarloValue {
    double value = 0.0;
    double se = 0.0;
};

using Density = std::function<double(std::span<const double>)>;
using Sampler = std::function<void(Rng&, std::span<double>)>;

/// (1/m) sum max{0, 1 - p(Z)/q(Z)} with Z ~ q, plus its standard error.
MonteCarloValue tv_monte_carlo(const Density& density_p, const Density& density_q, const Sampler& sampler_q,
                               std::size_t dim, std::size_t m, std::uint64_t seed);

/// Zero-mean Gaussian log density, sampler, and the helpers above packaged
/// for the TV oracle.
class GaussianLaw {
public:
    explicit GaussianLaw(const Eigen::MatrixXd& covariance);

    double log_density(std::span<const double> y) const;
    void draw(Rng& rng, std::span<double> out) const;
    std::size_t dim() const noexcept { return static_cast<std::size_t>(chol_.rows()); }

private:
    Eigen::MatrixXd chol_;
    double log_norm_ = 0.0;
};

/// Empirical law of the maximal bin count when m balls are thrown uniformly
/// into M bins; keys are f_max values.
std::map<int, double> multinomial_max_occupancy(long long m_balls, long long m_bins, long long trials,
                                                std::uint64_t seed);

/// m^r / (r! M^{r-1})
double kolchin_lambda(double m, double big_m, int r);

/// chi^2 divergence between d-fold location mixtures of N(theta v, sigma^2)
/// with v ~ g and v ~ N(0, 1) (the latter in the denominator), by tensor
/// Gauss-Hermite quadrature. d <= 3.
double mixture_chi2(double theta, int d, const DiscreteDistribution& g, double sigma, int quad_points);

/// sum_k (theta sqrt(d) / sigma)^{4k} delta_{2k}^2 / (2k)!, delta_{2k} the
/// 2k-th moment gap between g and N(0, 1).
double mixture_chi2_series_bound(double theta, int d, const DiscreteDistribution& g, double sigma);

}  // namespace varest
