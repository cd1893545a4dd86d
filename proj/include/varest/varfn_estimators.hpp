#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "varest/datagen.hpp"
#include "varest/kernels.hpp"

namespace varest {

/// Determinant by cofactor (Laplace) expansion; size <= 10.
double cofactor_determinant(const Eigen::MatrixXd& m);

/// Transposed cofactor matrix, m * adj(m) = det(m) I. adj of a 1x1 matrix is [1].
Eigen::MatrixXd adjugate(const Eigen::MatrixXd& m);

/// Largest integer strictly below beta.
int polynomial_order(double beta);

struct LocalPolyConfig {
    double beta = 1.0;
    int ell = 0;
    double h1 = 0.0;
    double h2 = 0.0;
    std::optional<double> tau;  // ridge; 1/n when unset
    KernelSpec kernel = KernelSpec::box();

    static LocalPolyConfig for_smoothness(double beta, double h1, double h2, KernelSpec kernel = KernelSpec::box());
    double ridge(std::size_t n) const;
};

void validate(const LocalPolyConfig& cfg);

struct PairWeight {
    std::size_t i = 0;
    std::size_t j = 0;
    double raw = 0.0;     // w_ij
    double ridged = 0.0;  // w_ij / (|B| + tau)
    double offset = 0.0;  // (X_i + X_j)/2 - x*
};

struct LPWeights {
    std::vector<PairWeight> weights;  // pairs with nonzero kernel weight only
    double detB = 0.0;
    Eigen::MatrixXd B;
    double tau = 0.0;
};

LPWeights lp_weights(const SampleSet& sample, double x_star, const LocalPolyConfig& cfg);

/// sum_{i<j} w~_ij (Y_i - Y_j)^2 / 2
double local_poly_varfn(const SampleSet& sample, double x_star, const LocalPolyConfig& cfg);

/// Kernel-weighted average of (Y_i - Y_j)^2 / 2 over pairs; 0/0 -> 0.
double nw_varfn(const SampleSet& sample, double x_star, double h1, double h2, const KernelSpec& kernel);

double loss_pointwise(double v_hat, double v_true);

/// Monte Carlo estimate of the integrated squared error over m fresh draws
/// from the design law.
double loss_integrated(const std::function<double(double)>& v_hat, const FunctionSpec& v_true,
                       const DesignSpec& design, std::size_t m, std::uint64_t seed);

/// Local polynomial estimates on a grid of target points.
std::vector<double> estimate_curve(const SampleSet& sample, const std::vector<double>& grid,
                                   const LocalPolyConfig& cfg);

/// CSV `x,v_hat`.
std::string curve_csv(const std::vector<double>& grid, const std::vector<double>& values);

nlohmann::json curve_metadata(const LocalPolyConfig& cfg, std::size_t n, std::uint64_t seed);

}  // namespace varest
