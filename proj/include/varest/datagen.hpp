#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "varest/lb_tools.hpp"

namespace varest {

struct FunctionSpec;

namespace fn {

struct Constant {
    double value = 0.0;
};

// c0 + c1 x + c2 x^2 + ...
struct Polynomial {
    std::vector<double> coefficients;
};

// amplitude * sin(2 pi frequency x + phase)
struct Sinusoid {
    double amplitude = 1.0;
    double frequency = 1.0;
    double phase = 0.0;
};

// height on [center - width, center + width], zero outside
// [center - 2 width, center + 2 width], C-infinity in between.
struct SmoothBump {
    double center = 0.0;
    double width = 1.0;
    double height = 1.0;
};

// N = heights.size() trapezoids on cells of length 6 * cell_width covering
// [0, 1]; cell i is zero at its endpoints and equals amplitude * heights[i]
// on its middle four cell widths.
struct TrapezoidComb {
    double cell_width = 0.0;
    double amplitude = 0.0;
    std::vector<double> heights;
};

// Trapezoids confined to [x_star - h2, x_star + h2]: cells of length 4 h1,
// upper bases of length 2 h1, plateau value h1^alpha * heights[i].
struct LocalTrapezoid {
    double x_star = 0.5;
    double h1 = 0.0;
    double h2 = 0.0;
    double alpha = 0.0;
    std::vector<double> heights;
};

// Piecewise-linear interpolation of (grid, values); grid strictly increasing.
struct Tabulated {
    std::vector<double> grid;
    std::vector<double> values;
};

// Pointwise sum of the terms at the same argument.
struct Sum {
    std::vector<FunctionSpec> terms;
};

// f(x) = sum_k components[k](x_k) on a d-variate argument.
struct Additive {
    std::vector<FunctionSpec> components;
};

}  // namespace fn

struct FunctionSpec {
    using Kind = std::variant<fn::Constant, fn::Polynomial, fn::Sinusoid, fn::SmoothBump, fn::TrapezoidComb,
                              fn::LocalTrapezoid, fn::Tabulated, fn::Sum, fn::Additive>;
    Kind kind = fn::Constant{};

    static FunctionSpec constant(double value) { return {fn::Constant{value}}; }
};

/// Throws InvalidArgument when the trapezoid integrality conditions or the
/// tabulation shape do not hold.
void validate(const FunctionSpec& spec);

double eval_function(const FunctionSpec& spec, double x);
double eval_function(const FunctionSpec& spec, std::span<const double> x);

/// Interval on which the univariate spec is defined for diagnostics.
std::pair<double, double> natural_domain(const FunctionSpec& spec);

/// Mollified indicator: 1 on [-1, 1], 0 outside (-2, 2).
double unit_bump(double u);

namespace design {

struct UniformInterval {
    double a = 0.0;
    double b = 1.0;
};

// Uniform on a union of disjoint closed intervals.
struct CombSupport {
    std::vector<std::pair<double, double>> intervals;
};

// (i_1 / m, ..., i_d / m), i_k in 1..m, m^d = n; last coordinate varies fastest.
struct GridGD {
    int d = 2;
};

// (i / n, ..., i / n), i in 1..n.
struct DiagonalDD {
    int d = 2;
};

}  // namespace design

struct DesignSpec;

namespace design {
struct ProductOfUnivariate {
    std::vector<DesignSpec> factors;
};
}  // namespace design

struct DesignSpec {
    using Kind = std::variant<design::UniformInterval, design::CombSupport, design::GridGD, design::DiagonalDD,
                              design::ProductOfUnivariate>;
    Kind kind = design::UniformInterval{};
};

void validate(const DesignSpec& spec);
int dimension(const DesignSpec& spec);

/// Exact membership in the support of a univariate design.
bool in_support(const DesignSpec& spec, double x);

/// CDF of a univariate random design; UnknownDesignCDF for fixed designs.
double design_cdf(const DesignSpec& spec, double x);

/// Independent draw from a univariate random design.
double draw_univariate(const DesignSpec& spec, Rng& rng);

enum class NoiseKind { Gaussian, MomentMatched, Rademacher };

// Standardized noise: mean 0, variance 1.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::Gaussian;
    DiscreteDistribution matched;  // used when kind == MomentMatched

    static NoiseSpec gaussian() { return {}; }
};

void validate(const NoiseSpec& spec);
double fourth_moment(const NoiseSpec& spec);
double draw_noise(const NoiseSpec& spec, Rng& rng);

// n observations of a d-variate design with responses. Design is row-major.
struct SampleSet {
    std::size_t n = 0;
    std::size_t d = 1;
    std::vector<double> design;
    std::vector<double> response;
    std::uint64_t seed = 0;
    nlohmann::json meta = nlohmann::json::object();

    double x(std::size_t i, std::size_t k = 0) const { return design[i * d + k]; }
    std::span<const double> row(std::size_t i) const { return {design.data() + i * d, d}; }
    std::vector<double> column(std::size_t k) const;

    /// Univariate sample from paired vectors.
    static SampleSet univariate(std::vector<double> x, std::vector<double> y, std::uint64_t seed = 0);
    /// d-variate sample from a row-major design.
    static SampleSet multivariate(std::size_t d, std::vector<double> design, std::vector<double> y,
                                  std::uint64_t seed = 0);
};

void validate(const SampleSet& sample);

/// Y_i = f(X_i) + V(X_i)^{1/2} eps_i, deterministic in seed.
SampleSet generate(const DesignSpec& design, const FunctionSpec& mean, const FunctionSpec& variance,
                   const NoiseSpec& noise, std::size_t n, std::uint64_t seed);

/// Design rows only.
std::vector<double> draw_design(const DesignSpec& design, std::size_t n, Rng& rng);

struct HomoscedasticHardInstance {
    FunctionSpec mean;        // trapezoid comb under the alternative
    DesignSpec design;        // uniform on the union of upper bases
    double sigma0sq = 0.0;    // null: 1 + theta^2
    double sigma1sq = 1.0;    // alternative
    double h_requested = 0.0;
    double h_realized = 0.0;
    int cells = 0;            // N = 1 / (6 h)
    int q = 0;                // matched moments
    DiscreteDistribution heights_law;
};

/// Two-point construction for constant-variance lower bounds; 0 < alpha < 1/4.
HomoscedasticHardInstance hard_instance_homoscedastic(double alpha, long long n, double c, std::uint64_t seed);

struct VarFnHardInstance {
    FunctionSpec mean;
    FunctionSpec var0;
    FunctionSpec var1;
    DesignSpec design;
    double h1_requested = 0.0;
    double h2_requested = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;
    int half_count = 0;  // M = h2 / (4 h1) - 1/2
    int cells = 0;       // N = 2M + 1
    int q = 0;
    DiscreteDistribution heights_law;
};

/// Localized construction around x_star; requires alpha < beta / (4 beta + 2).
VarFnHardInstance hard_instance_varfn(double alpha, double beta, double x_star, long long n, double c,
                                      std::uint64_t seed);

/// max over grid pairs of |f(x) - f(y)| / |x - y|^alpha plus max |f|, on the
/// natural domain of a univariate spec.
double holder_seminorm(const FunctionSpec& spec, double alpha, int grid_size);

}  // namespace varest
