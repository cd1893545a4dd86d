#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace varest {

enum class KernelKind { Box, TruncatedGaussian };

// A symmetric density kernel supported on [-1, 1] whose values on the
// support are bracketed by [lower_bound, upper_bound], both positive.
struct KernelSpec {
    KernelKind kind = KernelKind::Box;
    double lower_bound = 0.5;
    double upper_bound = 0.5;

    static KernelSpec box();
    static KernelSpec truncated_gaussian();
    static KernelSpec of(KernelKind kind);
};

KernelKind parse_kernel_kind(std::string_view name);
std::string_view to_string(KernelKind kind);

/// Throws InvalidArgument unless 0 < lower_bound <= upper_bound.
void validate(const KernelSpec& spec);

/// K(u); exactly zero for |u| > 1.
double kernel_eval(const KernelSpec& spec, double u) noexcept;

/// K_h(x) = K(x / h) / h.
double scaled_kernel(const KernelSpec& spec, double h, double x);

// Rate-optimal bandwidth rules. The rates fix only the exponents; the
// constants c1, c2 are free and default to 1.
struct BandwidthPlan {
    double alpha = 1.0;
    std::optional<double> beta;
    double constant_c1 = 1.0;
    double constant_c2 = 1.0;
};

void validate(const BandwidthPlan& plan);

/// c1 * n^{-2/(4 alpha + 1)} for alpha < 1/4, c1 / n otherwise.
double bandwidth_homoscedastic(const BandwidthPlan& plan, long long n);

/// (h1, h2) for variance-function estimation; the regime boundary is
/// alpha = beta / (4 beta + 2).
std::pair<double, double> bandwidth_varfn(const BandwidthPlan& plan, long long n);

/// Anisotropic product-kernel bandwidths h_k = c * n^{-2 a / (alpha_k (4 a + d))}
/// where a is the harmonic mean of the alphas.
std::vector<double> bandwidth_multivariate(std::span<const double> alphas, long long n, double c);

/// Exponent e with h_k = c * n^{e}; exposed for the rate bookkeeping.
double multivariate_bandwidth_exponent(std::span<const double> alphas, std::size_t k);

double harmonic_mean_smoothness(std::span<const double> alphas);

}  // namespace varest
