#include "varest/kernels.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "varest/error.hpp"

namespace varest {

namespace {

// Phi(1) - Phi(-1)
const double kGaussMassOnUnit = std::erf(1.0 / std::numbers::sqrt2);

double std_normal_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

void require_sample_size(long long n) {
    if (n < 2) throw Error(ErrorCode::InvalidSampleSize, "bandwidth rules need n >= 2, got " + std::to_string(n));
}

}  // namespace

KernelSpec KernelSpec::box() { return {KernelKind::Box, 0.5, 0.5}; }

KernelSpec KernelSpec::truncated_gaussian() {
    return {KernelKind::TruncatedGaussian, std_normal_pdf(1.0) / kGaussMassOnUnit,
            std_normal_pdf(0.0) / kGaussMassOnUnit};
}

KernelSpec KernelSpec::of(KernelKind kind) {
    return kind == KernelKind::Box ? box() : truncated_gaussian();
}

KernelKind parse_kernel_kind(std::string_view name) {
    if (name == "box") return KernelKind::Box;
    if (name == "tgauss" || name == "truncated-gaussian") return KernelKind::TruncatedGaussian;
    throw Error(ErrorCode::InvalidArgument, "unknown kernel '" + std::string(name) + "'");
}

std::string_view to_string(KernelKind kind) {
    return kind == KernelKind::Box ? "box" : "tgauss";
}

void validate(const KernelSpec& spec) {
    if (!(spec.lower_bound > 0.0) || !(spec.upper_bound >= spec.lower_bound)) {
        throw Error(ErrorCode::InvalidArgument, "kernel bounds must satisfy 0 < lower <= upper");
    }
}

double kernel_eval(const KernelSpec& spec, double u) noexcept {
    if (!(std::abs(u) <= 1.0)) return 0.0;
    switch (spec.kind) {
        case KernelKind::Box: return 0.5;
        case KernelKind::TruncatedGaussian: return std_normal_pdf(u) / kGaussMassOnUnit;
    }
    return 0.0;
}

double scaled_kernel(const KernelSpec& spec, double h, double x) {
    if (!(h > 0.0)) throw Error(ErrorCode::NonPositiveBandwidth, "bandwidth must be positive");
    return kernel_eval(spec, x / h) / h;
}

void validate(const BandwidthPlan& plan) {
    if (!(plan.alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
    if (plan.beta && !(*plan.beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be positive");
    if (!(plan.constant_c1 > 0.0) || !(plan.constant_c2 > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "bandwidth constants must be positive");
    }
}

double bandwidth_homoscedastic(const BandwidthPlan& plan, long long n) {
    validate(plan);
    require_sample_size(n);
    const double nn = static_cast<double>(n);
    if (plan.alpha < 0.25) return plan.constant_c1 * std::pow(nn, -2.0 / (4.0 * plan.alpha + 1.0));
    return plan.constant_c1 / nn;
}

std::pair<double, double> bandwidth_varfn(const BandwidthPlan& plan, long long n) {
    if (!plan.beta) throw Error(ErrorCode::MissingBeta, "variance-function bandwidths need beta");
    validate(plan);
    require_sample_size(n);
    const double a = plan.alpha;
    const double b = *plan.beta;
    const double nn = static_cast<double>(n);
    if (a < b / (4.0 * b + 2.0)) {
        const double denom = 4.0 * a * b + b + 2.0 * a;
        return {plan.constant_c1 * std::pow(nn, -2.0 * b / denom),
                plan.constant_c2 * std::pow(nn, -4.0 * a / denom)};
    }
    return {plan.constant_c1 / nn, plan.constant_c2 * std::pow(nn, -1.0 / (2.0 * b + 1.0))};
}

double harmonic_mean_smoothness(std::span<const double> alphas) {
    if (alphas.empty()) throw Error(ErrorCode::DimensionTooSmall, "need at least one smoothness index");
    double inv = 0.0;
    for (double a : alphas) {
        if (!(a > 0.0 && a <= 1.0)) {
            throw Error(ErrorCode::SmoothnessOutOfRange, "smoothness indices must lie in (0, 1]");
        }
        inv += 1.0 / a;
    }
    return static_cast<double>(alphas.size()) / inv;
}

double multivariate_bandwidth_exponent(std::span<const double> alphas, std::size_t k) {
    const double eff = harmonic_mean_smoothness(alphas);
    const double d = static_cast<double>(alphas.size());
    return -2.0 * eff / (alphas[k] * (4.0 * eff + d));
}

std::vector<double> bandwidth_multivariate(std::span<const double> alphas, long long n, double c) {
    require_sample_size(n);
    if (!(c > 0.0)) throw Error(ErrorCode::InvalidArgument, "bandwidth constant must be positive");
    std::vector<double> h(alphas.size());
    for (std::size_t k = 0; k < alphas.size(); ++k) {
        h[k] = c * std::pow(static_cast<double>(n), multivariate_bandwidth_exponent(alphas, k));
    }
    return h;
}

}  // namespace varest
