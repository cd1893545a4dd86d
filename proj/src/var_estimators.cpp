#include "varest/var_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

#include "varest/error.hpp"
#include "varest/haar.hpp"
#include "varest/numeric.hpp"

namespace varest {

namespace {

void require_pairs(std::size_t n) {
    if (n < 2) throw Error(ErrorCode::InvalidSampleSize, "need at least two observations, got " + std::to_string(n));
}

void require_bandwidth(double h) {
    if (!(h > 0.0)) throw Error(ErrorCode::NonPositiveBandwidth, "bandwidth must be positive");
}

UStatEstimate finish(const CompensatedSum& num, const CompensatedSum& den, long long pairs) {
    UStatEstimate out;
    out.numerator = num.value();
    out.denominator = den.value();
    out.pairs_in_bandwidth = pairs;
    out.value = out.denominator == 0.0 ? 0.0 : out.numerator / out.denominator;
    return out;
}

std::vector<double> eval_weights(const SampleSet& sample, const FunctionSpec& w) {
    if (sample.d != 1) throw Error(ErrorCode::DimensionMismatch, "weighted functionals need a univariate design");
    std::vector<double> out(sample.n);
    for (std::size_t i = 0; i < sample.n; ++i) {
        out[i] = eval_function(w, sample.x(i));
        if (out[i] < 0.0) throw Error(ErrorCode::NegativeWeight, "weight function is negative at a design point");
    }
    return out;
}

}  // namespace

UStatEstimate ustat_variance(std::span<const double> x, std::span<const double> y, double h,
                             const KernelSpec& kernel) {
    if (x.size() != y.size()) throw Error(ErrorCode::DimensionMismatch, "design and response lengths differ");
    require_pairs(x.size());
    require_bandwidth(h);

    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
    });
    std::vector<double> xs(x.size());
    std::vector<double> ys(y.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        xs[i] = x[order[i]];
        ys[i] = y[order[i]];
    }

    CompensatedSum num;
    CompensatedSum den;
    long long pairs = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = i + 1; j < xs.size(); ++j) {
            const double gap = xs[j] - xs[i];
            if (gap / h > 1.0) break;
            const double w = scaled_kernel(kernel, h, gap);
            if (w == 0.0) continue;
            const double dy = ys[i] - ys[j];
            num += w * dy * dy / 2.0;
            den += w;
            ++pairs;
        }
    }
    return finish(num, den, pairs);
}

UStatEstimate ustat_variance(const SampleSet& sample, double h, const KernelSpec& kernel) {
    if (sample.d != 1) throw Error(ErrorCode::DimensionMismatch, "ustat_variance needs a univariate design");
    return ustat_variance(sample.design, sample.response, h, kernel);
}

UStatEstimate ustat_variance_multivariate(const SampleSet& sample, std::span<const double> h,
                                          const KernelSpec& kernel) {
    const std::size_t d = sample.d;
    if (h.size() != d) {
        throw Error(ErrorCode::DimensionMismatch,
                    "expected " + std::to_string(d) + " bandwidths, got " + std::to_string(h.size()));
    }
    require_pairs(sample.n);
    for (double hk : h) require_bandwidth(hk);

    std::vector<std::size_t> order(sample.n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        for (std::size_t k = 0; k < d; ++k) {
            if (sample.x(a, k) != sample.x(b, k)) return sample.x(a, k) < sample.x(b, k);
        }
        return sample.response[a] < sample.response[b];
    });

    CompensatedSum num;
    CompensatedSum den;
    long long pairs = 0;
    for (std::size_t ii = 0; ii < order.size(); ++ii) {
        const std::size_t i = order[ii];
        for (std::size_t jj = ii + 1; jj < order.size(); ++jj) {
            const std::size_t j = order[jj];
            if ((sample.x(j, 0) - sample.x(i, 0)) / h[0] > 1.0) break;
            double w = 1.0;
            for (std::size_t k = 0; k < d && w != 0.0; ++k) w *= scaled_kernel(kernel, h[k], sample.x(i, k) - sample.x(j, k));
            if (w == 0.0) continue;
            const double dy = sample.response[i] - sample.response[j];
            num += w * dy * dy / 2.0;
            den += w;
            ++pairs;
        }
    }
    return finish(num, den, pairs);
}

double diff_variance_equidistant(std::span<const double> y) {
    require_pairs(y.size());
    CompensatedSum acc;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) {
        const double dy = y[i + 1] - y[i];
        acc += dy * dy;
    }
    return acc.value() / (2.0 * static_cast<double>(y.size() - 1));
}

double additive_gd_variance(std::span<const double> y, int d) {
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "grid dimension must be >= 1");
    const auto m = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(y.size()), 1.0 / d)));
    std::size_t total = 1;
    for (int k = 0; k < d; ++k) total *= m;
    if (total != y.size() || m == 0) {
        throw Error(ErrorCode::DimensionMismatch,
                    std::to_string(y.size()) + " responses do not form an m^" + std::to_string(d) + " grid");
    }
    if (m % 2 != 0) throw Error(ErrorCode::GridNotEven, "grid side " + std::to_string(m) + " is odd");

    // Difference one axis at a time; shape[k] halves when axis k is processed.
    std::vector<std::size_t> shape(static_cast<std::size_t>(d), m);
    std::vector<double> cur(y.begin(), y.end());
    for (int axis = 0; axis < d; ++axis) {
        std::size_t inner = 1;
        for (int k = axis + 1; k < d; ++k) inner *= shape[k];
        std::size_t outer = 1;
        for (int k = 0; k < axis; ++k) outer *= shape[k];
        const std::size_t len = shape[axis];
        std::vector<double> next(outer * (len / 2) * inner);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t a = 0; a < len / 2; ++a) {
                const double* even = &cur[(o * len + 2 * a) * inner];
                const double* odd = even + inner;
                double* out = &next[(o * (len / 2) + a) * inner];
                for (std::size_t t = 0; t < inner; ++t) out[t] = even[t] - odd[t];
            }
        }
        shape[axis] = len / 2;
        cur = std::move(next);
    }

    CompensatedSum mean_acc;
    for (double v : cur) mean_acc += v;
    const double mean = mean_acc.value() / static_cast<double>(cur.size());
    CompensatedSum acc;
    for (double v : cur) acc += (v - mean) * (v - mean);
    return acc.value() / (static_cast<double>(cur.size()) * std::ldexp(1.0, d));
}

double sample_variance(std::span<const double> y) {
    require_pairs(y.size());
    CompensatedSum mean_acc;
    for (double v : y) mean_acc += v;
    const double mean = mean_acc.value() / static_cast<double>(y.size());
    CompensatedSum acc;
    for (double v : y) acc += (v - mean) * (v - mean);
    return acc.value() / static_cast<double>(y.size() - 1);
}

double additive_mom_variance(const SampleSet& sample, std::span<const double> h, const KernelSpec& kernel) {
    if (sample.d < 2) throw Error(ErrorCode::DimensionTooSmall, "additive estimator needs d >= 2");
    if (h.size() != sample.d) throw Error(ErrorCode::DimensionMismatch, "one bandwidth per coordinate required");
    require_pairs(sample.n);
    double total = 0.0;
    for (std::size_t k = 0; k < sample.d; ++k) {
        const auto xk = sample.column(k);
        total += ustat_variance(xk, sample.response, h[k], kernel).value;
    }
    return total - static_cast<double>(sample.d - 1) * sample_variance(sample.response);
}

double additive_mom_variance(const SampleSet& sample, std::span<const BandwidthPlan> plans,
                             const KernelSpec& kernel) {
    if (sample.d < 2) throw Error(ErrorCode::DimensionTooSmall, "additive estimator needs d >= 2");
    if (plans.size() != sample.d) throw Error(ErrorCode::DimensionMismatch, "one plan per coordinate required");
    std::vector<double> h(plans.size());
    for (std::size_t k = 0; k < plans.size(); ++k) {
        h[k] = bandwidth_homoscedastic(plans[k], static_cast<long long>(sample.n));
    }
    return additive_mom_variance(sample, h, kernel);
}

ProjectionConfig ProjectionConfig::from_design(const DesignSpec& design, std::vector<int> levels,
                                               ProjectionBasis basis) {
    ProjectionConfig cfg;
    cfg.resolution_levels = std::move(levels);
    cfg.basis = basis;
    if (const auto* p = std::get_if<design::ProductOfUnivariate>(&design.kind)) {
        cfg.design_cdfs = p->factors;
    } else if (std::holds_alternative<design::UniformInterval>(design.kind) ||
               std::holds_alternative<design::CombSupport>(design.kind)) {
        cfg.design_cdfs = {design};
    } else {
        throw Error(ErrorCode::UnknownDesignCDF, "fixed designs have no design CDF");
    }
    return cfg;
}

void validate(const ProjectionConfig& cfg, std::size_t d) {
    if (cfg.resolution_levels.size() != d || cfg.design_cdfs.size() != d) {
        throw Error(ErrorCode::DimensionMismatch, "projection config needs one level and one CDF per coordinate");
    }
    for (int j : cfg.resolution_levels) {
        if (j < 0 || j > 30) throw Error(ErrorCode::InvalidArgument, "resolution level must lie in [0, 30]");
    }
    for (const auto& f : cfg.design_cdfs) {
        if (!std::holds_alternative<design::UniformInterval>(f.kind) &&
            !std::holds_alternative<design::CombSupport>(f.kind)) {
            throw Error(ErrorCode::UnknownDesignCDF, "projection needs univariate random design laws");
        }
        validate(f);
    }
}

namespace {

std::vector<double> transformed_design(const SampleSet& sample, const ProjectionConfig& cfg) {
    std::vector<double> u(sample.design.size());
    for (std::size_t i = 0; i < sample.n; ++i) {
        for (std::size_t k = 0; k < sample.d; ++k) u[i * sample.d + k] = design_cdf(cfg.design_cdfs[k], sample.x(i, k));
    }
    return u;
}

// sum_{i<j in same group} Y_i Y_j, from per-group totals.
double same_group_pair_sum(const std::vector<long long>& group, std::span<const double> y) {
    std::unordered_map<long long, std::pair<CompensatedSum, CompensatedSum>> totals;
    for (std::size_t i = 0; i < y.size(); ++i) {
        auto& [s, sq] = totals[group[i]];
        s += y[i];
        sq += y[i] * y[i];
    }
    // Merge in key order so the result does not depend on hash layout.
    std::vector<std::pair<long long, double>> parts;
    parts.reserve(totals.size());
    for (const auto& [key, sums] : totals) {
        const double s = sums.first.value();
        parts.emplace_back(key, (s * s - sums.second.value()) / 2.0);
    }
    std::sort(parts.begin(), parts.end());
    CompensatedSum acc;
    for (const auto& p : parts) acc += p.second;
    return acc.value();
}

}  // namespace

// For Haar bases, 1 + psi_J(u)^T psi_J(v) = 2^J 1{u, v in the same dyadic cell},
// so the pair sum reduces to per-cell totals.
double projection_variance(const SampleSet& sample, const ProjectionConfig& cfg) {
    validate(sample);
    require_pairs(sample.n);
    validate(cfg, sample.d);
    const auto u = transformed_design(sample, cfg);
    const std::span<const double> y = sample.response;
    const double all_pairs = same_group_pair_sum(std::vector<long long>(sample.n, 0), y);

    double cross = 0.0;
    if (cfg.basis == ProjectionBasis::Additive) {
        std::vector<long long> cell(sample.n);
        for (std::size_t k = 0; k < sample.d; ++k) {
            const int levels = cfg.resolution_levels[k];
            if (levels == 0) continue;
            for (std::size_t i = 0; i < sample.n; ++i) cell[i] = dyadic_cell(u[i * sample.d + k], levels);
            cross += std::ldexp(same_group_pair_sum(cell, y), levels) - all_pairs;
        }
    } else {
        int total_levels = 0;
        for (int j : cfg.resolution_levels) total_levels += j;
        if (total_levels > 62) throw Error(ErrorCode::InvalidArgument, "tensor basis too large");
        std::vector<long long> box(sample.n, 0);
        for (std::size_t i = 0; i < sample.n; ++i) {
            long long key = 0;
            for (std::size_t k = 0; k < sample.d; ++k) {
                const int levels = cfg.resolution_levels[k];
                key = (key << levels) | dyadic_cell(u[i * sample.d + k], levels);
            }
            box[i] = key;
        }
        cross = std::ldexp(same_group_pair_sum(box, y), total_levels) - all_pairs;
    }
    const double n = static_cast<double>(sample.n);
    return sample_variance(y) - cross / (n * (n - 1.0) / 2.0);
}

double projection_variance_direct(const SampleSet& sample, const ProjectionConfig& cfg) {
    validate(sample);
    require_pairs(sample.n);
    validate(cfg, sample.d);
    const auto u = transformed_design(sample, cfg);

    std::vector<std::vector<std::vector<double>>> psi(sample.n);
    for (std::size_t i = 0; i < sample.n; ++i) {
        for (std::size_t k = 0; k < sample.d; ++k) {
            psi[i].push_back(haar_vector(u[i * sample.d + k], cfg.resolution_levels[k]));
        }
    }
    auto inner = [&](std::size_t i, std::size_t j) {
        if (cfg.basis == ProjectionBasis::Additive) {
            double s = 0.0;
            for (std::size_t k = 0; k < sample.d; ++k) {
                for (std::size_t a = 0; a < psi[i][k].size(); ++a) s += psi[i][k][a] * psi[j][k][a];
            }
            return s;
        }
        double prod = 1.0;
        for (std::size_t k = 0; k < sample.d; ++k) {
            double s = 1.0;
            for (std::size_t a = 0; a < psi[i][k].size(); ++a) s += psi[i][k][a] * psi[j][k][a];
            prod *= s;
        }
        return prod - 1.0;
    };
    CompensatedSum acc;
    for (std::size_t i = 0; i < sample.n; ++i) {
        for (std::size_t j = i + 1; j < sample.n; ++j) acc += sample.response[i] * sample.response[j] * inner(i, j);
    }
    const double n = static_cast<double>(sample.n);
    return sample_variance(sample.response) - acc.value() / (n * (n - 1.0) / 2.0);
}

double quadratic_functional(const SampleSet& sample, const FunctionSpec& w, double sigma2_hat) {
    validate(sample);
    const auto wx = eval_weights(sample, w);
    CompensatedSum yw;
    CompensatedSum ws;
    for (std::size_t i = 0; i < sample.n; ++i) {
        yw += sample.response[i] * sample.response[i] * wx[i];
        ws += wx[i];
    }
    const double n = static_cast<double>(sample.n);
    return yw.value() / n - (ws.value() / n) * sigma2_hat;
}

double conjugate_sigma2(const SampleSet& sample, const FunctionSpec& w, double q_hat) {
    validate(sample);
    const auto wx = eval_weights(sample, w);
    CompensatedSum yw;
    CompensatedSum ws;
    for (std::size_t i = 0; i < sample.n; ++i) {
        yw += sample.response[i] * sample.response[i] * wx[i];
        ws += wx[i];
    }
    const double n = static_cast<double>(sample.n);
    const double mean_w = ws.value() / n;
    if (!(mean_w > 0.0)) return 0.0;
    return std::max((yw.value() / n - q_hat) / mean_w, 0.0);
}

nlohmann::json estimate_record(std::string_view estimator, double value, std::size_t n,
                               const std::vector<double>& bandwidths, long long pairs_in_bandwidth,
                               std::uint64_t seed) {
    return {{"estimator", std::string(estimator)},
            {"value", value},
            {"n", n},
            {"bandwidths", bandwidths},
            {"pairs_in_bandwidth", pairs_in_bandwidth},
            {"seed", seed}};
}

}  // namespace varest
