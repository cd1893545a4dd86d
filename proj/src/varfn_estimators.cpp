#include "varest/varfn_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "varest/error.hpp"
#include "varest/numeric.hpp"
#include "varest/rng.hpp"
#include "varest/serialize.hpp"

namespace varest {

namespace {

constexpr Eigen::Index kMaxCofactorSize = 10;

// Laplace expansion along the first remaining row over the listed columns.
double laplace(const Eigen::MatrixXd& m, Eigen::Index row, std::vector<Eigen::Index>& cols) {
    const auto k = static_cast<Eigen::Index>(cols.size());
    if (k == 0) return 1.0;
    if (k == 1) return m(row, cols[0]);
    if (k == 2) return m(row, cols[0]) * m(row + 1, cols[1]) - m(row, cols[1]) * m(row + 1, cols[0]);
    CompensatedSum acc;
    for (Eigen::Index c = 0; c < k; ++c) {
        const double a = m(row, cols[c]);
        if (a == 0.0) continue;
        const Eigen::Index col = cols[c];
        cols.erase(cols.begin() + c);
        const double minor = laplace(m, row + 1, cols);
        cols.insert(cols.begin() + c, col);
        acc += (c % 2 == 0 ? a : -a) * minor;
    }
    return acc.value();
}

void check_square(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols() || m.rows() < 1) {
        throw Error(ErrorCode::DimensionMismatch, "cofactor expansion needs a nonempty square matrix");
    }
    if (m.rows() > kMaxCofactorSize) {
        throw Error(ErrorCode::DimensionTooLarge, "cofactor expansion is limited to 10x10");
    }
}

Eigen::MatrixXd drop(const Eigen::MatrixXd& m, Eigen::Index row, Eigen::Index col) {
    const Eigen::Index n = m.rows();
    Eigen::MatrixXd out(n - 1, n - 1);
    for (Eigen::Index i = 0, r = 0; i < n; ++i) {
        if (i == row) continue;
        for (Eigen::Index j = 0, c = 0; j < n; ++j) {
            if (j == col) continue;
            out(r, c++) = m(i, j);
        }
        ++r;
    }
    return out;
}

struct KernelPair {
    std::size_t i;
    std::size_t j;
    double t;       // (X_ij - x*) / h2
    double weight;  // K_h1(X_i - X_j) K_h2(X_ij - x*)
};

// Pairs with a nonzero product kernel, indices into the original sample.
std::vector<KernelPair> kernel_pairs(const SampleSet& sample, double x_star, double h1, double h2,
                                     const KernelSpec& kernel) {
    if (sample.d != 1) throw Error(ErrorCode::DimensionMismatch, "variance-function estimators need d = 1");
    if (sample.n < 2) throw Error(ErrorCode::InvalidSampleSize, "need at least two observations");
    if (!(h1 > 0.0) || !(h2 > 0.0)) throw Error(ErrorCode::NonPositiveBandwidth, "bandwidths must be positive");

    std::vector<std::size_t> order(sample.n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return sample.x(a) != sample.x(b) ? sample.x(a) < sample.x(b) : sample.response[a] < sample.response[b];
    });

    std::vector<KernelPair> pairs;
    for (std::size_t a = 0; a < order.size(); ++a) {
        const std::size_t i = order[a];
        for (std::size_t b = a + 1; b < order.size(); ++b) {
            const std::size_t j = order[b];
            const double gap = sample.x(j) - sample.x(i);
            if (gap / h1 > 1.0) break;
            const double k1 = scaled_kernel(kernel, h1, gap);
            if (k1 == 0.0) continue;
            const double offset = 0.5 * (sample.x(i) + sample.x(j)) - x_star;
            const double k2 = scaled_kernel(kernel, h2, offset);
            if (k2 == 0.0) continue;
            pairs.push_back({std::min(i, j), std::max(i, j), offset / h2, k1 * k2});
        }
    }
    return pairs;
}

double half_sq_diff(const SampleSet& sample, std::size_t i, std::size_t j) {
    const double dy = sample.response[i] - sample.response[j];
    return dy * dy / 2.0;
}

}  // namespace

double cofactor_determinant(const Eigen::MatrixXd& m) {
    check_square(m);
    std::vector<Eigen::Index> cols(static_cast<std::size_t>(m.cols()));
    std::iota(cols.begin(), cols.end(), Eigen::Index{0});
    return laplace(m, 0, cols);
}

Eigen::MatrixXd adjugate(const Eigen::MatrixXd& m) {
    check_square(m);
    const Eigen::Index n = m.rows();
    if (n == 1) return Eigen::MatrixXd::Ones(1, 1);
    Eigen::MatrixXd adj(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double minor = cofactor_determinant(drop(m, j, i));
            adj(i, j) = (i + j) % 2 == 0 ? minor : -minor;
        }
    }
    return adj;
}

int polynomial_order(double beta) {
    if (!(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be positive");
    return static_cast<int>(std::ceil(beta)) - 1;
}

LocalPolyConfig LocalPolyConfig::for_smoothness(double beta, double h1, double h2, KernelSpec kernel) {
    LocalPolyConfig cfg;
    cfg.beta = beta;
    cfg.ell = polynomial_order(beta);
    cfg.h1 = h1;
    cfg.h2 = h2;
    cfg.kernel = kernel;
    return cfg;
}

double LocalPolyConfig::ridge(std::size_t n) const {
    return tau.value_or(1.0 / static_cast<double>(n));
}

void validate(const LocalPolyConfig& cfg) {
    if (!(cfg.beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be positive");
    if (cfg.ell < 0 || cfg.ell + 1 > kMaxCofactorSize) {
        throw Error(ErrorCode::InvalidArgument, "polynomial order must lie in [0, 9]");
    }
    if (!(cfg.h1 > 0.0) || !(cfg.h2 > 0.0)) throw Error(ErrorCode::NonPositiveBandwidth, "bandwidths must be positive");
    if (cfg.tau && !(*cfg.tau >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ridge must be nonnegative");
    validate(cfg.kernel);
}

LPWeights lp_weights(const SampleSet& sample, double x_star, const LocalPolyConfig& cfg) {
    validate(cfg);
    const auto pairs = kernel_pairs(sample, x_star, cfg.h1, cfg.h2, cfg.kernel);
    const Eigen::Index size = cfg.ell + 1;
    const double n = static_cast<double>(sample.n);
    const double inv_pairs = 2.0 / (n * (n - 1.0));

    // Moment sums s_k = sum t^k K, k = 0..2 ell; B(a, b) = s_{a+b} / C(n, 2).
    std::vector<CompensatedSum> moments(static_cast<std::size_t>(2 * cfg.ell + 1));
    for (const auto& p : pairs) {
        double power = p.weight;
        for (auto& s : moments) {
            s += power;
            power *= p.t;
        }
    }
    LPWeights out;
    out.B.resize(size, size);
    for (Eigen::Index a = 0; a < size; ++a) {
        for (Eigen::Index b = 0; b < size; ++b) out.B(a, b) = moments[static_cast<std::size_t>(a + b)].value() * inv_pairs;
    }
    out.detB = cofactor_determinant(out.B);
    out.tau = cfg.ridge(sample.n);
    const Eigen::MatrixXd adj = adjugate(out.B);
    const double denom = out.detB + out.tau;

    out.weights.reserve(pairs.size());
    for (const auto& p : pairs) {
        // q(0)^T adj(B) q(t): first row of the adjugate against (1, t, ..., t^ell).
        double poly = 0.0;
        double power = 1.0;
        for (Eigen::Index k = 0; k < size; ++k) {
            poly += adj(0, k) * power;
            power *= p.t;
        }
        PairWeight w;
        w.i = p.i;
        w.j = p.j;
        w.raw = inv_pairs * poly * p.weight;
        w.ridged = denom == 0.0 ? 0.0 : w.raw / denom;
        w.offset = p.t * cfg.h2;
        out.weights.push_back(w);
    }
    return out;
}

double local_poly_varfn(const SampleSet& sample, double x_star, const LocalPolyConfig& cfg) {
    const auto lp = lp_weights(sample, x_star, cfg);
    CompensatedSum acc;
    for (const auto& w : lp.weights) acc += w.ridged * half_sq_diff(sample, w.i, w.j);
    return acc.value();
}

double nw_varfn(const SampleSet& sample, double x_star, double h1, double h2, const KernelSpec& kernel) {
    const auto pairs = kernel_pairs(sample, x_star, h1, h2, kernel);
    CompensatedSum num;
    CompensatedSum den;
    for (const auto& p : pairs) {
        num += p.weight * half_sq_diff(sample, p.i, p.j);
        den += p.weight;
    }
    return den.value() == 0.0 ? 0.0 : num.value() / den.value();
}

double loss_pointwise(double v_hat, double v_true) {
    return (v_hat - v_true) * (v_hat - v_true);
}

double loss_integrated(const std::function<double(double)>& v_hat, const FunctionSpec& v_true,
                       const DesignSpec& design, std::size_t m, std::uint64_t seed) {
    if (m < 1) throw Error(ErrorCode::InvalidArgument, "m must be >= 1");
    if (dimension(design) != 1) throw Error(ErrorCode::DimensionMismatch, "integrated loss needs a univariate design");
    Rng rng(seed);
    CompensatedSum acc;
    for (std::size_t k = 0; k < m; ++k) {
        const double x = draw_univariate(design, rng);
        acc += loss_pointwise(v_hat(x), eval_function(v_true, x));
    }
    return acc.value() / static_cast<double>(m);
}

std::vector<double> estimate_curve(const SampleSet& sample, const std::vector<double>& grid,
                                   const LocalPolyConfig& cfg) {
    std::vector<double> out;
    out.reserve(grid.size());
    for (double x : grid) out.push_back(local_poly_varfn(sample, x, cfg));
    return out;
}

std::string curve_csv(const std::vector<double>& grid, const std::vector<double>& values) {
    if (grid.size() != values.size()) throw Error(ErrorCode::DimensionMismatch, "grid and values differ in length");
    std::string text = "x,v_hat\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        text += format_double(grid[i]) + "," + format_double(values[i]) + "\n";
    }
    return text;
}

nlohmann::json curve_metadata(const LocalPolyConfig& cfg, std::size_t n, std::uint64_t seed) {
    return {{"h1", cfg.h1},           {"h2", cfg.h2}, {"ell", cfg.ell}, {"beta", cfg.beta},
            {"tau_n", cfg.ridge(n)}, {"n", n},       {"seed", seed},   {"kernel", cfg.kernel}};
}

}  // namespace varest
