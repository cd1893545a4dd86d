#include "varest/lb_tools.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "varest/error.hpp"
#include "varest/numeric.hpp"

namespace varest {

double DiscreteDistribution::range() const noexcept {
    double b = 0.0;
    for (double a : atoms) b = std::max(b, std::abs(a));
    return b;
}

void validate(const DiscreteDistribution& dist) {
    if (dist.atoms.empty() || dist.atoms.size() != dist.probs.size()) {
        throw Error(ErrorCode::InvalidArgument, "distribution needs matching, nonempty atoms and probs");
    }
    double total = 0.0;
    for (double p : dist.probs) {
        if (!(p >= 0.0)) throw Error(ErrorCode::InvalidArgument, "probabilities must be nonnegative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorCode::InvalidArgument, "probabilities must sum to one");
    const std::size_t n = dist.atoms.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && !(dist.atoms[i] > dist.atoms[i - 1])) {
            throw Error(ErrorCode::InvalidArgument, "atoms must be strictly increasing");
        }
        const std::size_t k = n - 1 - i;
        if (std::abs(dist.atoms[i] + dist.atoms[k]) > 1e-12 * std::max(1.0, dist.range()) ||
            std::abs(dist.probs[i] - dist.probs[k]) > 1e-12) {
            throw Error(ErrorCode::InvalidArgument, "distribution must be symmetric about zero");
        }
    }
}

double sample(const DiscreteDistribution& dist, Rng& rng) {
    double u = rng.uniform();
    for (std::size_t i = 0; i + 1 < dist.atoms.size(); ++i) {
        if (u < dist.probs[i]) return dist.atoms[i];
        u -= dist.probs[i];
    }
    return dist.atoms.back();
}

QuadratureRule gauss_hermite_rule(int m) {
    if (m < 1) throw Error(ErrorCode::InvalidArgument, "quadrature needs at least one node");
    // Golub-Welsch on the Jacobi matrix of the monic probabilists' Hermite family.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(m, m);
    for (int k = 1; k < m; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);

    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(m));
    rule.weights.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        rule.nodes[i] = eig.eigenvalues()(i);
        const double v = eig.eigenvectors()(0, i);
        rule.weights[i] = v * v;
    }
    // Exact symmetry; eigen-solver noise would otherwise leak into odd moments.
    for (int i = 0; i < m / 2; ++i) {
        const int k = m - 1 - i;
        const double node = 0.5 * (rule.nodes[k] - rule.nodes[i]);
        const double weight = 0.5 * (rule.weights[i] + rule.weights[k]);
        rule.nodes[i] = -node;
        rule.nodes[k] = node;
        rule.weights[i] = rule.weights[k] = weight;
    }
    if (m % 2 == 1) rule.nodes[m / 2] = 0.0;
    double total = 0.0;
    for (double w : rule.weights) total += w;
    for (double& w : rule.weights) w /= total;
    return rule;
}

DiscreteDistribution moment_matched_distribution(int q) {
    if (q < 1) throw Error(ErrorCode::InvalidArgument, "q must be >= 1");
    if (q % 2 == 0) throw Error(ErrorCode::EvenOrder, "q must be odd, got " + std::to_string(q));
    auto rule = gauss_hermite_rule((q + 1) / 2);
    return {std::move(rule.nodes), std::move(rule.weights)};
}

int smallest_odd_above(double threshold) {
    auto q = static_cast<int>(std::floor(threshold)) + 1;
    if (q % 2 == 0) ++q;
    return std::max(q, 1);
}

double dist_moment(const DiscreteDistribution& dist, int j) {
    if (j < 0) throw Error(ErrorCode::InvalidArgument, "moment order must be >= 0");
    CompensatedSum acc;
    for (std::size_t i = 0; i < dist.atoms.size(); ++i) acc += dist.probs[i] * std::pow(dist.atoms[i], j);
    return acc.value();
}

double double_factorial_odd(int k) {
    double acc = 1.0;
    for (int i = 1; i <= k; ++i) acc *= 2.0 * i - 1.0;
    return acc;
}

double normal_moment(int j) {
    if (j < 0) throw Error(ErrorCode::InvalidArgument, "moment order must be >= 0");
    return j % 2 == 1 ? 0.0 : double_factorial_odd(j / 2);
}

double hermite(int k, double t) {
    if (k < 0) throw Error(ErrorCode::InvalidArgument, "Hermite order must be >= 0");
    if (k == 0) return 1.0;
    double prev = 1.0;
    double cur = t;
    for (int i = 1; i < k; ++i) {
        const double next = t * cur - i * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

namespace {

Eigen::LLT<Eigen::MatrixXd> spd_factor(const Eigen::MatrixXd& m, const char* name) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw Error(ErrorCode::DimensionMismatch, std::string(name) + " must be a nonempty square matrix");
    }
    if (!m.isApprox(m.transpose(), 1e-12)) {
        throw Error(ErrorCode::NotPositiveDefinite, std::string(name) + " is not symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::NotPositiveDefinite, std::string(name) + " is not positive definite");
    }
    return llt;
}

}  // namespace

TvBounds gaussian_tv_bound(const Eigen::MatrixXd& sigma1, const Eigen::MatrixXd& sigma2) {
    const auto llt1 = spd_factor(sigma1, "sigma1");
    spd_factor(sigma2, "sigma2");
    if (sigma1.rows() != sigma2.rows()) throw Error(ErrorCode::DimensionMismatch, "covariance sizes differ");
    const Eigen::MatrixXd diff =
        llt1.solve(sigma2) - Eigen::MatrixXd::Identity(sigma1.rows(), sigma1.cols());
    TvBounds out;
    out.rho = std::min(1.0, diff.norm());
    out.lower = out.rho / 100.0;
    out.upper = 1.5 * out.rho;
    return out;
}

MonteCarloValue tv_monte_carlo(const Density& density_p, const Density& density_q, const Sampler& sampler_q,
                               std::size_t dim, std::size_t m, std::uint64_t seed) {
    if (m < 1) throw Error(ErrorCode::InvalidArgument, "m must be >= 1");
    Rng rng(seed);
    std::vector<double> z(dim);
    CompensatedSum sum;
    CompensatedSum sum_sq;
    for (std::size_t i = 0; i < m; ++i) {
        sampler_q(rng, z);
        const double q = density_q(z);
        const double p = density_p(z);
        const double v = q > 0.0 ? std::max(0.0, 1.0 - p / q) : 0.0;
        sum += v;
        sum_sq += v * v;
    }
    const double md = static_cast<double>(m);
    MonteCarloValue out;
    out.value = sum.value() / md;
    if (m > 1) {
        const double var = std::max(0.0, (sum_sq.value() - md * out.value * out.value) / (md - 1.0));
        out.se = std::sqrt(var / md);
    }
    return out;
}

GaussianLaw::GaussianLaw(const Eigen::MatrixXd& covariance) {
    const auto llt = spd_factor(covariance, "covariance");
    chol_ = llt.matrixL();
    const double d = static_cast<double>(covariance.rows());
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < chol_.rows(); ++i) log_det += 2.0 * std::log(chol_(i, i));
    log_norm_ = -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det);
}

double GaussianLaw::log_density(std::span<const double> y) const {
    if (y.size() != dim()) throw Error(ErrorCode::DimensionMismatch, "argument dimension differs from the law");
    const Eigen::Map<const Eigen::VectorXd> v(y.data(), static_cast<Eigen::Index>(y.size()));
    const Eigen::VectorXd w = chol_.triangularView<Eigen::Lower>().solve(v);
    return log_norm_ - 0.5 * w.squaredNorm();
}

void GaussianLaw::draw(Rng& rng, std::span<double> out) const {
    Eigen::VectorXd z(chol_.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    const Eigen::VectorXd y = chol_.triangularView<Eigen::Lower>() * z;
    for (Eigen::Index i = 0; i < y.size(); ++i) out[static_cast<std::size_t>(i)] = y(i);
}

std::map<int, double> multinomial_max_occupancy(long long m_balls, long long m_bins, long long trials,
                                                std::uint64_t seed) {
    if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
    if (m_balls < 0) throw Error(ErrorCode::InvalidArgument, "ball count must be >= 0");
    if (m_bins < 1) throw Error(ErrorCode::InvalidArgument, "bin count must be >= 1");

    std::vector<int> counts(static_cast<std::size_t>(m_bins), 0);
    std::vector<std::uint64_t> touched;
    touched.reserve(static_cast<std::size_t>(m_balls));
    std::map<int, long long> tally;
    for (long long t = 0; t < trials; ++t) {
        Rng rng(seed ^ Rng::mix(static_cast<std::uint64_t>(t) + 1));
        int best = 0;
        for (long long b = 0; b < m_balls; ++b) {
            const auto bin = rng.below(static_cast<std::uint64_t>(m_bins));
            if (counts[bin]++ == 0) touched.push_back(bin);
            best = std::max(best, counts[bin]);
        }
        for (auto bin : touched) counts[bin] = 0;
        touched.clear();
        ++tally[best];
    }
    std::map<int, double> out;
    for (auto [k, c] : tally) out[k] = static_cast<double>(c) / static_cast<double>(trials);
    return out;
}

double kolchin_lambda(double m, double big_m, int r) {
    if (r < 2) throw Error(ErrorCode::InvalidArgument, "r must be >= 2");
    if (!(big_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "bin count must be positive");
    if (m == 0.0) return 0.0;
    return std::exp(r * std::log(m) - std::lgamma(r + 1.0) - (r - 1) * std::log(big_m));
}

double mixture_chi2(double theta, int d, const DiscreteDistribution& g, double sigma, int quad_points) {
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "d must be >= 1");
    if (d > 3) throw Error(ErrorCode::DimensionTooLarge, "mixture_chi2 supports d <= 3");
    if (!(theta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "theta must be >= 0");
    if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
    validate(g);
    if (theta == 0.0) return 0.0;

    // Denominator law: N(0, sigma^2 I + theta^2 11^T). Both densities depend on
    // y only through s = sum y, and log(p/q) is assembled from small terms.
    const double s2 = sigma * sigma;
    const double t2 = theta * theta;
    const double dd = static_cast<double>(d);
    Eigen::MatrixXd cov = s2 * Eigen::MatrixXd::Identity(d, d) + t2 * Eigen::MatrixXd::Ones(d, d);
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
    const double log_det_ratio = 0.5 * std::log1p(dd * t2 / s2);

    const auto rule = gauss_hermite_rule(quad_points);
    std::vector<double> log_g(g.probs.size());
    for (std::size_t a = 0; a < g.probs.size(); ++a) log_g[a] = std::log(g.probs[a]);
    std::vector<double> terms(g.atoms.size());

    CompensatedSum acc;
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    Eigen::VectorXd z(d);
    for (;;) {
        double weight = 1.0;
        for (int k = 0; k < d; ++k) {
            z(k) = rule.nodes[idx[k]];
            weight *= rule.weights[idx[k]];
        }
        const double s = (chol * z).sum();
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < g.atoms.size(); ++a) {
            const double v = g.atoms[a];
            terms[a] = log_g[a] + (2.0 * theta * v * s - dd * t2 * v * v) / (2.0 * s2);
            top = std::max(top, terms[a]);
        }
        double mix = 0.0;
        for (double t : terms) mix += std::exp(t - top);
        const double log_ratio = top + std::log(mix) - t2 * s * s / (2.0 * s2 * (s2 + dd * t2)) + log_det_ratio;
        const double r = std::expm1(log_ratio);
        acc += weight * r * r;

        int k = 0;
        while (k < d && ++idx[k] == quad_points) idx[k++] = 0;
        if (k == d) break;
    }
    return acc.value();
}

double mixture_chi2_series_bound(double theta, int d, const DiscreteDistribution& g, double sigma) {
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "d must be >= 1");
    if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
    const double base = std::pow(theta * std::sqrt(static_cast<double>(d)) / sigma, 4.0);
    double total = 0.0;
    double power = 1.0;
    double factorial = 1.0;  // (2k)!
    for (int k = 1; k <= 40; ++k) {
        power *= base;
        factorial *= (2.0 * k - 1.0) * (2.0 * k);
        const double delta = dist_moment(g, 2 * k) - double_factorial_odd(k);
        const double term = power * delta * delta / factorial;
        total += term;
        if (total > 0.0 && term < 1e-16 * total) break;
    }
    return total;
}

}  // namespace varest
