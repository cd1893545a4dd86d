// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "varest/datagen.hpp"
#include "varest/harness.hpp"
#include "varest/lb_tools.hpp"
#include "varest/var_estimators.hpp"
#include "varest/varfn_estimators.hpp"

using namespace varest;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

const DesignSpec kUnit{design::UniformInterval{0.0, 1.0}};

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

std::vector<long long> doubling(long long from, long long to) {
    std::vector<long long> out;
    for (long long n = from; n <= to; n *= 2) out.push_back(n);
    return out;
}

Verdict slope_in(const RateResult& r, double lo, double hi) {
    return {r.slope >= lo && r.slope <= hi,
            fmt("slope %.4f (se %.4f) in [%.2f, %.2f], theory %.4f", r.slope, r.slope_se, lo, hi,
                r.theoretical_exponent)};
}

Verdict smooth_rate() {
    ExperimentConfig cfg;
    cfg.scenario = Scenario::HomoscedasticSmooth;
    cfg.alpha = 1.0;
    cfg.n_grid = doubling(64, 4096);
    cfg.trials_per_n = 200;
    return slope_in(run_rate_experiment(cfg), -1.2, -0.8);
}

Verdict rough_rate() {
    ExperimentConfig cfg;
    cfg.scenario = Scenario::HomoscedasticRough;
    cfg.alpha = 0.125;
    cfg.n_grid = doubling(256, 16384);
    cfg.trials_per_n = 200;
    return slope_in(run_rate_experiment(cfg), -0.87, -0.47);
}

Verdict varfn_rate() {
    ExperimentConfig cfg;
    cfg.scenario = Scenario::VarFnPointwise;
    cfg.alpha = 1.0;
    cfg.beta = 1.0;
    cfg.x_star = 0.5;
    cfg.n_grid = doubling(256, 16384);
    cfg.trials_per_n = 200;
    return slope_in(run_rate_experiment(cfg), -0.87, -0.47);
}

Verdict reproducing() {
    Rng rng(2024);
    double worst = 0.0;
    for (int ell : {1, 2}) {
        for (int rep = 0; rep < 100; ++rep) {
            const auto s = generate(kUnit, FunctionSpec{fn::Sinusoid{0.5, 1.0, 0.0}},
                                    FunctionSpec{fn::Polynomial{{1.0, 0.5}}}, NoiseSpec::gaussian(), 200,
                                    rng());
            const double h1 = 0.02 + 0.08 * rng.uniform();
            const double h2 = 0.1 + 0.3 * rng.uniform();
            const double x_star = 0.2 + 0.6 * rng.uniform();
            const auto cfg = LocalPolyConfig::for_smoothness(ell + 0.5, h1, h2);
            const auto w = lp_weights(s, x_star, cfg);
            double abs_sum = 0.0;
            for (const auto& p : w.weights) abs_sum += std::abs(p.raw);
            if (abs_sum == 0.0) continue;
            for (int k = 1; k <= ell; ++k) {
                double moment = 0.0;
                for (const auto& p : w.weights) moment += p.raw * std::pow(p.offset, k);
                worst = std::max(worst, std::abs(moment) / (abs_sum * std::pow(h2, k)));
            }
        }
    }
    return {worst <= 1e-8, fmt("max normalized moment %.3e <= 1e-8", worst)};
}

Verdict adjugate_identity() {
    Rng rng(5);
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const int size = 1 + static_cast<int>(rng.below(5));
        Eigen::MatrixXd m(size, size);
        for (int i = 0; i < size; ++i) {
            for (int j = 0; j < size; ++j) m(i, j) = rng.uniform(-3.0, 3.0);
        }
        if (rep % 10 == 0 && size > 1) m.row(size - 1) = 2.0 * m.row(0);
        const Eigen::MatrixXd residual =
            m * adjugate(m) - cofactor_determinant(m) * Eigen::MatrixXd::Identity(size, size);
        const double scale = std::pow(m.cwiseAbs().maxCoeff(), size);
        worst = std::max(worst, residual.cwiseAbs().maxCoeff() / scale);
    }
    return {worst <= 1e-10, fmt("max scaled residual %.3e <= 1e-10", worst)};
}

Verdict moment_matching() {
    double worst = 0.0;
    for (int q : {3, 5, 7, 9}) {
        const auto g = moment_matched_distribution(q);
        for (int j = 1; j <= q; ++j) worst = std::max(worst, std::abs(dist_moment(g, j) - normal_moment(j)));
    }
    return {worst <= 1e-10, fmt("max moment error %.3e <= 1e-10", worst)};
}

Eigen::MatrixXd random_spd(Rng& rng, int d) {
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
    }
    return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
}

Verdict tv_sandwich() {
    Rng rng(77);
    int inside = 0;
    std::string worst;
    for (int rep = 0; rep < 20; ++rep) {
        const int d = 1 + rep % 3;
        const Eigen::MatrixXd s1 = random_spd(rng, d);
        Eigen::MatrixXd s2;
        if (rep % 2 == 0) {
            Eigen::MatrixXd e(d, d);
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j <= i; ++j) e(i, j) = e(j, i) = 0.15 * rng.normal();
            }
            Eigen::MatrixXd inner = Eigen::MatrixXd::Identity(d, d) + e;
            while (inner.llt().info() != Eigen::Success) {
                e *= 0.5;
                inner = Eigen::MatrixXd::Identity(d, d) + e;
            }
            const Eigen::MatrixXd lower = s1.llt().matrixL();
            s2 = lower * inner * lower.transpose();
            s2 = 0.5 * (s2 + s2.transpose());
        } else {
            s2 = random_spd(rng, d);
        }
        const auto bounds = gaussian_tv_bound(s1, s2);
        const GaussianLaw p(s1);
        const GaussianLaw q(s2);
        const auto mc = tv_monte_carlo([&](std::span<const double> y) { return std::exp(p.log_density(y)); },
                                       [&](std::span<const double> y) { return std::exp(q.log_density(y)); },
                                       [&](Rng& r, std::span<double> y) { q.draw(r, y); },
                                       static_cast<std::size_t>(d), 1000000, rng());
        const bool ok = mc.value >= bounds.lower - 3.0 * mc.se && mc.value <= bounds.upper + 3.0 * mc.se;
        if (ok) {
            ++inside;
        } else if (worst.empty()) {
            worst = fmt("; pair %d: tv %.4f outside [%.4f, %.4f]", rep, mc.value, bounds.lower, bounds.upper);
        }
    }
    return {inside == 20, fmt("%d/20 pairs inside the sandwich", inside) + worst};
}

Verdict kolchin() {
    const auto hist = multinomial_max_occupancy(100, 5000, 100000, 31337);
    const auto prob = [&](int r) {
        const auto it = hist.find(r);
        return it == hist.end() ? 0.0 : it->second;
    };
    const double two_point = prob(1) + prob(2);
    const double at_two = prob(2);
    const double lambda = kolchin_lambda(100, 5000, 2);
    const bool ok = std::abs(two_point - 1.0) <= 0.01 && std::abs(at_two - 0.632) <= 0.05;
    return {ok, fmt("P(fmax in {1,2}) = %.4f, P(fmax = 2) = %.4f, lambda = %.3f", two_point, at_two, lambda)};
}

Verdict additive_gd() {
    Rng rng(8);
    const int m = 64;
    std::vector<double> grid(m + 1), f(m + 1), g(m + 1);
    for (int i = 0; i <= m; ++i) {
        grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / m;
        f[static_cast<std::size_t>(i)] = 5.0 * rng.normal();
        g[static_cast<std::size_t>(i)] = std::exp(rng.normal());
    }
    const FunctionSpec mean{fn::Additive{{FunctionSpec{fn::Tabulated{grid, f}}, FunctionSpec{fn::Tabulated{grid, g}}}}};
    const auto s = generate({design::GridGD{2}}, mean, FunctionSpec::constant(0.0), NoiseSpec::gaussian(), m * m, 1);
    const double noiseless = std::abs(additive_gd_variance(s.response, 2));

    ExperimentConfig cfg;
    cfg.scenario = Scenario::AdditiveGD;
    cfg.dimension = 2;
    cfg.n_grid = {256, 1024, 4096, 16384};
    cfg.trials_per_n = 200;
    const auto r = run_rate_experiment(cfg);
    const bool ok = noiseless <= 1e-12 && r.slope >= -1.2 && r.slope <= -0.8;
    return {ok, fmt("noiseless |estimate| %.3e <= 1e-12; slope %.4f in [-1.2, -0.8]", noiseless, r.slope)};
}

Verdict projection_ratio() {
    const std::size_t n = 4096;
    const auto coarse = ProjectionConfig::from_design(kUnit, {6});
    const auto fine = ProjectionConfig::from_design(kUnit, {12});
    std::vector<double> a, b;
    a.reserve(2000);
    b.reserve(2000);
    for (int t = 0; t < 2000; ++t) {
        const auto s = generate(kUnit, FunctionSpec::constant(0.0), FunctionSpec::constant(1.0),
                                NoiseSpec::gaussian(), n, 700000 + static_cast<std::uint64_t>(t));
        a.push_back(projection_variance(s, coarse));
        b.push_back(projection_variance(s, fine));
    }
    const auto var = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double acc = 0.0;
        for (double x : v) acc += (x - mean) * (x - mean);
        return acc / static_cast<double>(v.size() - 1);
    };
    const double ratio = var(b) / var(a);
    return {ratio >= 1.5 && ratio <= 2.5, fmt("variance ratio %.4f in [1.5, 2.5], theory %.4f", ratio,
                                              (4096.0 + 4096.0) / (64.0 + 4096.0))};
}

Verdict pair_oracle() {
    Rng rng(99);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 2 + rng.below(11);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.uniform();
            y[i] = 2.0 * rng.normal();
        }
        const double h = 0.05 + 0.6 * rng.uniform();
        const auto kernel = rep % 2 == 0 ? KernelSpec::box() : KernelSpec::truncated_gaussian();
        long double num = 0.0L, den = 0.0L;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double w = scaled_kernel(kernel, h, x[i] - x[j]);
                num += static_cast<long double>(w) * (y[i] - y[j]) * (y[i] - y[j]) / 2.0L;
                den += w;
            }
        }
        const double oracle = den == 0.0L ? 0.0 : static_cast<double>(num / den);
        const double fast = ustat_variance(x, y, h, kernel).value;
        const double rel = oracle == 0.0 ? std::abs(fast) : std::abs(fast - oracle) / std::abs(oracle);
        worst = std::max(worst, rel);
    }
    return {worst <= 1e-12, fmt("max relative difference %.3e <= 1e-12", worst)};
}

Verdict chi2_decay() {
    const auto g = moment_matched_distribution(3);
    const std::vector<double> thetas = {0.05, 0.1, 0.2};
    std::vector<double> values;
    for (double t : thetas) values.push_back(mixture_chi2(t, 1, g, 1.0, 40));
    const auto fit = fit_loglog_slope(thetas, values);
    return {fit.slope >= 7.0 && fit.slope <= 9.0, fmt("slope %.4f in [7, 9]", fit.slope)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"smooth homoscedastic rate", smooth_rate},
        {"rough homoscedastic rate", rough_rate},
        {"variance-function pointwise rate", varfn_rate},
        {"local polynomial reproducing property", reproducing},
        {"adjugate identity", adjugate_identity},
        {"moment matching", moment_matching},
        {"gaussian TV sandwich", tv_sandwich},
        {"two-point occupancy law", kolchin},
        {"additive grid differencing", additive_gd},
        {"projection variance law", projection_ratio},
        {"pair-oracle equivalence", pair_oracle},
        {"chi-square moment-matching decay", chi2_decay},
    };
    int failed = 0;
    int index = 0;
    for (const auto& [name, check] : criteria) {
        ++index;
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] %2d %s: %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", index, name.c_str(), v.detail.c_str(),
                    secs);
        std::fflush(stdout);
        if (!v.pass) ++failed;
    }
    std::printf("%d/%zu criteria passed\n", index - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
