#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "varest/datagen.hpp"
#include "varest/error.hpp"
#include "varest/haar.hpp"
#include "varest/var_estimators.hpp"

using namespace varest;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an exception");
    return ErrorCode::InvalidArgument;
}

const DesignSpec kUnit{design::UniformInterval{0.0, 1.0}};
const KernelSpec kBox = KernelSpec::box();

// plain double loop over all pairs
double pair_oracle(const std::vector<double>& x, const std::vector<double>& y, double h, const KernelSpec& k) {
    long double num = 0.0L;
    long double den = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double w = kernel_eval(k, (x[i] - x[j]) / h) / h;
            num += static_cast<long double>(w) * (y[i] - y[j]) * (y[i] - y[j]) / 2.0L;
            den += w;
        }
    }
    return den == 0.0L ? 0.0 : static_cast<double>(num / den);
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_CASE("ustat examples") {
    CHECK(ustat_variance(std::vector<double>{0.0, 0.1}, std::vector<double>{1.0, 1.0}, 1.0, kBox).value == 0.0);
    const auto none = ustat_variance(std::vector<double>{0.0, 1.0}, std::vector<double>{0.0, 5.0}, 0.5, kBox);
    CHECK(none.value == 0.0);
    CHECK(none.denominator == 0.0);
    CHECK(none.pairs_in_bandwidth == 0);
    const auto one = ustat_variance(std::vector<double>{0.0, 0.1}, std::vector<double>{0.0, 2.0}, 1.0, kBox);
    CHECK(one.value == 2.0);
    CHECK(one.pairs_in_bandwidth == 1);
    CHECK(code_of([] {
              ustat_variance(std::vector<double>{0.0, 0.1}, std::vector<double>{0.0, 2.0}, 0.0, kBox);
          }) == ErrorCode::NonPositiveBandwidth);
}

TEST_CASE("ustat matches the pair oracle") {
    Rng rng(42);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 2 + rng.below(40);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.uniform();
            y[i] = rng.normal() * 3.0 + 1.0;
        }
        if (rep % 5 == 0) x[1] = x[0];
        const double h = 0.02 + 0.5 * rng.uniform();
        for (const auto& k : {KernelSpec::box(), KernelSpec::truncated_gaussian()}) {
            const double fast = ustat_variance(x, y, h, k).value;
            const double slow = pair_oracle(x, y, h, k);
            CHECK(std::abs(fast - slow) <= 1e-12 * std::max(1.0, std::abs(slow)));
        }
    }
}

TEST_CASE("ustat is nonnegative with a positive denominator") {
    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        const auto s = generate(kUnit, FunctionSpec{fn::Sinusoid{1.0, 3.0, 0.0}}, FunctionSpec::constant(0.5),
                                NoiseSpec::gaussian(), 50, 100 + rep);
        const auto e = ustat_variance(s, 0.1, kBox);
        CHECK(e.denominator > 0.0);
        CHECK(e.value >= 0.0);
        CHECK(e.value == doctest::Approx(e.numerator / e.denominator));
    }
}

TEST_CASE("ustat location, scale and permutation invariance") {
    Rng rng(9);
    const std::size_t n = 300;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = static_cast<double>(rng.below(1024)) / 1024.0;
        y[i] = static_cast<double>(static_cast<long long>(rng.below(2001)) - 1000);
    }
    const double base = ustat_variance(x, y, 0.05, kBox).value;

    std::vector<double> shifted(y), scaled(y);
    for (auto& v : shifted) v += 37.0;
    for (auto& v : scaled) v *= 4.0;
    CHECK(ustat_variance(x, shifted, 0.05, kBox).value == base);
    CHECK(ustat_variance(x, scaled, 0.05, kBox).value == 16.0 * base);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int rep = 0; rep < 5; ++rep) {
        for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
        std::vector<double> px(n), py(n);
        for (std::size_t i = 0; i < n; ++i) {
            px[i] = x[perm[i]];
            py[i] = y[perm[i]];
        }
        CHECK(ustat_variance(px, py, 0.05, kBox).value == base);
    }

    std::vector<double> gx(n), gy(n);
    for (std::size_t i = 0; i < n; ++i) {
        gx[i] = rng.uniform();
        gy[i] = rng.normal();
    }
    const double general = ustat_variance(gx, gy, 0.1, kBox).value;
    for (auto& v : gy) v = 3.3 * v - 1.7;
    CHECK(ustat_variance(gx, gy, 0.1, kBox).value == doctest::Approx(3.3 * 3.3 * general).epsilon(1e-12));
}

TEST_CASE("multivariate ustat") {
    const auto two = SampleSet::multivariate(2, {0.0, 0.0, 0.1, 0.1}, {0.0, 2.0});
    const std::vector<double> h = {1.0, 1.0};
    CHECK(ustat_variance_multivariate(two, h, kBox).value == 2.0);
    const auto apart = SampleSet::multivariate(2, {0.0, 0.0, 0.9, 0.0}, {0.0, 2.0});
    const std::vector<double> narrow = {0.5, 1.0};
    CHECK(ustat_variance_multivariate(apart, narrow, kBox).value == 0.0);
    const std::vector<double> wrong = {1.0};
    CHECK(code_of([&] { ustat_variance_multivariate(two, wrong, kBox); }) == ErrorCode::DimensionMismatch);

    // d = 1 agrees with the univariate path
    Rng rng(1);
    std::vector<double> x(60), y(60);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.uniform();
        y[i] = rng.normal();
    }
    const auto s = SampleSet::univariate(x, y);
    const std::vector<double> h1 = {0.2};
    CHECK(ustat_variance_multivariate(s, h1, kBox).value == doctest::Approx(ustat_variance(s, 0.2, kBox).value));

    // product-kernel pair oracle in d = 2
    std::vector<double> design(80);
    std::vector<double> resp(40);
    for (auto& v : design) v = rng.uniform();
    for (auto& v : resp) v = rng.normal();
    const auto s2 = SampleSet::multivariate(2, design, resp);
    const std::vector<double> hh = {0.3, 0.45};
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < 40; ++i) {
        for (std::size_t j = i + 1; j < 40; ++j) {
            const double w = scaled_kernel(kBox, hh[0], design[2 * i] - design[2 * j]) *
                             scaled_kernel(kBox, hh[1], design[2 * i + 1] - design[2 * j + 1]);
            num += w * (resp[i] - resp[j]) * (resp[i] - resp[j]) / 2.0;
            den += w;
        }
    }
    CHECK(ustat_variance_multivariate(s2, hh, kBox).value == doctest::Approx(num / den).epsilon(1e-12));
}

TEST_CASE("equidistant difference estimator") {
    CHECK(diff_variance_equidistant(std::vector<double>{3.0, 3.0, 3.0, 3.0}) == 0.0);
    CHECK(diff_variance_equidistant(std::vector<double>{0.0, 2.0}) == 2.0);
    CHECK(diff_variance_equidistant(std::vector<double>{0.0, 2.0, 0.0}) == 2.0);
    Rng rng(17);
    std::vector<double> y(100000);
    for (auto& v : y) v = rng.normal();
    CHECK(std::abs(diff_variance_equidistant(y) - 1.0) < 0.02);
    CHECK(code_of([] { diff_variance_equidistant(std::vector<double>{1.0}); }) == ErrorCode::InvalidSampleSize);
}

TEST_CASE("sample variance") {
    CHECK(sample_variance(std::vector<double>{2.0, 2.0, 2.0}) == 0.0);
    CHECK(sample_variance(std::vector<double>{0.0, 2.0}) == 2.0);
    Rng rng(23);
    std::vector<double> y(100000);
    for (auto& v : y) v = rng.normal();
    CHECK(std::abs(sample_variance(y) - 1.0) < 0.02);
}

TEST_CASE("additive grid differencing annihilates additive means") {
    const int m = 16;
    std::vector<double> y(m * m);
    Rng rng(5);
    std::vector<double> f(m), g(m);
    for (auto& v : f) v = static_cast<double>(rng.below(100));
    for (auto& v : g) v = static_cast<double>(rng.below(100));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) y[i * m + j] = f[i] + g[j];
    }
    CHECK(additive_gd_variance(y, 2) == 0.0);

    for (auto& v : f) v = rng.normal() * 10.0;
    for (auto& v : g) v = std::exp(rng.normal());
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) y[i * m + j] = f[i] + g[j];
    }
    CHECK(std::abs(additive_gd_variance(y, 2)) <= 1e-12);

    std::vector<double> y3(8 * 8 * 8);
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            for (int k = 0; k < 8; ++k) y3[(i * 8 + j) * 8 + k] = std::sin(i) + j * j + std::sqrt(k + 1.0);
        }
    }
    CHECK(std::abs(additive_gd_variance(y3, 3)) <= 1e-12);

    const std::vector<double> constant(64, 4.5);
    CHECK(additive_gd_variance(constant, 2) == 0.0);

    CHECK(code_of([] { additive_gd_variance(std::vector<double>(15, 0.0), 2); }) == ErrorCode::DimensionMismatch);
    CHECK(code_of([] { additive_gd_variance(std::vector<double>(9, 0.0), 2); }) == ErrorCode::GridNotEven);
}

TEST_CASE("additive grid differencing is unbiased for pure noise") {
    Rng rng(77);
    std::vector<double> estimates;
    for (int t = 0; t < 500; ++t) {
        std::vector<double> y(4096);
        for (auto& v : y) v = rng.normal();
        estimates.push_back(additive_gd_variance(y, 2));
    }
    const double m = mean_of(estimates);
    const double se = std::sqrt(var_of(estimates) / static_cast<double>(estimates.size()));
    CHECK(std::abs(m - 1.0) <= 3.0 * se);
}

TEST_CASE("additive method of moments") {
    const DesignSpec d2{design::ProductOfUnivariate{{kUnit, kUnit}}};
    const auto s = generate(d2, FunctionSpec{fn::Additive{{FunctionSpec::constant(0.0), FunctionSpec::constant(0.0)}}},
                            FunctionSpec::constant(1.0), NoiseSpec::gaussian(), 4000, 12);
    const std::vector<double> h = {0.01, 0.01};
    CHECK(std::abs(additive_mom_variance(s, h, kBox) - 1.0) < 0.1);

    const std::vector<BandwidthPlan> plans = {{1.0}, {1.0}};
    const std::vector<double> from_plans = {bandwidth_homoscedastic(plans[0], 4000),
                                            bandwidth_homoscedastic(plans[1], 4000)};
    CHECK(additive_mom_variance(s, plans, kBox) == additive_mom_variance(s, from_plans, kBox));

    const auto uni = generate(kUnit, FunctionSpec::constant(0.0), FunctionSpec::constant(1.0), NoiseSpec::gaussian(),
                              50, 1);
    const std::vector<double> h1 = {0.1};
    CHECK(code_of([&] { additive_mom_variance(uni, h1, kBox); }) == ErrorCode::DimensionTooSmall);
}

TEST_CASE("haar basis is orthonormal") {
    for (int levels : {1, 2, 3, 5}) {
        const auto gram = haar_gram(levels);
        CHECK(static_cast<std::size_t>(gram.rows()) == haar_size(levels));
        CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() <= 1e-12);
    }
    CHECK(haar_size(0) == 0);
    CHECK(haar_eval(0, 0, 0.25) == 1.0);
    CHECK(haar_eval(0, 0, 0.75) == -1.0);
    CHECK(haar_eval(0, 0, 1.0) == -1.0);
    CHECK(haar_eval(1, 1, 0.6) == doctest::Approx(std::sqrt(2.0)));
    CHECK(haar_eval(1, 0, 0.6) == 0.0);
    CHECK(dyadic_cell(1.0, 3) == 7);
    CHECK(dyadic_cell(0.5, 1) == 1);
}

TEST_CASE("haar identity behind the grouped sum") {
    Rng rng(2);
    for (int rep = 0; rep < 100; ++rep) {
        const int levels = 1 + static_cast<int>(rng.below(6));
        const double u = rng.uniform();
        const double v = rep % 3 == 0 ? u : rng.uniform();
        const auto a = haar_vector(u, levels);
        const auto b = haar_vector(v, levels);
        const double dot = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
        const double same = dyadic_cell(u, levels) == dyadic_cell(v, levels) ? std::ldexp(1.0, levels) : 0.0;
        CHECK(1.0 + dot == doctest::Approx(same).epsilon(1e-12));
    }
}

TEST_CASE("projection estimator") {
    const auto s = generate(kUnit, FunctionSpec{fn::Sinusoid{1.0, 1.0, 0.0}}, FunctionSpec::constant(1.0),
                            NoiseSpec::gaussian(), 500, 8);
    const auto empty = ProjectionConfig::from_design(kUnit, {0});
    CHECK(projection_variance(s, empty) == doctest::Approx(sample_variance(s.response)).epsilon(1e-14));

    Rng rng(31);
    for (int rep = 0; rep < 20; ++rep) {
        const int levels = 1 + static_cast<int>(rng.below(6));
        const auto cfg = ProjectionConfig::from_design(kUnit, {levels});
        const auto t = generate(kUnit, FunctionSpec{fn::Sinusoid{1.0, 2.0, 0.0}}, FunctionSpec::constant(0.5),
                                NoiseSpec::gaussian(), 20 + rng.below(100), 1000 + rep);
        CHECK(projection_variance(t, cfg) == doctest::Approx(projection_variance_direct(t, cfg)).epsilon(1e-10));
    }

    const DesignSpec d2{design::ProductOfUnivariate{{kUnit, kUnit}}};
    for (auto basis : {ProjectionBasis::Additive, ProjectionBasis::Tensor}) {
        for (int rep = 0; rep < 10; ++rep) {
            const auto cfg = ProjectionConfig::from_design(d2, {1 + rep % 3, 2 + rep % 2}, basis);
            const auto t = generate(
                d2, FunctionSpec{fn::Additive{{FunctionSpec{fn::Sinusoid{1.0, 1.0, 0.0}}, FunctionSpec::constant(1.0)}}},
                FunctionSpec::constant(1.0), NoiseSpec::gaussian(), 60 + 7 * rep, 50 + rep);
            CHECK(projection_variance(t, cfg) ==
                  doctest::Approx(projection_variance_direct(t, cfg)).epsilon(1e-10));
        }
    }

    // non-uniform design through the CDF transform
    const DesignSpec comb{design::CombSupport{{{0.0, 0.2}, {0.5, 0.9}}}};
    const auto cfg = ProjectionConfig::from_design(comb, {3});
    const auto t = generate(comb, FunctionSpec{fn::Polynomial{{0.0, 1.0}}}, FunctionSpec::constant(1.0),
                            NoiseSpec::gaussian(), 80, 4);
    CHECK(projection_variance(t, cfg) == doctest::Approx(projection_variance_direct(t, cfg)).epsilon(1e-10));

    CHECK(code_of([] { ProjectionConfig::from_design({design::GridGD{2}}, {2, 2}); }) ==
          ErrorCode::UnknownDesignCDF);
    CHECK(code_of([&] { projection_variance(t, ProjectionConfig::from_design(d2, {2, 2})); }) ==
          ErrorCode::DimensionMismatch);
}

TEST_CASE("projection estimator is unbiased under a null mean") {
    const auto cfg = ProjectionConfig::from_design(kUnit, {6});
    std::vector<double> estimates;
    for (int t = 0; t < 200; ++t) {
        const auto s = generate(kUnit, FunctionSpec::constant(0.0), FunctionSpec::constant(1.0),
                                NoiseSpec::gaussian(), 10000, 5000 + t);
        estimates.push_back(projection_variance(s, cfg));
    }
    const double se = std::sqrt(var_of(estimates) / static_cast<double>(estimates.size()));
    CHECK(std::abs(mean_of(estimates) - 1.0) <= 3.0 * se);
}

TEST_CASE("projection variance grows with the basis size") {
    const std::size_t n = 512;
    const auto small = ProjectionConfig::from_design(kUnit, {9});
    const auto large = ProjectionConfig::from_design(kUnit, {10});
    std::vector<double> a, b;
    for (int t = 0; t < 1500; ++t) {
        const auto s = generate(kUnit, FunctionSpec::constant(0.0), FunctionSpec::constant(1.0),
                                NoiseSpec::gaussian(), n, 9000 + t);
        a.push_back(projection_variance(s, small));
        b.push_back(projection_variance(s, large));
    }
    const double ratio = var_of(b) / var_of(a);
    CHECK(ratio > 1.25);
    CHECK(ratio < 1.75);
}

TEST_CASE("quadratic functional and conjugate variance") {
    const auto s = generate(kUnit, FunctionSpec::constant(0.0), FunctionSpec::constant(1.0), NoiseSpec::gaussian(),
                            10000, 61);
    const double q = quadratic_functional(s, FunctionSpec::constant(1.0), 1.0);
    CHECK(std::abs(q) <= 3.0 * std::sqrt(2.0 / 10000.0));
    CHECK(quadratic_functional(s, FunctionSpec::constant(0.0), 1.0) == 0.0);
    CHECK(code_of([&] { quadratic_functional(s, FunctionSpec::constant(-1.0), 1.0); }) ==
          ErrorCode::NegativeWeight);

    CHECK(conjugate_sigma2(s, FunctionSpec::constant(0.0), 0.3) == 0.0);
    CHECK(conjugate_sigma2(s, FunctionSpec::constant(1.0), 100.0) == 0.0);
    double second = 0.0;
    for (double y : s.response) second += y * y;
    second /= static_cast<double>(s.n);
    CHECK(conjugate_sigma2(s, FunctionSpec::constant(1.0), 0.0) == doctest::Approx(second).epsilon(1e-14));
    CHECK(std::abs(second - 1.0) < 0.05);

    CHECK(conjugate_sigma2(s, FunctionSpec::constant(2.0), 0.0) == doctest::Approx(second).epsilon(1e-14));
}

TEST_CASE("estimate record") {
    const auto rec = estimate_record("ustat", 1.25, 100, {0.1}, 42, 7);
    CHECK(rec.at("estimator") == "ustat");
    CHECK(rec.at("value") == 1.25);
    CHECK(rec.at("n") == 100);
    CHECK(rec.at("bandwidths").size() == 1);
    CHECK(rec.at("pairs_in_bandwidth") == 42);
    CHECK(rec.at("seed") == 7);
}
