#include <cmath>
#include <filesystem>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "varest/datagen.hpp"
#include "varest/error.hpp"
#include "varest/serialize.hpp"

using namespace varest;
namespace fs = std::filesystem;

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

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

fs::path temp_dir() {
    auto dir = fs::temp_directory_path() / "varest_datagen_test";
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("noiseless zero model gives zero responses") {
    const auto s = generate(kUnit, FunctionSpec::constant(0.0), FunctionSpec::constant(0.0), NoiseSpec::gaussian(),
                            50, 3);
    for (double y : s.response) CHECK(y == 0.0);
    CHECK(s.n == 50);
    CHECK(s.d == 1);
}

TEST_CASE("generation is deterministic in the seed") {
    const FunctionSpec mean{fn::Sinusoid{1.0, 2.0, 0.3}};
    const auto a = generate(kUnit, mean, FunctionSpec::constant(1.0), NoiseSpec::gaussian(), 200, 99);
    const auto b = generate(kUnit, mean, FunctionSpec::constant(1.0), NoiseSpec::gaussian(), 200, 99);
    const auto c = generate(kUnit, mean, FunctionSpec::constant(1.0), NoiseSpec::gaussian(), 200, 100);
    CHECK(a.design == b.design);
    CHECK(a.response == b.response);
    CHECK(a.response != c.response);
    CHECK(a.meta == b.meta);
}

TEST_CASE("law of large numbers for the response") {
    const auto s = generate(kUnit, FunctionSpec::constant(5.0), FunctionSpec::constant(1.0), NoiseSpec::gaussian(),
                            100000, 11);
    CHECK(std::abs(mean_of(s.response) - 5.0) < 0.02);
    CHECK(std::abs(var_of(s.response) - 1.0) < 0.02);
}

TEST_CASE("noise laws are standardized") {
    NoiseSpec matched{NoiseKind::MomentMatched, moment_matched_distribution(5)};
    NoiseSpec rad{NoiseKind::Rademacher, {}};
    for (const auto& noise : {NoiseSpec::gaussian(), matched, rad}) {
        const auto s = generate(kUnit, FunctionSpec::constant(0.0), FunctionSpec::constant(1.0), noise, 100000, 5);
        CHECK(std::abs(mean_of(s.response)) < 0.02);
        CHECK(std::abs(var_of(s.response) - 1.0) < 0.02);
    }
    CHECK(fourth_moment(NoiseSpec::gaussian()) == 3.0);
    CHECK(fourth_moment(rad) == 1.0);
    CHECK(fourth_moment(matched) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("negative variance is rejected") {
    const FunctionSpec v{fn::Polynomial{{0.5, -1.0}}};
    CHECK(code_of([&] { generate(kUnit, FunctionSpec::constant(0.0), v, NoiseSpec::gaussian(), 100, 1); }) ==
          ErrorCode::NegativeVariance);
}

TEST_CASE("trapezoid comb evaluation") {
    const double h = 1.0 / 60.0;
    const FunctionSpec comb{fn::TrapezoidComb{h, 0.5, {1.0, -2.0, 3.0, 0.5, -1.0, 2.0, 1.0, 1.0, -1.0, 0.25}}};
    validate(comb);
    const auto& t = std::get<fn::TrapezoidComb>(comb.kind);
    for (std::size_t i = 1; i <= t.heights.size(); ++i) {
        const double mid = (6.0 * static_cast<double>(i) - 3.0) * h;
        CHECK(eval_function(comb, mid) == doctest::Approx(0.5 * t.heights[i - 1]));
        CHECK(eval_function(comb, (6.0 * i - 5.0) * h) == doctest::Approx(0.5 * t.heights[i - 1]));
        CHECK(eval_function(comb, 6.0 * (static_cast<double>(i) - 1.0) * h) == doctest::Approx(0.0));
        CHECK(eval_function(comb, (6.0 * i - 5.5) * h) == doctest::Approx(0.25 * t.heights[i - 1]));
    }
    CHECK(eval_function(comb, 1.0) == doctest::Approx(0.0));
    CHECK(code_of([&] { eval_function(comb, 1.5); }) == ErrorCode::OutOfDomain);
    CHECK(code_of([&] { eval_function(comb, -0.1); }) == ErrorCode::OutOfDomain);
}

TEST_CASE("trapezoid evaluation is continuous at breakpoints") {
    const double h = 1.0 / 42.0;
    const FunctionSpec comb{fn::TrapezoidComb{h, 1.0, {1.0, -1.0, 2.0, 0.5, -0.5, 1.5, -2.0}}};
    for (int k = 1; k < 42; ++k) {
        const double x = k * h;
        const double v = eval_function(comb, x);
        CHECK(std::abs(eval_function(comb, x + 1e-12) - v) <= 1e-6);
        CHECK(std::abs(eval_function(comb, x - 1e-12) - v) <= 1e-6);
    }
}

TEST_CASE("comb validation needs integral cell count") {
    CHECK(code_of([] { validate(FunctionSpec{fn::TrapezoidComb{0.1, 1.0, {1.0}}}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { validate(FunctionSpec{fn::TrapezoidComb{1.0 / 12.0, 1.0, {1.0}}}); }) ==
          ErrorCode::InvalidArgument);
    validate(FunctionSpec{fn::TrapezoidComb{1.0 / 12.0, 1.0, {1.0, 2.0}}});
}

TEST_CASE("smooth bump") {
    const FunctionSpec bump{fn::SmoothBump{0.5, 0.1, 2.0}};
    CHECK(eval_function(bump, 0.5) == 2.0);
    CHECK(eval_function(bump, 0.6) == 2.0);
    CHECK(eval_function(bump, 0.71) == 0.0);
    CHECK(eval_function(bump, 0.25) == 0.0);
    const double mid = eval_function(bump, 0.65);
    CHECK(mid == doctest::Approx(1.0).epsilon(1e-6));
    double prev = 2.0;
    for (int i = 0; i <= 100; ++i) {
        const double v = eval_function(bump, 0.6 + 0.1 * i / 100.0);
        CHECK(v <= prev + 1e-15);
        prev = v;
    }
    CHECK(unit_bump(1.0) == 1.0);
    CHECK(unit_bump(2.0) == 0.0);
    CHECK(unit_bump(-1.5) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("function kinds") {
    CHECK(eval_function(FunctionSpec{fn::Polynomial{{1.0, 2.0, 3.0}}}, 2.0) == 17.0);
    CHECK(eval_function(FunctionSpec{fn::Sinusoid{2.0, 1.0, 0.0}}, 0.25) == doctest::Approx(2.0));
    const FunctionSpec tab{fn::Tabulated{{0.0, 0.5, 1.0}, {0.0, 1.0, 3.0}}};
    CHECK(eval_function(tab, 0.75) == 2.0);
    CHECK(eval_function(tab, 1.0) == 3.0);
    CHECK(code_of([&] { eval_function(tab, 1.1); }) == ErrorCode::OutOfDomain);
    const FunctionSpec sum{fn::Sum{{FunctionSpec::constant(1.0), FunctionSpec{fn::Polynomial{{0.0, 1.0}}}}}};
    CHECK(eval_function(sum, 0.5) == 1.5);
    const FunctionSpec add{fn::Additive{{FunctionSpec::constant(1.0), FunctionSpec{fn::Polynomial{{0.0, 2.0}}}}}};
    const std::vector<double> x = {0.3, 0.25};
    CHECK(eval_function(add, std::span<const double>(x)) == 1.5);
    const std::vector<double> x3 = {0.3, 0.25, 0.1};
    CHECK(code_of([&] { eval_function(add, std::span<const double>(x3)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("designs") {
    Rng rng(4);
    const DesignSpec comb{design::CombSupport{{{0.1, 0.2}, {0.5, 0.55}, {0.9, 1.0}}}};
    const auto xs = draw_design(comb, 5000, rng);
    for (double x : xs) CHECK(in_support(comb, x));
    CHECK(design_cdf(comb, 0.2) == doctest::Approx(0.4));
    CHECK(design_cdf(comb, 0.525) == doctest::Approx(0.5));
    CHECK(design_cdf(comb, 1.0) == 1.0);

    const auto grid = draw_design({design::GridGD{2}}, 16, rng);
    REQUIRE(grid.size() == 32);
    CHECK(grid[0] == 0.25);
    CHECK(grid[1] == 0.25);
    CHECK(grid[2] == 0.25);
    CHECK(grid[3] == 0.5);
    CHECK(grid[30] == 1.0);
    CHECK(code_of([&] { draw_design({design::GridGD{2}}, 15, rng); }) == ErrorCode::InvalidSampleSize);

    const auto diag = draw_design({design::DiagonalDD{3}}, 4, rng);
    CHECK(diag[3] == 0.5);
    CHECK(diag[4] == 0.5);

    CHECK(code_of([] { design_cdf({design::GridGD{2}}, 0.5); }) == ErrorCode::UnknownDesignCDF);
    CHECK(code_of([] { validate(DesignSpec{design::CombSupport{{{0.2, 0.3}, {0.25, 0.4}}}}); }) ==
          ErrorCode::InvalidArgument);
}

TEST_CASE("homoscedastic hard instance") {
    const auto inst = hard_instance_homoscedastic(0.1, 1000, 1.0, 21);
    const auto& comb = std::get<fn::TrapezoidComb>(inst.mean.kind);
    const auto& support = std::get<design::CombSupport>(inst.design.kind);
    CHECK(inst.cells == static_cast<int>(comb.heights.size()));
    CHECK(6.0 * inst.h_realized * inst.cells == doctest::Approx(1.0).epsilon(1e-14));
    double total = 0.0;
    for (auto [a, b] : support.intervals) total += b - a;
    CHECK(total == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(inst.sigma0sq - inst.sigma1sq == doctest::Approx(std::pow(inst.h_realized, 0.2)).epsilon(1e-14));
    CHECK(std::abs(inst.h_realized / inst.h_requested - 1.0) < 0.2);
    CHECK(inst.q == 7);  // smallest odd above 1 + 1/(2 * 0.1) = 6
    const double bound = inst.heights_law.range();
    for (double r : comb.heights) CHECK(std::abs(r) <= bound);
    CHECK(comb.amplitude == doctest::Approx(std::pow(inst.h_realized, 0.1)));

    CHECK(code_of([] { hard_instance_homoscedastic(0.25, 1000, 1.0, 1); }) == ErrorCode::AlphaOutOfRange);
    CHECK(code_of([] { hard_instance_homoscedastic(0.5, 1000, 1.0, 1); }) == ErrorCode::AlphaOutOfRange);
}

TEST_CASE("null and alternative have the same marginal variance on the support") {
    const auto inst = hard_instance_homoscedastic(0.1, 1000, 1.0, 5);
    const auto null = generate(inst.design, FunctionSpec::constant(0.0), FunctionSpec::constant(inst.sigma0sq),
                               NoiseSpec::gaussian(), 100000, 1);
    const auto alt = generate(inst.design, inst.mean, FunctionSpec::constant(inst.sigma1sq), NoiseSpec::gaussian(),
                              100000, 2);
    CHECK(std::abs(var_of(null.response) - var_of(alt.response)) < 0.02);
    for (double x : alt.design) CHECK(in_support(inst.design, x));
}

TEST_CASE("variance-function hard instance") {
    const auto inst = hard_instance_varfn(0.05, 1.0, 0.5, 100000, 1.0, 3);
    const auto& lt = std::get<fn::LocalTrapezoid>(inst.mean.kind);
    CHECK(inst.cells == 2 * inst.half_count + 1);
    CHECK(inst.cells == static_cast<int>(lt.heights.size()));
    CHECK(inst.h2 / (2.0 * inst.h1) == doctest::Approx(inst.cells).epsilon(1e-12));
    CHECK(eval_function(inst.var1, 0.5) == doctest::Approx(1.0 - inst.h2).epsilon(1e-14));
    CHECK(eval_function(inst.var1, 0.5 + 2.0 * inst.h2 + 1e-9) == 1.0);
    CHECK(eval_function(inst.var1, 0.5 - 2.0 * inst.h2 - 1e-9) == 1.0);
    CHECK(eval_function(inst.var0, 0.3) == 1.0);

    const double plateau = 0.5 - inst.h2 + 2.0 * inst.h1;
    CHECK(eval_function(inst.mean, plateau) == doctest::Approx(std::pow(inst.h1, 0.05) * lt.heights[0]));
    CHECK(eval_function(inst.mean, 0.5 - inst.h2) == 0.0);
    CHECK(eval_function(inst.mean, 0.5 + inst.h2) == 0.0);

    Rng rng(8);
    const auto xs = draw_design(inst.design, 2000, rng);
    for (double x : xs) CHECK(in_support(inst.design, x));

    CHECK(code_of([] { hard_instance_varfn(0.5, 1.0, 0.5, 1000, 1.0, 1); }) == ErrorCode::SmoothnessRegime);
}

TEST_CASE("holder seminorm diagnostic") {
    CHECK(holder_seminorm(FunctionSpec::constant(-2.5), 0.5, 50) == 2.5);
    CHECK(holder_seminorm(FunctionSpec{fn::Polynomial{{0.0, 1.0}}}, 1.0, 101) == doctest::Approx(2.0));
    const auto inst = hard_instance_homoscedastic(0.1, 20, 1.0, 2);
    const double coarse = holder_seminorm(inst.mean, 0.1, 600);
    const double fine = holder_seminorm(inst.mean, 0.1, 1200);
    CHECK(std::isfinite(coarse));
    CHECK(fine == doctest::Approx(coarse).epsilon(0.25));
}

TEST_CASE("sample CSV and sidecar round trip") {
    const auto dir = temp_dir();
    const FunctionSpec mean{fn::Additive{{FunctionSpec{fn::Sinusoid{1.0, 1.0, 0.0}}, FunctionSpec::constant(0.5)}}};
    DesignSpec d{design::ProductOfUnivariate{{kUnit, kUnit}}};
    const auto s = generate(d, mean, FunctionSpec::constant(2.0), NoiseSpec::gaussian(), 30, 77);
    const auto path = dir / "sample.csv";
    write_sample(s, path);
    const auto text = read_text(path);
    CHECK(text.rfind("x_1,x_2,y\n", 0) == 0);

    const auto back = read_sample(path);
    CHECK(back.n == 30);
    CHECK(back.d == 2);
    CHECK(back.design == s.design);
    CHECK(back.response == s.response);
    CHECK(back.seed == 77);
    for (const char* key : {"seed", "design", "mean", "variance", "noise", "n"}) CHECK(back.meta.contains(key));
    CHECK(back.meta.at("design").get<DesignSpec>().kind.index() == d.kind.index());
    CHECK(code_of([&] { read_sample(dir / "missing.csv"); }) == ErrorCode::Io);
}

TEST_CASE("spec JSON round trips") {
    const std::vector<FunctionSpec> specs = {
        FunctionSpec::constant(1.5),
        {fn::Polynomial{{1.0, -2.0}}},
        {fn::Sinusoid{0.1, 2.0, 0.5}},
        {fn::SmoothBump{0.5, 0.1, -0.2}},
        {fn::TrapezoidComb{1.0 / 12.0, 0.3, {1.0, -1.0}}},
        {fn::LocalTrapezoid{0.5, 0.01, 0.03, 0.1, {1.0, 0.0, -1.0}}},
        {fn::Tabulated{{0.0, 1.0}, {2.0, 3.0}}},
        {fn::Sum{{FunctionSpec::constant(1.0), {fn::SmoothBump{0.5, 0.1, -0.2}}}}},
        {fn::Additive{{FunctionSpec::constant(1.0), FunctionSpec::constant(2.0)}}},
    };
    for (const auto& spec : specs) {
        const nlohmann::json j = spec;
        const auto back = j.get<FunctionSpec>();
        CHECK(nlohmann::json(back) == j);
    }
    CHECK(code_of([] { nlohmann::json{{"kind", "mystery"}}.get<FunctionSpec>(); }) == ErrorCode::SchemaMismatch);
    const NoiseSpec matched{NoiseKind::MomentMatched, moment_matched_distribution(5)};
    CHECK(nlohmann::json(nlohmann::json(matched).get<NoiseSpec>()) == nlohmann::json(matched));
}
