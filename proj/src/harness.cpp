#include "varest/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

#include "varest/datagen.hpp"
#include "varest/error.hpp"
#include "varest/numeric.hpp"
#include "varest/serialize.hpp"
#include "varest/var_estimators.hpp"
#include "varest/varfn_estimators.hpp"

namespace varest {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

struct ScenarioName {
    Scenario scenario;
    std::string_view name;
};

constexpr ScenarioName kScenarioNames[] = {
    {Scenario::HomoscedasticSmooth, "homoscedastic-smooth"},
    {Scenario::HomoscedasticRough, "homoscedastic-rough"},
    {Scenario::VarFnPointwise, "varfn-pointwise"},
    {Scenario::VarFnIntegrated, "varfn-integrated"},
    {Scenario::Multivariate, "multivariate"},
    {Scenario::AdditiveGD, "additive-gd"},
    {Scenario::AdditiveMoM, "additive-mom"},
    {Scenario::Projection, "projection"},
    {Scenario::PowerLaw, "power-law"},
};

// sin(2 pi x) / (2 pi): Lipschitz with constant one.
FunctionSpec smooth_mean() {
    return {fn::Sinusoid{1.0 / (2.0 * std::numbers::pi), 1.0, 0.0}};
}

FunctionSpec additive_mean(int d) {
    std::vector<FunctionSpec> parts;
    for (int k = 0; k < d; ++k) parts.push_back({fn::Sinusoid{1.0 / (2.0 * std::numbers::pi), 1.0, 0.25 * k}});
    return {fn::Additive{std::move(parts)}};
}

DesignSpec uniform_product(int d) {
    design::ProductOfUnivariate p;
    for (int k = 0; k < d; ++k) p.factors.push_back({design::UniformInterval{0.0, 1.0}});
    return {std::move(p)};
}

// 1 + x / 2
FunctionSpec linear_variance() {
    return {fn::Polynomial{{1.0, 0.5}}};
}

int projection_levels(double alpha, long long n) {
    const double scale = std::min(1.0, 1.0 / (4.0 * alpha));
    return std::max(0, static_cast<int>(std::ceil(std::log2(static_cast<double>(n)) * scale)));
}

double sq(double v) {
    return v * v;
}

}  // namespace

std::string_view to_string(Scenario s) {
    for (const auto& entry : kScenarioNames) {
        if (entry.scenario == s) return entry.name;
    }
    return "unknown";
}

Scenario parse_scenario(std::string_view name) {
    for (const auto& entry : kScenarioNames) {
        if (entry.name == name) return entry.scenario;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown scenario '" + std::string(name) + "'");
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.n_grid.size() < 2) throw Error(ErrorCode::InvalidArgument, "n_grid needs at least two sizes");
    for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
        if (cfg.n_grid[i] < 4) throw Error(ErrorCode::InvalidArgument, "every n must be >= 4");
        if (i > 0 && cfg.n_grid[i] <= cfg.n_grid[i - 1]) {
            throw Error(ErrorCode::InvalidArgument, "n_grid must be strictly increasing");
        }
    }
    if (cfg.trials_per_n < 2) throw Error(ErrorCode::InvalidArgument, "trials_per_n must be >= 2");
    if (!(cfg.alpha > 0.0) || !(cfg.beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "smoothness must be positive");
    if (!(cfg.constant_c1 > 0.0) || !(cfg.constant_c2 > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "bandwidth constants must be positive");
    }
    if (cfg.threads < 0) throw Error(ErrorCode::InvalidArgument, "threads must be >= 0");
    if (cfg.integrated_points < 1) throw Error(ErrorCode::InvalidArgument, "integrated_points must be >= 1");
    switch (cfg.scenario) {
        case Scenario::Multivariate:
        case Scenario::AdditiveGD:
        case Scenario::AdditiveMoM:
            if (cfg.dimension < 2) throw Error(ErrorCode::DimensionTooSmall, "scenario needs dimension >= 2");
            break;
        case Scenario::HomoscedasticRough:
            if (cfg.alpha >= 0.25) throw Error(ErrorCode::AlphaOutOfRange, "rough scenario needs alpha < 1/4");
            break;
        case Scenario::VarFnPointwise:
        case Scenario::VarFnIntegrated:
            if (!(cfg.x_star >= 0.0 && cfg.x_star <= 1.0)) throw Error(ErrorCode::OutOfDomain, "x_star must lie in [0, 1]");
            break;
        default: break;
    }
    if (cfg.scenario == Scenario::Multivariate && cfg.alpha > 1.0) {
        throw Error(ErrorCode::SmoothnessOutOfRange, "multivariate scenario needs alpha in (0, 1]");
    }
}

json to_json(const ExperimentConfig& cfg) {
    return {{"scenario", std::string(to_string(cfg.scenario))},
            {"n_grid", cfg.n_grid},
            {"trials_per_n", cfg.trials_per_n},
            {"alpha", cfg.alpha},
            {"beta", cfg.beta},
            {"constant_c1", cfg.constant_c1},
            {"constant_c2", cfg.constant_c2},
            {"base_seed", cfg.base_seed},
            {"kernel", std::string(to_string(cfg.kernel))},
            {"x_star", cfg.x_star},
            {"dimension", cfg.dimension},
            {"instance_seed", cfg.instance_seed},
            {"integrated_points", cfg.integrated_points},
            {"power_exponent", cfg.power_exponent}};
}

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::SchemaMismatch, "experiment config must be an object");
    ExperimentConfig cfg;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "scenario") cfg.scenario = parse_scenario(value.get<std::string>());
            else if (key == "n_grid") cfg.n_grid = value.get<std::vector<long long>>();
            else if (key == "trials_per_n") cfg.trials_per_n = value.get<int>();
            else if (key == "alpha") cfg.alpha = value.get<double>();
            else if (key == "beta") cfg.beta = value.get<double>();
            else if (key == "constant_c1") cfg.constant_c1 = value.get<double>();
            else if (key == "constant_c2") cfg.constant_c2 = value.get<double>();
            else if (key == "base_seed") cfg.base_seed = value.get<std::uint64_t>();
            else if (key == "kernel") cfg.kernel = parse_kernel_kind(value.get<std::string>());
            else if (key == "x_star") cfg.x_star = value.get<double>();
            else if (key == "dimension") cfg.dimension = value.get<int>();
            else if (key == "instance_seed") cfg.instance_seed = value.get<std::uint64_t>();
            else if (key == "integrated_points") cfg.integrated_points = value.get<int>();
            else if (key == "power_exponent") cfg.power_exponent = value.get<double>();
            else if (key == "threads") cfg.threads = value.get<int>();
            else throw Error(ErrorCode::SchemaMismatch, "unknown config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("bad experiment config: ") + e.what());
    }
    return cfg;
}

double theoretical_exponent(const ExperimentConfig& cfg) {
    const double a = cfg.alpha;
    const double b = cfg.beta;
    switch (cfg.scenario) {
        case Scenario::HomoscedasticSmooth:
        case Scenario::HomoscedasticRough:
        case Scenario::AdditiveMoM:
        case Scenario::Projection:
            return -std::min(8.0 * a / (4.0 * a + 1.0), 1.0);
        case Scenario::VarFnPointwise:
        case Scenario::VarFnIntegrated:
            return -std::min(8.0 * a * b / (4.0 * a * b + 2.0 * a + b), 2.0 * b / (2.0 * b + 1.0));
        case Scenario::Multivariate: {
            // equal smoothness in every coordinate, so the harmonic mean is alpha
            const double d = cfg.dimension;
            return -std::min(8.0 * a / (4.0 * a + d), 1.0);
        }
        case Scenario::AdditiveGD: return -1.0;
        case Scenario::PowerLaw: return cfg.power_exponent;
    }
    return 0.0;
}

TrialFunction make_trial(const ExperimentConfig& cfg) {
    validate(cfg);
    const KernelSpec kernel = KernelSpec::of(cfg.kernel);
    const auto noise = NoiseSpec::gaussian();
    const DesignSpec unit = {design::UniformInterval{0.0, 1.0}};

    switch (cfg.scenario) {
        case Scenario::HomoscedasticSmooth:
            return [=](long long n, std::uint64_t seed) {
                const auto s = generate(unit, smooth_mean(), FunctionSpec::constant(1.0), noise,
                                        static_cast<std::size_t>(n), seed);
                const double h = bandwidth_homoscedastic({cfg.alpha, std::nullopt, cfg.constant_c1, 1.0}, n);
                return sq(ustat_variance(s, h, kernel).value - 1.0);
            };

        case Scenario::HomoscedasticRough: {
            // One frozen comb per sample size, built before any trial runs.
            auto means = std::make_shared<std::map<long long, FunctionSpec>>();
            for (long long n : cfg.n_grid) {
                (*means)[n] = hard_instance_homoscedastic(cfg.alpha, n, cfg.constant_c1, cfg.instance_seed).mean;
            }
            return [=](long long n, std::uint64_t seed) {
                const auto it = means->find(n);
                const FunctionSpec mean = it != means->end()
                                              ? it->second
                                              : hard_instance_homoscedastic(cfg.alpha, n, cfg.constant_c1,
                                                                            cfg.instance_seed)
                                                    .mean;
                const auto s = generate(unit, mean, FunctionSpec::constant(1.0), noise, static_cast<std::size_t>(n),
                                        seed);
                const double h = bandwidth_homoscedastic({cfg.alpha, std::nullopt, cfg.constant_c1, 1.0}, n);
                return sq(ustat_variance(s, h, kernel).value - 1.0);
            };
        }

        case Scenario::VarFnPointwise:
        case Scenario::VarFnIntegrated:
            return [=](long long n, std::uint64_t seed) {
                const auto variance = linear_variance();
                const auto s = generate(unit, smooth_mean(), variance, noise, static_cast<std::size_t>(n), seed);
                const auto [h1, h2] =
                    bandwidth_varfn({cfg.alpha, cfg.beta, cfg.constant_c1, cfg.constant_c2}, n);
                const auto lp = LocalPolyConfig::for_smoothness(cfg.beta, h1, h2, kernel);
                if (cfg.scenario == Scenario::VarFnPointwise) {
                    return loss_pointwise(local_poly_varfn(s, cfg.x_star, lp), eval_function(variance, cfg.x_star));
                }
                const auto estimate = [&](double x) { return local_poly_varfn(s, x, lp); };
                return loss_integrated(estimate, variance, unit, static_cast<std::size_t>(cfg.integrated_points),
                                       Rng::mix(seed));
            };

        case Scenario::Multivariate:
            return [=](long long n, std::uint64_t seed) {
                const auto s = generate(uniform_product(cfg.dimension), additive_mean(cfg.dimension),
                                        FunctionSpec::constant(1.0), noise, static_cast<std::size_t>(n), seed);
                const std::vector<double> alphas(static_cast<std::size_t>(cfg.dimension), cfg.alpha);
                const auto h = bandwidth_multivariate(alphas, n, cfg.constant_c1);
                return sq(ustat_variance_multivariate(s, h, kernel).value - 1.0);
            };

        case Scenario::AdditiveGD:
            return [=](long long n, std::uint64_t seed) {
                const auto s = generate({design::GridGD{cfg.dimension}}, additive_mean(cfg.dimension),
                                        FunctionSpec::constant(1.0), noise, static_cast<std::size_t>(n), seed);
                return sq(additive_gd_variance(s.response, cfg.dimension) - 1.0);
            };

        case Scenario::AdditiveMoM:
            return [=](long long n, std::uint64_t seed) {
                const auto s = generate(uniform_product(cfg.dimension), additive_mean(cfg.dimension),
                                        FunctionSpec::constant(1.0), noise, static_cast<std::size_t>(n), seed);
                const std::vector<BandwidthPlan> plans(static_cast<std::size_t>(cfg.dimension),
                                                       BandwidthPlan{cfg.alpha, std::nullopt, cfg.constant_c1, 1.0});
                return sq(additive_mom_variance(s, plans, kernel) - 1.0);
            };

        case Scenario::Projection:
            return [=](long long n, std::uint64_t seed) {
                const auto s = generate(unit, smooth_mean(), FunctionSpec::constant(1.0), noise,
                                        static_cast<std::size_t>(n), seed);
                const auto pc = ProjectionConfig::from_design(unit, {projection_levels(cfg.alpha, n)});
                return sq(projection_variance(s, pc) - 1.0);
            };

        case Scenario::PowerLaw:
            return [=](long long n, std::uint64_t) {
                return cfg.constant_c1 * std::pow(static_cast<double>(n), cfg.power_exponent);
            };
    }
    throw Error(ErrorCode::InvalidArgument, "unhandled scenario");
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t n_index, std::size_t trial) {
    return base_seed ^ (static_cast<std::uint64_t>(n_index) * 1000000ULL + static_cast<std::uint64_t>(trial));
}

RateResult run_rate_experiment(const ExperimentConfig& cfg) {
    return run_rate_experiment(cfg, make_trial(cfg));
}

RateResult run_rate_experiment(const ExperimentConfig& cfg, const TrialFunction& trial) {
    validate(cfg);
    const std::size_t grid = cfg.n_grid.size();
    const auto trials = static_cast<std::size_t>(cfg.trials_per_n);
    const std::size_t tasks = grid * trials;
    std::vector<double> errors(tasks, 0.0);

    std::atomic<std::size_t> next{0};
    std::mutex failure_mutex;
    std::size_t failed_task = tasks;
    std::exception_ptr failure;

    auto worker = [&] {
        for (;;) {
            const std::size_t task = next.fetch_add(1);
            if (task >= tasks) return;
            const std::size_t i = task / trials;
            const std::size_t t = task % trials;
            try {
                errors[task] = trial(cfg.n_grid[i], trial_seed(cfg.base_seed, i, t));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (task < failed_task) {
                    failed_task = task;
                    failure = std::current_exception();
                }
                next.store(tasks);
                return;
            }
        }
    };

    unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
    workers = std::clamp(workers, 1u, static_cast<unsigned>(std::min<std::size_t>(tasks, 256)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    if (failure) {
        const std::size_t i = failed_task / trials;
        const std::size_t t = failed_task % trials;
        const std::string where = "trial " + std::to_string(t) + " at n=" + std::to_string(cfg.n_grid[i]);
        try {
            std::rethrow_exception(failure);
        } catch (const Error& e) {
            throw Error(e.code(), where + ": " + e.what());
        } catch (const std::exception& e) {
            throw std::runtime_error(where + ": " + e.what());
        }
    }

    RateResult result;
    result.config = cfg;
    result.n_grid = cfg.n_grid;
    result.theoretical_exponent = theoretical_exponent(cfg);
    const double tn = static_cast<double>(trials);
    for (std::size_t i = 0; i < grid; ++i) {
        CompensatedSum sum;
        for (std::size_t t = 0; t < trials; ++t) sum += errors[i * trials + t];
        const double mse = sum.value() / tn;
        CompensatedSum dev;
        for (std::size_t t = 0; t < trials; ++t) dev += sq(errors[i * trials + t] - mse);
        result.mse_per_n.push_back(mse);
        result.se_per_n.push_back(std::sqrt(dev.value() / (tn - 1.0) / tn));
    }
    std::vector<double> ns(cfg.n_grid.begin(), cfg.n_grid.end());
    const auto fit = fit_loglog_slope(ns, result.mse_per_n);
    result.slope = fit.slope;
    result.slope_se = fit.se;
    return result;
}

SlopeFit fit_loglog_slope(std::span<const double> ns, std::span<const double> values) {
    if (ns.size() != values.size()) throw Error(ErrorCode::DimensionMismatch, "ns and values differ in length");
    if (ns.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two points");
    const std::size_t k = ns.size();
    std::vector<double> lx(k);
    std::vector<double> ly(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (!(ns[i] > 0.0) || !(values[i] > 0.0)) {
            throw Error(ErrorCode::NonPositiveValue, "log-log fit needs positive sizes and values");
        }
        lx[i] = std::log(ns[i]);
        ly[i] = std::log(values[i]);
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(k);
    my /= static_cast<double>(k);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw Error(ErrorCode::InvalidArgument, "sizes must not all be equal");
    SlopeFit fit;
    fit.slope = sxy / sxx;
    if (k > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < k; ++i) rss += sq(ly[i] - my - fit.slope * (lx[i] - mx));
        fit.se = std::sqrt(rss / static_cast<double>(k - 2) / sxx);
    }
    return fit;
}

json to_json(const RateResult& result) {
    return {{"schema_version", kSchemaVersion},
            {"config", to_json(result.config)},
            {"n_grid", result.n_grid},
            {"mse_per_n", result.mse_per_n},
            {"se_per_n", result.se_per_n},
            {"slope", result.slope},
            {"slope_se", result.slope_se},
            {"theoretical_exponent", result.theoretical_exponent}};
}

RateResult result_from_json(const json& j) {
    if (!j.is_object() || !j.contains("schema_version")) {
        throw Error(ErrorCode::SchemaMismatch, "result has no schema_version");
    }
    if (!j.at("schema_version").is_number_integer() || j.at("schema_version").get<int>() != kSchemaVersion) {
        throw Error(ErrorCode::SchemaMismatch, "unsupported schema_version " + j.at("schema_version").dump());
    }
    RateResult r;
    try {
        r.config = config_from_json(j.at("config"));
        r.n_grid = j.at("n_grid").get<std::vector<long long>>();
        r.mse_per_n = j.at("mse_per_n").get<std::vector<double>>();
        r.se_per_n = j.at("se_per_n").get<std::vector<double>>();
        r.slope = j.at("slope").get<double>();
        r.slope_se = j.at("slope_se").get<double>();
        r.theoretical_exponent = j.at("theoretical_exponent").get<double>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("bad result: ") + e.what());
    }
    if (r.mse_per_n.size() != r.n_grid.size() || r.se_per_n.size() != r.n_grid.size()) {
        throw Error(ErrorCode::SchemaMismatch, "result arrays differ in length");
    }
    return r;
}

void persist(const RateResult& result, const std::filesystem::path& path) {
    write_text(path, to_json(result).dump(2) + "\n");
}

RateResult load_result(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaMismatch, "cannot parse '" + path.string() + "': " + e.what());
    }
    return result_from_json(j);
}

std::string result_csv(const RateResult& result) {
    std::string text = "n,mse,se\n";
    for (std::size_t i = 0; i < result.n_grid.size(); ++i) {
        text += std::to_string(result.n_grid[i]) + "," + format_double(result.mse_per_n[i]) + "," +
                format_double(result.se_per_n[i]) + "\n";
    }
    return text;
}

}  // namespace varest
