#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "varest/kernels.hpp"

namespace varest {

enum class Scenario {
    HomoscedasticSmooth,
    HomoscedasticRough,
    VarFnPointwise,
    VarFnIntegrated,
    Multivariate,
    AdditiveGD,
    AdditiveMoM,
    Projection,
    PowerLaw,  // synthetic squared error c * n^exponent, no data
};

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view name);

struct ExperimentConfig {
    Scenario scenario = Scenario::HomoscedasticSmooth;
    std::vector<long long> n_grid;
    int trials_per_n = 200;
    double alpha = 1.0;
    double beta = 1.0;
    double constant_c1 = 1.0;
    double constant_c2 = 1.0;
    std::uint64_t base_seed = 1;
    KernelKind kernel = KernelKind::Box;
    double x_star = 0.5;              // variance-function target point
    int dimension = 2;                // multivariate and additive scenarios
    std::uint64_t instance_seed = 7;  // frozen heights of the rough mean
    int integrated_points = 64;       // design draws per integrated-loss evaluation
    double power_exponent = -1.0;     // PowerLaw only
    int threads = 0;                  // 0: hardware concurrency; never affects results
};

/// Throws InvalidArgument on a non-increasing grid, n < 4 or trials < 2.
void validate(const ExperimentConfig& cfg);

nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Risk exponent from the minimax rate of the scenario.
double theoretical_exponent(const ExperimentConfig& cfg);

struct RateResult {
    std::vector<long long> n_grid;
    std::vector<double> mse_per_n;
    std::vector<double> se_per_n;
    double slope = 0.0;
    double slope_se = 0.0;
    double theoretical_exponent = 0.0;
    ExperimentConfig config;
};

/// Squared error of one trial at sample size n with the given seed.
using TrialFunction = std::function<double(long long n, std::uint64_t seed)>;

/// Scenario trial: generate a sample, estimate, score against the truth.
TrialFunction make_trial(const ExperimentConfig& cfg);

RateResult run_rate_experiment(const ExperimentConfig& cfg);

/// Same engine with an injected trial. Seeds are base_seed ^ (i * 1e6 + t).
RateResult run_rate_experiment(const ExperimentConfig& cfg, const TrialFunction& trial);

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t n_index, std::size_t trial);

struct SlopeFit {
    double slope = 0.0;
    double se = 0.0;
};

/// OLS of log(values) on log(ns).
SlopeFit fit_loglog_slope(std::span<const double> ns, std::span<const double> values);

nlohmann::json to_json(const RateResult& result);
RateResult result_from_json(const nlohmann::json& j);

void persist(const RateResult& result, const std::filesystem::path& path);
RateResult load_result(const std::filesystem::path& path);

/// CSV `n,mse,se`.
std::string result_csv(const RateResult& result);

}  // namespace varest
