#include "varest/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "varest/error.hpp"
#include "varest/harness.hpp"
#include "varest/lb_tools.hpp"
#include "varest/serialize.hpp"
#include "varest/var_estimators.hpp"
#include "varest/varfn_estimators.hpp"

namespace varest::cli {

using nlohmann::json;

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = text.find(sep, start);
        out.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_number(std::string_view text) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(ErrorCode::InvalidArgument, "not a number: '" + std::string(text) + "'");
    }
    return v;
}

std::vector<double> parse_numbers(std::string_view text, std::size_t min_count, std::size_t max_count,
                                  std::string_view what) {
    std::vector<double> out;
    if (!text.empty()) {
        for (const auto& part : split(text, ',')) out.push_back(parse_number(part));
    }
    if (out.size() < min_count || out.size() > max_count) {
        throw Error(ErrorCode::InvalidArgument, "wrong number of parameters for " + std::string(what));
    }
    return out;
}

int parse_int(std::string_view text) {
    const double v = parse_number(text);
    if (v != std::floor(v) || std::abs(v) > 1e9) {
        throw Error(ErrorCode::InvalidArgument, "not an integer: '" + std::string(text) + "'");
    }
    return static_cast<int>(v);
}

std::pair<std::string, std::string> head_tail(std::string_view text) {
    const auto pos = text.find(':');
    if (pos == std::string_view::npos) return {std::string(text), ""};
    return {std::string(text.substr(0, pos)), std::string(text.substr(pos + 1))};
}

template <class T>
std::optional<T> parse_json_spec(std::string_view text) {
    json j;
    if (!text.empty() && text.front() == '{') {
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::InvalidArgument, std::string("bad inline JSON spec: ") + e.what());
        }
    } else if (!text.empty() && text.front() == '@') {
        try {
            j = json::parse(read_text(std::string(text.substr(1))));
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::InvalidArgument, std::string("bad JSON spec file: ") + e.what());
        }
    } else {
        return std::nullopt;
    }
    try {
        return j.get<T>();
    } catch (const Error& e) {
        throw Error(ErrorCode::InvalidArgument, e.what());
    }
}

}  // namespace

DesignSpec parse_design(std::string_view text) {
    if (auto spec = parse_json_spec<DesignSpec>(text)) {
        validate(*spec);
        return *spec;
    }
    const auto [kind, args] = head_tail(text);
    DesignSpec spec;
    if (kind == "uniform") {
        const auto v = parse_numbers(args, 2, 2, "uniform:a,b");
        spec = {design::UniformInterval{v[0], v[1]}};
    } else if (kind == "comb") {
        design::CombSupport c;
        for (const auto& part : split(args, ';')) {
            const auto v = parse_numbers(part, 2, 2, "comb interval a,b");
            c.intervals.emplace_back(v[0], v[1]);
        }
        spec = {std::move(c)};
    } else if (kind == "grid") {
        spec = {design::GridGD{parse_int(args)}};
    } else if (kind == "diag") {
        spec = {design::DiagonalDD{parse_int(args)}};
    } else if (kind == "product") {
        design::ProductOfUnivariate p;
        for (const auto& part : split(args, '*')) p.factors.push_back(parse_design(part));
        spec = {std::move(p)};
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown design '" + kind + "'");
    }
    validate(spec);
    return spec;
}

FunctionSpec parse_function(std::string_view text) {
    if (auto spec = parse_json_spec<FunctionSpec>(text)) {
        validate(*spec);
        return *spec;
    }
    const auto [kind, args] = head_tail(text);
    FunctionSpec spec;
    if (kind == "const") {
        spec = FunctionSpec::constant(parse_numbers(args, 1, 1, "const:v")[0]);
    } else if (kind == "poly") {
        spec = {fn::Polynomial{parse_numbers(args, 1, 64, "poly:c0,c1,...")}};
    } else if (kind == "sine") {
        const auto v = parse_numbers(args, 2, 3, "sine:amplitude,frequency[,phase]");
        spec = {fn::Sinusoid{v[0], v[1], v.size() > 2 ? v[2] : 0.0}};
    } else if (kind == "bump") {
        const auto v = parse_numbers(args, 3, 3, "bump:center,width,height");
        spec = {fn::SmoothBump{v[0], v[1], v[2]}};
    } else if (kind == "sum") {
        fn::Sum s;
        for (const auto& part : split(args, '+')) s.terms.push_back(parse_function(part));
        spec = {std::move(s)};
    } else if (kind == "additive") {
        fn::Additive a;
        for (const auto& part : split(args, ';')) a.components.push_back(parse_function(part));
        spec = {std::move(a)};
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown function '" + kind + "'");
    }
    validate(spec);
    return spec;
}

NoiseSpec parse_noise(std::string_view text) {
    if (auto spec = parse_json_spec<NoiseSpec>(text)) {
        validate(*spec);
        return *spec;
    }
    const auto [kind, args] = head_tail(text);
    NoiseSpec spec;
    if (kind == "gaussian") {
        spec.kind = NoiseKind::Gaussian;
    } else if (kind == "rademacher") {
        spec.kind = NoiseKind::Rademacher;
    } else if (kind == "matched") {
        spec.kind = NoiseKind::MomentMatched;
        spec.matched = moment_matched_distribution(parse_int(args));
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown noise '" + kind + "'");
    }
    validate(spec);
    return spec;
}

namespace {

// Thrown for failures detected after validation; always maps to exit code 1.
struct RuntimeFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string normalize_key(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    static const std::map<std::string, std::string> aliases = {
        {"trials-per-n", "trials"}, {"base-seed", "seed"}, {"constant-c1", "c1"}, {"constant-c2", "c2"}};
    if (const auto it = aliases.find(key); it != aliases.end()) return it->second;
    return key;
}

std::vector<std::string> json_to_results(const json& value) {
    std::vector<std::string> out;
    auto scalar = [](const json& v) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump();
    };
    if (value.is_array()) {
        for (const auto& v : value) out.push_back(scalar(v));
    } else {
        out.push_back(scalar(value));
    }
    return out;
}

// Fills options that were not given on the command line from a JSON object.
void merge_config(CLI::App& cmd, const std::string& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidArgument, "cannot parse config '" + path + "': " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "config file must hold a JSON object");
    for (const auto& [raw_key, value] : j.items()) {
        const auto key = normalize_key(raw_key);
        if (key == "config" || key == "threads-hint") {
            throw Error(ErrorCode::InvalidArgument, "config key '" + raw_key + "' is not allowed");
        }
        CLI::Option* opt = cmd.get_option_no_throw("--" + key);
        if (opt == nullptr) throw Error(ErrorCode::InvalidArgument, "unknown config key '" + raw_key + "'");
        if (opt->count() > 0) continue;
        for (const auto& result : json_to_results(value)) opt->add_result(result);
        try {
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw Error(ErrorCode::InvalidArgument, "config key '" + raw_key + "': " + e.what());
        }
    }
}

void print_json(std::ostream& out, const json& j) {
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string design = "uniform:0,1";
    std::string mean = "const:0";
    std::string variance = "const:1";
    std::string noise = "gaussian";
    long long n = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::string config;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    if (a.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
    if (a.n < 1) throw Error(ErrorCode::InvalidSampleSize, "--n must be >= 1");
    const auto design = parse_design(a.design);
    const auto mean = parse_function(a.mean);
    const auto variance = parse_function(a.variance);
    const auto noise = parse_noise(a.noise);
    const auto sample = generate(design, mean, variance, noise, static_cast<std::size_t>(a.n), a.seed);
    try {
        write_sample(sample, a.out);
    } catch (const Error& e) {
        throw RuntimeFailure(e.what());
    }
    print_json(out, {{"command", "simulate"},
                     {"config",
                      {{"design", a.design},
                       {"mean", a.mean},
                       {"var", a.variance},
                       {"noise", a.noise},
                       {"n", a.n},
                       {"seed", a.seed}}},
                     {"csv", a.out},
                     {"sidecar", sidecar_path(a.out).string()},
                     {"rows", sample.n},
                     {"dimension", sample.d}});
    return kSuccess;
}

struct EstimateArgs {
    std::string input;
    std::string estimator;
    std::vector<double> h;
    std::vector<double> alpha;
    std::optional<double> beta;
    double c1 = 1.0;
    double c2 = 1.0;
    std::string kernel = "box";
    std::optional<double> x_star;
    std::optional<double> tau;
    std::vector<int> levels;
    bool tensor = false;
    std::string design;
    std::string weight = "const:1";
    std::optional<double> sigma2;
    int curve_points = 0;
    std::string out;
    std::string config;
};

json estimate_config_echo(const EstimateArgs& a) {
    json j = {{"input", a.input}, {"estimator", a.estimator}, {"kernel", a.kernel}, {"c1", a.c1}, {"c2", a.c2}};
    if (!a.h.empty()) j["h"] = a.h;
    if (!a.alpha.empty()) j["alpha"] = a.alpha;
    if (a.beta) j["beta"] = *a.beta;
    if (a.x_star) j["x_star"] = *a.x_star;
    if (a.tau) j["tau"] = *a.tau;
    if (!a.levels.empty()) j["levels"] = a.levels;
    if (a.tensor) j["tensor"] = true;
    if (!a.design.empty()) j["design"] = a.design;
    if (a.estimator == "qfunc") j["weight"] = a.weight;
    if (a.sigma2) j["sigma2"] = *a.sigma2;
    if (a.curve_points > 0) j["curve_points"] = a.curve_points;
    if (!a.out.empty()) j["out"] = a.out;
    return j;
}

double single_alpha(const EstimateArgs& a) {
    if (a.alpha.size() != 1) throw Error(ErrorCode::InvalidArgument, "--alpha needs exactly one value here");
    return a.alpha[0];
}

std::vector<double> coordinate_alphas(const EstimateArgs& a, std::size_t d) {
    if (a.alpha.size() == 1) return std::vector<double>(d, a.alpha[0]);
    if (a.alpha.size() != d) throw Error(ErrorCode::DimensionMismatch, "--alpha needs one value or one per coordinate");
    return a.alpha;
}

// Bandwidth for the univariate difference estimator: explicit --h or the
// rate rule from --alpha.
double univariate_bandwidth(const EstimateArgs& a, std::size_t n) {
    if (!a.h.empty()) {
        if (a.h.size() != 1) throw Error(ErrorCode::InvalidArgument, "--h needs exactly one value here");
        return a.h[0];
    }
    if (a.alpha.empty()) throw Error(ErrorCode::InvalidArgument, "give --h or --alpha");
    return bandwidth_homoscedastic({single_alpha(a), std::nullopt, a.c1, a.c2}, static_cast<long long>(n));
}

std::pair<double, double> varfn_bandwidths(const EstimateArgs& a, std::size_t n) {
    if (!a.h.empty()) {
        if (a.h.size() != 2) throw Error(ErrorCode::InvalidArgument, "--h needs h1,h2 for variance-function estimators");
        return {a.h[0], a.h[1]};
    }
    if (a.alpha.empty()) throw Error(ErrorCode::InvalidArgument, "give --h h1,h2 or --alpha with --beta");
    if (!a.beta) throw Error(ErrorCode::MissingBeta, "--beta is required to derive variance-function bandwidths");
    return bandwidth_varfn({single_alpha(a), a.beta, a.c1, a.c2}, static_cast<long long>(n));
}

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
    static const std::vector<std::string> known = {"ustat",       "ustat-mv",   "diff",     "additive-gd", "additive-mom",
                                                    "projection", "lp-varfn",   "nw-varfn", "qfunc"};
    if (std::find(known.begin(), known.end(), a.estimator) == known.end()) {
        throw Error(ErrorCode::InvalidArgument, "unknown estimator '" + a.estimator + "'");
    }
    if (a.input.empty()) throw Error(ErrorCode::InvalidArgument, "--input is required");
    if ((a.estimator == "lp-varfn" || a.estimator == "nw-varfn") && !a.x_star && a.curve_points == 0) {
        throw Error(ErrorCode::InvalidArgument, "--x-star is required for " + a.estimator);
    }
    const KernelSpec kernel = KernelSpec::of(parse_kernel_kind(a.kernel));

    SampleSet sample;
    try {
        sample = read_sample(a.input);
    } catch (const Error& e) {
        throw RuntimeFailure(e.what());
    }
    const std::size_t n = sample.n;

    double value = 0.0;
    std::vector<double> bandwidths;
    long long pairs = -1;
    json extra = json::object();

    if (a.estimator == "ustat") {
        const double h = univariate_bandwidth(a, n);
        const auto est = ustat_variance(sample, h, kernel);
        value = est.value;
        bandwidths = {h};
        pairs = est.pairs_in_bandwidth;
        extra = {{"numerator", est.numerator}, {"denominator", est.denominator}};
    } else if (a.estimator == "ustat-mv") {
        if (!a.h.empty()) {
            bandwidths = a.h;
        } else if (!a.alpha.empty()) {
            bandwidths = bandwidth_multivariate(coordinate_alphas(a, sample.d), static_cast<long long>(n), a.c1);
        } else {
            throw Error(ErrorCode::InvalidArgument, "give --h or --alpha");
        }
        const auto est = ustat_variance_multivariate(sample, bandwidths, kernel);
        value = est.value;
        pairs = est.pairs_in_bandwidth;
        extra = {{"numerator", est.numerator}, {"denominator", est.denominator}};
    } else if (a.estimator == "diff") {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](auto l, auto r) { return sample.x(l) < sample.x(r); });
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = sample.response[order[i]];
        value = diff_variance_equidistant(y);
    } else if (a.estimator == "additive-gd") {
        value = additive_gd_variance(sample.response, static_cast<int>(sample.d));
    } else if (a.estimator == "additive-mom") {
        if (!a.h.empty()) {
            bandwidths = a.h;
        } else if (!a.alpha.empty()) {
            for (double al : coordinate_alphas(a, sample.d)) {
                bandwidths.push_back(bandwidth_homoscedastic({al, std::nullopt, a.c1, a.c2}, static_cast<long long>(n)));
            }
        } else {
            throw Error(ErrorCode::InvalidArgument, "give --h or --alpha");
        }
        value = additive_mom_variance(sample, bandwidths, kernel);
    } else if (a.estimator == "projection") {
        DesignSpec law;
        if (!a.design.empty()) {
            law = parse_design(a.design);
        } else if (sample.meta.contains("design")) {
            law = sample.meta.at("design").get<DesignSpec>();
        } else {
            throw Error(ErrorCode::UnknownDesignCDF, "no design law: pass --design or keep the sidecar");
        }
        std::vector<int> levels = a.levels;
        if (levels.empty()) {
            const int j = static_cast<int>(std::ceil(std::log2(static_cast<double>(n))));
            levels.assign(sample.d, j);
        }
        if (levels.size() == 1 && sample.d > 1) levels.assign(sample.d, levels[0]);
        const auto cfg = ProjectionConfig::from_design(law, levels, a.tensor ? ProjectionBasis::Tensor
                                                                            : ProjectionBasis::Additive);
        value = projection_variance(sample, cfg);
        extra = {{"levels", levels}, {"basis", a.tensor ? "tensor" : "additive"}};
    } else if (a.estimator == "lp-varfn" || a.estimator == "nw-varfn") {
        const auto [h1, h2] = varfn_bandwidths(a, n);
        bandwidths = {h1, h2};
        if (a.estimator == "nw-varfn") {
            value = nw_varfn(sample, *a.x_star, h1, h2, kernel);
            extra = {{"x_star", *a.x_star}};
        } else {
            auto cfg = LocalPolyConfig::for_smoothness(a.beta.value_or(1.0), h1, h2, kernel);
            cfg.tau = a.tau;
            if (a.curve_points > 0) {
                if (a.out.empty()) throw Error(ErrorCode::InvalidArgument, "--curve needs --out");
                std::vector<double> grid(static_cast<std::size_t>(a.curve_points));
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    grid[i] = grid.size() == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(grid.size() - 1);
                }
                const auto values = estimate_curve(sample, grid, cfg);
                auto meta = curve_metadata(cfg, n, sample.seed);
                meta["config"] = estimate_config_echo(a);
                try {
                    write_text(a.out, curve_csv(grid, values));
                    write_text(sidecar_path(a.out), meta.dump(2) + "\n");
                } catch (const Error& e) {
                    throw RuntimeFailure(e.what());
                }
                extra["curve_csv"] = a.out;
            }
            if (a.x_star) value = local_poly_varfn(sample, *a.x_star, cfg);
            extra["ell"] = cfg.ell;
            extra["tau_n"] = cfg.ridge(n);
            if (a.x_star) extra["x_star"] = *a.x_star;
        }
    } else {  // qfunc
        const auto w = parse_function(a.weight);
        double sigma2 = 0.0;
        if (a.sigma2) {
            sigma2 = *a.sigma2;
        } else {
            const double h = univariate_bandwidth(a, n);
            bandwidths = {h};
            sigma2 = ustat_variance(sample, h, kernel).value;
        }
        value = quadratic_functional(sample, w, sigma2);
        extra = {{"sigma2_hat", sigma2}};
    }

    auto record = estimate_record(a.estimator, value, n, bandwidths, pairs, sample.seed);
    if (pairs < 0) record["pairs_in_bandwidth"] = nullptr;
    for (const auto& [k, v] : extra.items()) record[k] = v;
    record["config"] = estimate_config_echo(a);
    print_json(out, record);
    return kSuccess;
}

struct RateArgs {
    std::string scenario;
    std::vector<long long> n_grid;
    int trials = 200;
    double alpha = 1.0;
    double beta = 1.0;
    double c1 = 1.0;
    double c2 = 1.0;
    std::uint64_t seed = 1;
    std::string kernel = "box";
    double x_star = 0.5;
    int dimension = 2;
    std::uint64_t instance_seed = 7;
    int integrated_points = 64;
    double power_exponent = -1.0;
    int threads = 0;
    std::string out;
    std::string config;
};

int cmd_rate(const RateArgs& a, std::ostream& out) {
    if (a.scenario.empty()) throw Error(ErrorCode::InvalidArgument, "--scenario is required");
    if (a.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
    ExperimentConfig cfg;
    cfg.scenario = parse_scenario(a.scenario);
    cfg.n_grid = a.n_grid;
    cfg.trials_per_n = a.trials;
    cfg.alpha = a.alpha;
    cfg.beta = a.beta;
    cfg.constant_c1 = a.c1;
    cfg.constant_c2 = a.c2;
    cfg.base_seed = a.seed;
    cfg.kernel = parse_kernel_kind(a.kernel);
    cfg.x_star = a.x_star;
    cfg.dimension = a.dimension;
    cfg.instance_seed = a.instance_seed;
    cfg.integrated_points = a.integrated_points;
    cfg.power_exponent = a.power_exponent;
    cfg.threads = a.threads;
    validate(cfg);

    RateResult result;
    try {
        result = run_rate_experiment(cfg);
        persist(result, a.out);
        std::filesystem::path csv = a.out;
        csv.replace_extension(".csv");
        write_text(csv, result_csv(result));
    } catch (const std::exception& e) {
        throw RuntimeFailure(e.what());
    }
    std::filesystem::path csv = a.out;
    csv.replace_extension(".csv");
    print_json(out, {{"command", "rate"},
                     {"config", to_json(cfg)},
                     {"slope", result.slope},
                     {"slope_se", result.slope_se},
                     {"theoretical_exponent", result.theoretical_exponent},
                     {"json", a.out},
                     {"csv", csv.string()}});
    return kSuccess;
}

struct LbDemoArgs {
    double alpha = 0.0;
    std::optional<double> beta;
    long long n = 1000;
    double c = 1.0;
    double x_star = 0.5;
    std::uint64_t seed = 0;
    long long occupancy_trials = 10000;
    long long tv_points = 300;
    long long mc_dim = 3;
    long long mc_samples = 100000;
    int quad_points = 40;
    std::string out;
    std::string config;
};

json param_values(const std::vector<std::pair<double, double>>& rows) {
    json arr = json::array();
    for (const auto& [p, v] : rows) arr.push_back({{"param", p}, {"value", v}});
    return arr;
}

int cmd_lbdemo(const LbDemoArgs& a, std::ostream& out) {
    if (!(a.alpha > 0.0) || a.alpha >= 0.25) {
        throw Error(ErrorCode::AlphaOutOfRange, "lb-demo needs 0 < alpha < 1/4");
    }
    if (a.n < 2) throw Error(ErrorCode::InvalidSampleSize, "--n must be >= 2");
    if (a.occupancy_trials < 1 || a.tv_points < 1 || a.mc_dim < 1 || a.mc_dim > a.tv_points || a.mc_samples < 2 ||
        a.quad_points < 2) {
        throw Error(ErrorCode::InvalidArgument, "demo sizes must be positive with mc-dim <= tv-points");
    }
    const auto inst = hard_instance_homoscedastic(a.alpha, a.n, a.c, a.seed);
    const double theta2 = std::pow(inst.h_realized, 2.0 * a.alpha);

    json result;
    result["command"] = "lb-demo";
    json cfg = {{"alpha", a.alpha},
                {"n", a.n},
                {"c", a.c},
                {"seed", a.seed},
                {"occupancy_trials", a.occupancy_trials},
                {"tv_points", a.tv_points},
                {"mc_dim", a.mc_dim},
                {"mc_samples", a.mc_samples},
                {"quad_points", a.quad_points}};
    if (a.beta) {
        cfg["beta"] = *a.beta;
        cfg["x_star"] = a.x_star;
    }
    result["config"] = cfg;
    result["instance"] = {{"h_requested", inst.h_requested},
                          {"h_realized", inst.h_realized},
                          {"cells", inst.cells},
                          {"theta_sq", theta2},
                          {"sigma0_sq", inst.sigma0sq},
                          {"sigma1_sq", inst.sigma1sq},
                          {"null_mean", FunctionSpec::constant(0.0)},
                          {"alternative_mean", inst.mean},
                          {"design", inst.design}};

    json moments = json::array();
    double worst = 0.0;
    for (int j = 1; j <= inst.q; ++j) {
        const double m = dist_moment(inst.heights_law, j);
        const double target = normal_moment(j);
        worst = std::max(worst, std::abs(m - target));
        moments.push_back({{"param", j}, {"value", m}, {"normal", target}});
    }
    result["moment_matched"] = {{"q", inst.q},
                                {"atoms", inst.heights_law.atoms},
                                {"probs", inst.heights_law.probs},
                                {"moments", moments},
                                {"max_moment_error", worst}};

    // Conditional covariances given the design: cells share a random height.
    Rng rng(Rng::mix(a.seed ^ 0x5eedULL));
    const auto xs = draw_design(inst.design, static_cast<std::size_t>(a.n), rng);
    const auto k = static_cast<Eigen::Index>(std::min<long long>(a.n, a.tv_points));
    std::vector<long long> cell(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) {
        cell[static_cast<std::size_t>(i)] = static_cast<long long>(std::floor(xs[static_cast<std::size_t>(i)] / (6.0 * inst.h_realized)));
    }
    auto covariances = [&](Eigen::Index dim) {
        Eigen::MatrixXd s0 = inst.sigma0sq * Eigen::MatrixXd::Identity(dim, dim);
        Eigen::MatrixXd s1 = Eigen::MatrixXd::Identity(dim, dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            for (Eigen::Index j = 0; j < dim; ++j) {
                if (cell[static_cast<std::size_t>(i)] == cell[static_cast<std::size_t>(j)]) s1(i, j) += theta2;
            }
        }
        return std::pair{s0, s1};
    };
    const auto [s0, s1] = covariances(k);
    const auto bounds = gaussian_tv_bound(s0, s1);
    const auto [m0, m1] = covariances(static_cast<Eigen::Index>(a.mc_dim));
    const GaussianLaw p(m1);
    const GaussianLaw q(m0);
    const auto mc = tv_monte_carlo([&](std::span<const double> y) { return std::exp(p.log_density(y)); },
                                   [&](std::span<const double> y) { return std::exp(q.log_density(y)); },
                                   [&](Rng& r, std::span<double> y) { q.draw(r, y); },
                                   static_cast<std::size_t>(a.mc_dim), static_cast<std::size_t>(a.mc_samples),
                                   Rng::mix(a.seed ^ 0x7fULL));
    const auto mc_bounds = gaussian_tv_bound(m0, m1);
    result["tv"] = {{"design_points", k},
                    {"rho", bounds.rho},
                    {"lower", bounds.lower},
                    {"upper", bounds.upper},
                    {"monte_carlo",
                     {{"dim", a.mc_dim},
                      {"samples", a.mc_samples},
                      {"value", mc.value},
                      {"se", mc.se},
                      {"lower", mc_bounds.lower},
                      {"upper", mc_bounds.upper}}}};

    const auto hist = multinomial_max_occupancy(a.n, inst.cells, a.occupancy_trials, Rng::mix(a.seed ^ 0x0cULL));
    std::vector<std::pair<double, double>> hist_rows;
    int top = 2;
    for (const auto& [r, pr] : hist) {
        hist_rows.emplace_back(r, pr);
        top = std::max(top, r + 1);
    }
    std::vector<std::pair<double, double>> lambda_rows;
    for (int r = 2; r <= top; ++r) {
        lambda_rows.emplace_back(r, kolchin_lambda(static_cast<double>(a.n), inst.cells, r));
    }
    result["occupancy"] = {{"balls", a.n},
                           {"bins", inst.cells},
                           {"trials", a.occupancy_trials},
                           {"histogram", param_values(hist_rows)},
                           {"lambda", param_values(lambda_rows)}};

    json chi2 = json::array();
    for (double theta : {0.05, 0.1, 0.2, std::sqrt(theta2)}) {
        chi2.push_back({{"param", theta},
                        {"value", mixture_chi2(theta, 1, inst.heights_law, 1.0, a.quad_points)},
                        {"series_bound", mixture_chi2_series_bound(theta, 1, inst.heights_law, 1.0)}});
    }
    result["chi2"] = chi2;

    if (a.beta) {
        const auto vf = hard_instance_varfn(a.alpha, *a.beta, a.x_star, a.n, a.c, a.seed);
        result["varfn_instance"] = {{"h1", vf.h1},     {"h2", vf.h2},       {"h1_requested", vf.h1_requested},
                                    {"cells", vf.cells}, {"q", vf.q},       {"mean", vf.mean},
                                    {"var0", vf.var0},   {"var1", vf.var1}, {"design", vf.design}};
    }

    if (!a.out.empty()) {
        try {
            write_text(a.out, result.dump(2) + "\n");
        } catch (const Error& e) {
            throw RuntimeFailure(e.what());
        }
    }
    print_json(out, result);
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Variance estimation in nonparametric regression: simulation, estimation, rate checks"};
    app.name("varest");
    app.require_subcommand(1);
    app.set_help_flag("--help", "Print this help message and exit");
    app.set_help_all_flag("--help-all", "Expand all help");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Draw a sample and write CSV plus JSON sidecar");
    simulate->add_option("--design", sim.design, "Design spec (uniform:a,b | comb:a,b;.. | grid:d | diag:d | product:F*F)")
        ->capture_default_str();
    simulate->add_option("--mean", sim.mean, "Mean function spec")->capture_default_str();
    simulate->add_option("--var", sim.variance, "Variance function spec")->capture_default_str();
    simulate->add_option("--noise", sim.noise, "Noise law (gaussian | rademacher | matched:q)")->capture_default_str();
    simulate->add_option("--n", sim.n, "Sample size");
    simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
    simulate->add_option("--out", sim.out, "Output CSV path; the sidecar gets a .json extension");
    simulate->add_option("--config", sim.config, "JSON file with defaults for any flag above");

    EstimateArgs est;
    auto* estimate = app.add_subcommand("estimate", "Run one estimator on a sample CSV and print JSON");
    estimate->add_option("--input", est.input, "Sample CSV (header x_1,...,x_d,y)");
    estimate->add_option("--estimator", est.estimator,
                         "ustat | ustat-mv | diff | additive-gd | additive-mom | projection | lp-varfn | nw-varfn | qfunc");
    estimate->add_option("--h", est.h, "Bandwidth(s); comma separated (h1,h2 for variance-function estimators)")
        ->delimiter(',');
    estimate->add_option("--alpha", est.alpha, "Mean smoothness; one value or one per coordinate")->delimiter(',');
    estimate->add_option("--beta", est.beta, "Variance smoothness");
    estimate->add_option("--c1", est.c1, "First bandwidth constant")->capture_default_str();
    estimate->add_option("--c2", est.c2, "Second bandwidth constant")->capture_default_str();
    estimate->add_option("--kernel", est.kernel, "box | tgauss")->capture_default_str();
    estimate->add_option("--x-star", est.x_star, "Target point for variance-function estimators");
    estimate->add_option("--tau", est.tau, "Ridge for the local polynomial estimator (default 1/n)");
    estimate->add_option("--levels", est.levels, "Haar resolution levels per coordinate")->delimiter(',');
    estimate->add_flag("--tensor", est.tensor, "Tensor Haar basis instead of the additive one");
    estimate->add_option("--design", est.design, "Design law for the projection estimator (default: sidecar)");
    estimate->add_option("--weight", est.weight, "Weight function for qfunc")->capture_default_str();
    estimate->add_option("--sigma2", est.sigma2, "Plug-in variance for qfunc (default: ustat estimate)");
    estimate->add_option("--curve", est.curve_points, "lp-varfn: estimate on this many grid points and write --out");
    estimate->add_option("--out", est.out, "Curve CSV path (x,v_hat) for --curve");
    estimate->add_option("--config", est.config, "JSON file with defaults for any flag above");

    RateArgs rate;
    auto* rate_cmd = app.add_subcommand("rate", "Monte Carlo rate experiment; writes RateResult JSON and CSV");
    rate_cmd->add_option("--scenario", rate.scenario,
                         "homoscedastic-smooth | homoscedastic-rough | varfn-pointwise | varfn-integrated | "
                         "multivariate | additive-gd | additive-mom | projection | power-law");
    rate_cmd->add_option("--n-grid", rate.n_grid, "Sample sizes, comma separated")->delimiter(',');
    rate_cmd->add_option("--trials", rate.trials, "Trials per sample size")->capture_default_str();
    rate_cmd->add_option("--alpha", rate.alpha, "Mean smoothness")->capture_default_str();
    rate_cmd->add_option("--beta", rate.beta, "Variance smoothness")->capture_default_str();
    rate_cmd->add_option("--c1", rate.c1, "First bandwidth constant (power-law: scale)")->capture_default_str();
    rate_cmd->add_option("--c2", rate.c2, "Second bandwidth constant")->capture_default_str();
    rate_cmd->add_option("--seed", rate.seed, "Base seed")->capture_default_str();
    rate_cmd->add_option("--kernel", rate.kernel, "box | tgauss")->capture_default_str();
    rate_cmd->add_option("--x-star", rate.x_star, "Target point for varfn-pointwise")->capture_default_str();
    rate_cmd->add_option("--dimension", rate.dimension, "Design dimension for multivariate/additive scenarios")
        ->capture_default_str();
    rate_cmd->add_option("--instance-seed", rate.instance_seed, "Seed of the frozen rough mean")->capture_default_str();
    rate_cmd->add_option("--integrated-points", rate.integrated_points, "Design draws per integrated loss")
        ->capture_default_str();
    rate_cmd->add_option("--power-exponent", rate.power_exponent, "power-law scenario exponent")->capture_default_str();
    rate_cmd->add_option("--threads", rate.threads, "Worker threads (0: all cores); results do not depend on it")
        ->capture_default_str();
    rate_cmd->add_option("--out", rate.out, "Result JSON path; the CSV gets a .csv extension");
    rate_cmd->add_option("--config", rate.config, "JSON file with defaults for any flag above");

    LbDemoArgs lb;
    auto* lbdemo = app.add_subcommand("lb-demo", "Lower-bound construction: hard instance, TV sandwich, occupancy, chi2");
    lbdemo->add_option("--alpha", lb.alpha, "Mean smoothness, 0 < alpha < 1/4");
    lbdemo->add_option("--beta", lb.beta, "Also build the variance-function instance with this smoothness");
    lbdemo->add_option("--n", lb.n, "Sample size")->capture_default_str();
    lbdemo->add_option("--c", lb.c, "Bandwidth constant")->capture_default_str();
    lbdemo->add_option("--x-star", lb.x_star, "Target point of the variance-function instance")->capture_default_str();
    lbdemo->add_option("--seed", lb.seed, "Random seed")->capture_default_str();
    lbdemo->add_option("--occupancy-trials", lb.occupancy_trials, "Trials for the occupancy histogram")
        ->capture_default_str();
    lbdemo->add_option("--tv-points", lb.tv_points, "Design points in the TV sandwich")->capture_default_str();
    lbdemo->add_option("--mc-dim", lb.mc_dim, "Design points in the Monte Carlo TV check")->capture_default_str();
    lbdemo->add_option("--mc-samples", lb.mc_samples, "Monte Carlo draws for the TV check")->capture_default_str();
    lbdemo->add_option("--quad-points", lb.quad_points, "Gauss-Hermite points for chi2")->capture_default_str();
    lbdemo->add_option("--out", lb.out, "Also write the JSON report here");
    lbdemo->add_option("--config", lb.config, "JSON file with defaults for any flag above");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kValidation;
    }

    try {
        if (simulate->parsed()) {
            if (!sim.config.empty()) merge_config(*simulate, sim.config);
            return cmd_simulate(sim, out);
        }
        if (estimate->parsed()) {
            if (!est.config.empty()) merge_config(*estimate, est.config);
            return cmd_estimate(est, out);
        }
        if (rate_cmd->parsed()) {
            if (!rate.config.empty()) merge_config(*rate_cmd, rate.config);
            return cmd_rate(rate, out);
        }
        if (!lb.config.empty()) merge_config(*lbdemo, lb.config);
        return cmd_lbdemo(lb, out);
    } catch (const RuntimeFailure& e) {
        err << "error: " << e.what() << "\n";
        return kRuntime;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::Io ? kRuntime : kValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kRuntime;
    }
}

int main(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace varest::cli
