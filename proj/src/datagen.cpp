#include "varest/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>

#include "varest/error.hpp"
#include "varest/serialize.hpp"

namespace varest {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

constexpr int kLegendrePoints = 64;
constexpr int kBumpTableSize = 4096;

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
struct LegendreRule {
    std::array<double, kLegendrePoints> nodes{};
    std::array<double, kLegendrePoints> weights{};

    LegendreRule() {
        constexpr int n = kLegendrePoints;
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0;
                double p1 = 0.0;
                for (int k = 1; k <= n; ++k) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
                }
                dp = n * (z * p0 - p1) / (z * z - 1.0);
                const double dz = p0 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) break;
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
    }

    template <class F>
    double integrate(F&& f, double a, double b) const {
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        double acc = 0.0;
        for (int i = 0; i < kLegendrePoints; ++i) acc += weights[i] * f(mid + half * nodes[i]);
        return acc * half;
    }
};

double mollifier(double t) {
    if (std::abs(t) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - t * t));
}

// H(u) = (1_{[-3/2,3/2]} * phi_{1/2})(u) with a normalized mollifier, on [1, 2].
// For u in [1, 2] this is the mass of the mollifier on [2u - 3, 1].
struct BumpTable {
    std::array<double, kBumpTableSize + 1> values{};

    BumpTable() {
        const LegendreRule rule;
        const double total = rule.integrate(mollifier, -1.0, 1.0);
        for (int k = 0; k <= kBumpTableSize; ++k) {
            const double u = 1.0 + static_cast<double>(k) / kBumpTableSize;
            const double lo = 2.0 * u - 3.0;
            values[k] = lo >= 1.0 ? 0.0 : rule.integrate(mollifier, lo, 1.0) / total;
        }
        values[0] = 1.0;
        values[kBumpTableSize] = 0.0;
    }
};

const BumpTable& bump_table() {
    static const BumpTable table;
    return table;
}

double eval_trapezoid_cell(double local, double rise, double plateau_end, double cell_end, double top) {
    if (local <= 0.0 || local >= cell_end) return 0.0;
    if (local < rise) return top * (local / rise);
    if (local <= plateau_end) return top;
    return top * ((cell_end - local) / rise);
}

bool near_integer(double v, double tol = 1e-9) {
    return std::abs(v - std::round(v)) <= tol * std::max(1.0, std::abs(v));
}

std::vector<std::pair<double, double>> clip_intervals(std::vector<std::pair<double, double>> in, double lo,
                                                      double hi) {
    std::vector<std::pair<double, double>> out;
    for (auto [a, b] : in) {
        a = std::max(a, lo);
        b = std::min(b, hi);
        if (b > a) out.emplace_back(a, b);
    }
    return out;
}

}  // namespace

double unit_bump(double u) {
    const double a = std::abs(u);
    if (a <= 1.0) return 1.0;
    if (a >= 2.0) return 0.0;
    const auto& table = bump_table();
    const double pos = (a - 1.0) * kBumpTableSize;
    const auto k = std::min(static_cast<int>(pos), kBumpTableSize - 1);
    const double frac = pos - k;
    return table.values[k] + frac * (table.values[k + 1] - table.values[k]);
}

void validate(const FunctionSpec& spec) {
    std::visit(overloaded{
                   [](const fn::TrapezoidComb& t) {
                       if (!(t.cell_width > 0.0)) throw Error(ErrorCode::InvalidArgument, "cell width must be positive");
                       const double cells = 1.0 / (6.0 * t.cell_width);
                       if (!near_integer(cells) || std::lround(cells) != static_cast<long>(t.heights.size()) ||
                           t.heights.empty()) {
                           throw Error(ErrorCode::InvalidArgument,
                                       "trapezoid comb needs 1/(6h) equal to the number of heights");
                       }
                   },
                   [](const fn::LocalTrapezoid& t) {
                       if (!(t.h1 > 0.0) || !(t.h2 > 0.0)) {
                           throw Error(ErrorCode::InvalidArgument, "local trapezoid bandwidths must be positive");
                       }
                       const double cells = t.h2 / (2.0 * t.h1);
                       if (!near_integer(cells) || std::lround(cells) != static_cast<long>(t.heights.size()) ||
                           t.heights.empty()) {
                           throw Error(ErrorCode::InvalidArgument,
                                       "local trapezoid needs h2/(2 h1) equal to the number of heights");
                       }
                   },
                   [](const fn::Tabulated& t) {
                       if (t.grid.size() < 2 || t.grid.size() != t.values.size()) {
                           throw Error(ErrorCode::InvalidArgument, "tabulated function needs matching grid/values");
                       }
                       for (std::size_t i = 1; i < t.grid.size(); ++i) {
                           if (!(t.grid[i] > t.grid[i - 1])) {
                               throw Error(ErrorCode::InvalidArgument, "tabulation grid must be increasing");
                           }
                       }
                   },
                   [](const fn::SmoothBump& b) {
                       if (!(b.width > 0.0)) throw Error(ErrorCode::InvalidArgument, "bump width must be positive");
                   },
                   [](const fn::Sum& s) {
                       for (const auto& t : s.terms) validate(t);
                   },
                   [](const fn::Additive& a) {
                       if (a.components.empty()) throw Error(ErrorCode::InvalidArgument, "additive spec is empty");
                       for (const auto& c : a.components) validate(c);
                   },
                   [](const auto&) {},
               },
               spec.kind);
}

double eval_function(const FunctionSpec& spec, double x) {
    return std::visit(
        overloaded{
            [](const fn::Constant& c) { return c.value; },
            [x](const fn::Polynomial& p) {
                double acc = 0.0;
                for (auto it = p.coefficients.rbegin(); it != p.coefficients.rend(); ++it) acc = acc * x + *it;
                return acc;
            },
            [x](const fn::Sinusoid& s) {
                return s.amplitude * std::sin(2.0 * std::numbers::pi * s.frequency * x + s.phase);
            },
            [x](const fn::SmoothBump& b) { return b.height * unit_bump((x - b.center) / b.width); },
            [x](const fn::TrapezoidComb& t) {
                const double h = t.cell_width;
                const double cell = 6.0 * h;
                const double end = cell * static_cast<double>(t.heights.size());
                if (x < 0.0 || x > end * (1.0 + 1e-12)) {
                    throw Error(ErrorCode::OutOfDomain, "trapezoid comb is defined on [0, 1]");
                }
                auto i = static_cast<std::size_t>(x / cell);
                if (i >= t.heights.size()) i = t.heights.size() - 1;
                const double local = x - cell * static_cast<double>(i);
                return eval_trapezoid_cell(local, h, 5.0 * h, cell, t.amplitude * t.heights[i]);
            },
            [x](const fn::LocalTrapezoid& t) {
                const double left = t.x_star - t.h2;
                const double cell = 4.0 * t.h1;
                const double offset = x - left;
                if (offset <= 0.0 || offset >= cell * static_cast<double>(t.heights.size())) return 0.0;
                auto i = static_cast<std::size_t>(offset / cell);
                if (i >= t.heights.size()) i = t.heights.size() - 1;
                const double local = offset - cell * static_cast<double>(i);
                const double top = std::pow(t.h1, t.alpha) * t.heights[i];
                return eval_trapezoid_cell(local, t.h1, 3.0 * t.h1, cell, top);
            },
            [x](const fn::Tabulated& t) {
                if (x < t.grid.front() || x > t.grid.back()) {
                    throw Error(ErrorCode::OutOfDomain, "argument outside the tabulated range");
                }
                auto it = std::upper_bound(t.grid.begin(), t.grid.end(), x);
                if (it == t.grid.end()) return t.values.back();
                const auto k = static_cast<std::size_t>(it - t.grid.begin()) - 1;
                const double w = (x - t.grid[k]) / (t.grid[k + 1] - t.grid[k]);
                return t.values[k] + w * (t.values[k + 1] - t.values[k]);
            },
            [x](const fn::Sum& s) {
                double acc = 0.0;
                for (const auto& term : s.terms) acc += eval_function(term, x);
                return acc;
            },
            [x](const fn::Additive& a) {
                if (a.components.size() != 1) {
                    throw Error(ErrorCode::DimensionMismatch, "additive spec evaluated at a scalar");
                }
                return eval_function(a.components.front(), x);
            },
        },
        spec.kind);
}

double eval_function(const FunctionSpec& spec, std::span<const double> x) {
    if (const auto* c = std::get_if<fn::Constant>(&spec.kind)) return c->value;
    if (const auto* a = std::get_if<fn::Additive>(&spec.kind)) {
        if (a->components.size() != x.size()) {
            throw Error(ErrorCode::DimensionMismatch, "additive spec has " + std::to_string(a->components.size()) +
                                                          " components, argument has " + std::to_string(x.size()));
        }
        double acc = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) acc += eval_function(a->components[k], x[k]);
        return acc;
    }
    if (const auto* s = std::get_if<fn::Sum>(&spec.kind)) {
        double acc = 0.0;
        for (const auto& term : s->terms) acc += eval_function(term, x);
        return acc;
    }
    if (x.size() != 1) throw Error(ErrorCode::DimensionMismatch, "univariate spec evaluated at a vector");
    return eval_function(spec, x[0]);
}

std::pair<double, double> natural_domain(const FunctionSpec& spec) {
    if (const auto* t = std::get_if<fn::Tabulated>(&spec.kind)) return {t->grid.front(), t->grid.back()};
    if (const auto* t = std::get_if<fn::TrapezoidComb>(&spec.kind)) {
        return {0.0, 6.0 * t->cell_width * static_cast<double>(t->heights.size())};
    }
    return {0.0, 1.0};
}

// ---------------------------------------------------------------------------
// Designs

void validate(const DesignSpec& spec) {
    std::visit(overloaded{
                   [](const design::UniformInterval& u) {
                       if (!(u.b > u.a)) throw Error(ErrorCode::InvalidArgument, "uniform design needs a < b");
                   },
                   [](const design::CombSupport& c) {
                       if (c.intervals.empty()) throw Error(ErrorCode::InvalidArgument, "comb support is empty");
                       double prev = -std::numeric_limits<double>::infinity();
                       for (auto [a, b] : c.intervals) {
                           if (!(b > a)) throw Error(ErrorCode::InvalidArgument, "comb interval must have a < b");
                           if (!(a > prev)) {
                               throw Error(ErrorCode::InvalidArgument, "comb intervals must be sorted and disjoint");
                           }
                           prev = b;
                       }
                   },
                   [](const design::GridGD& g) {
                       if (g.d < 1) throw Error(ErrorCode::InvalidArgument, "grid dimension must be >= 1");
                   },
                   [](const design::DiagonalDD& g) {
                       if (g.d < 1) throw Error(ErrorCode::InvalidArgument, "diagonal dimension must be >= 1");
                   },
                   [](const design::ProductOfUnivariate& p) {
                       if (p.factors.empty()) throw Error(ErrorCode::InvalidArgument, "product design is empty");
                       for (const auto& f : p.factors) {
                           validate(f);
                           if (dimension(f) != 1) {
                               throw Error(ErrorCode::InvalidArgument, "product factors must be univariate");
                           }
                       }
                   },
               },
               spec.kind);
}

int dimension(const DesignSpec& spec) {
    return std::visit(overloaded{
                          [](const design::UniformInterval&) { return 1; },
                          [](const design::CombSupport&) { return 1; },
                          [](const design::GridGD& g) { return g.d; },
                          [](const design::DiagonalDD& g) { return g.d; },
                          [](const design::ProductOfUnivariate& p) { return static_cast<int>(p.factors.size()); },
                      },
                      spec.kind);
}

namespace {

// Prefix sums of interval lengths for O(log K) lookups on a comb.
class CombLayout {
public:
    explicit CombLayout(const design::CombSupport& c) : intervals_(c.intervals), cumulative_(c.intervals.size() + 1) {
        for (std::size_t k = 0; k < intervals_.size(); ++k) {
            cumulative_[k + 1] = cumulative_[k] + (intervals_[k].second - intervals_[k].first);
        }
    }

    double total() const { return cumulative_.back(); }

    // last interval starting at or before x, or npos
    std::size_t locate(double x) const {
        const auto it = std::upper_bound(intervals_.begin(), intervals_.end(), x,
                                         [](double v, const auto& iv) { return v < iv.first; });
        return it == intervals_.begin() ? kNone : static_cast<std::size_t>(it - intervals_.begin()) - 1;
    }

    double mass_below(double x) const {
        const auto k = locate(x);
        if (k == kNone) return 0.0;
        const auto [a, b] = intervals_[k];
        return cumulative_[k] + std::min(x, b) - a;
    }

    double draw(Rng& rng) const {
        const double target = rng.uniform() * total();
        auto k = static_cast<std::size_t>(std::upper_bound(cumulative_.begin() + 1, cumulative_.end(), target) -
                                          cumulative_.begin()) - 1;
        k = std::min(k, intervals_.size() - 1);
        const auto [a, b] = intervals_[k];
        return std::clamp(a + (target - cumulative_[k]), a, b);
    }

private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    const std::vector<std::pair<double, double>>& intervals_;
    std::vector<double> cumulative_;
};

}  // namespace

bool in_support(const DesignSpec& spec, double x) {
    if (const auto* u = std::get_if<design::UniformInterval>(&spec.kind)) return x >= u->a && x <= u->b;
    if (const auto* c = std::get_if<design::CombSupport>(&spec.kind)) {
        const auto it = std::upper_bound(c->intervals.begin(), c->intervals.end(), x,
                                         [](double v, const auto& iv) { return v < iv.first; });
        return it != c->intervals.begin() && x <= std::prev(it)->second;
    }
    throw Error(ErrorCode::InvalidArgument, "support membership is defined for univariate random designs");
}

double design_cdf(const DesignSpec& spec, double x) {
    if (const auto* u = std::get_if<design::UniformInterval>(&spec.kind)) {
        return std::clamp((x - u->a) / (u->b - u->a), 0.0, 1.0);
    }
    if (const auto* c = std::get_if<design::CombSupport>(&spec.kind)) {
        const CombLayout layout(*c);
        return std::clamp(layout.mass_below(x) / layout.total(), 0.0, 1.0);
    }
    if (const auto* p = std::get_if<design::ProductOfUnivariate>(&spec.kind); p && p->factors.size() == 1) {
        return design_cdf(p->factors.front(), x);
    }
    throw Error(ErrorCode::UnknownDesignCDF, "no CDF available for this design");
}

double draw_univariate(const DesignSpec& spec, Rng& rng) {
    if (const auto* u = std::get_if<design::UniformInterval>(&spec.kind)) return rng.uniform(u->a, u->b);
    if (const auto* c = std::get_if<design::CombSupport>(&spec.kind)) return CombLayout(*c).draw(rng);
    if (const auto* p = std::get_if<design::ProductOfUnivariate>(&spec.kind); p && p->factors.size() == 1) {
        return draw_univariate(p->factors.front(), rng);
    }
    throw Error(ErrorCode::InvalidArgument, "not a univariate random design");
}

namespace {

std::function<double(Rng&)> univariate_drawer(const DesignSpec& spec) {
    if (const auto* c = std::get_if<design::CombSupport>(&spec.kind)) {
        auto layout = std::make_shared<CombLayout>(*c);
        return [layout](Rng& rng) { return layout->draw(rng); };
    }
    return [&spec](Rng& rng) { return draw_univariate(spec, rng); };
}

}  // namespace

std::vector<double> draw_design(const DesignSpec& spec, std::size_t n, Rng& rng) {
    validate(spec);
    const auto d = static_cast<std::size_t>(dimension(spec));
    std::vector<double> rows(n * d);
    std::visit(overloaded{
                   [&](const design::GridGD& g) {
                       const auto m = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(n), 1.0 / g.d)));
                       std::size_t total = 1;
                       for (int k = 0; k < g.d; ++k) total *= m;
                       if (total != n) {
                           throw Error(ErrorCode::InvalidSampleSize,
                                       "grid design needs n to be a perfect " + std::to_string(g.d) + "-th power");
                       }
                       for (std::size_t r = 0; r < n; ++r) {
                           std::size_t rem = r;
                           for (std::size_t k = d; k-- > 0;) {
                               rows[r * d + k] = static_cast<double>(rem % m + 1) / static_cast<double>(m);
                               rem /= m;
                           }
                       }
                   },
                   [&](const design::DiagonalDD&) {
                       for (std::size_t r = 0; r < n; ++r) {
                           for (std::size_t k = 0; k < d; ++k) {
                               rows[r * d + k] = static_cast<double>(r + 1) / static_cast<double>(n);
                           }
                       }
                   },
                   [&](const design::ProductOfUnivariate& p) {
                       std::vector<std::function<double(Rng&)>> draws;
                       for (const auto& f : p.factors) draws.push_back(univariate_drawer(f));
                       for (std::size_t r = 0; r < n; ++r) {
                           for (std::size_t k = 0; k < d; ++k) rows[r * d + k] = draws[k](rng);
                       }
                   },
                   [&](const auto&) {
                       const auto draw = univariate_drawer(spec);
                       for (std::size_t r = 0; r < n; ++r) rows[r] = draw(rng);
                   },
               },
               spec.kind);
    return rows;
}

// ---------------------------------------------------------------------------
// Noise

void validate(const NoiseSpec& spec) {
    if (spec.kind != NoiseKind::MomentMatched) return;
    validate(spec.matched);
    const double var = dist_moment(spec.matched, 2);
    if (std::abs(var - 1.0) > 1e-10) {
        throw Error(ErrorCode::InvalidArgument, "moment-matched noise must have unit variance (q >= 3)");
    }
}

double fourth_moment(const NoiseSpec& spec) {
    switch (spec.kind) {
        case NoiseKind::Gaussian: return 3.0;
        case NoiseKind::Rademacher: return 1.0;
        case NoiseKind::MomentMatched: return dist_moment(spec.matched, 4);
    }
    return 0.0;
}

double draw_noise(const NoiseSpec& spec, Rng& rng) {
    switch (spec.kind) {
        case NoiseKind::Gaussian: return rng.normal();
        case NoiseKind::Rademacher: return (rng() >> 63) != 0 ? 1.0 : -1.0;
        case NoiseKind::MomentMatched: return sample(spec.matched, rng);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Samples

std::vector<double> SampleSet::column(std::size_t k) const {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = design[i * d + k];
    return out;
}

SampleSet SampleSet::univariate(std::vector<double> x, std::vector<double> y, std::uint64_t seed) {
    return multivariate(1, std::move(x), std::move(y), seed);
}

SampleSet SampleSet::multivariate(std::size_t d, std::vector<double> design, std::vector<double> y,
                                  std::uint64_t seed) {
    SampleSet s;
    s.d = d;
    s.n = y.size();
    s.design = std::move(design);
    s.response = std::move(y);
    s.seed = seed;
    validate(s);
    return s;
}

void validate(const SampleSet& sample) {
    if (sample.d < 1) throw Error(ErrorCode::DimensionMismatch, "sample dimension must be >= 1");
    if (sample.response.size() != sample.n || sample.design.size() != sample.n * sample.d) {
        throw Error(ErrorCode::DimensionMismatch, "design rows must match response length");
    }
    if (sample.n < 1) throw Error(ErrorCode::InvalidSampleSize, "sample must have at least one row");
}

SampleSet generate(const DesignSpec& design, const FunctionSpec& mean, const FunctionSpec& variance,
                   const NoiseSpec& noise, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw Error(ErrorCode::InvalidSampleSize, "n must be >= 1");
    validate(mean);
    validate(variance);
    validate(noise);

    Rng rng(seed);
    SampleSet s;
    s.n = n;
    s.d = static_cast<std::size_t>(dimension(design));
    s.seed = seed;
    s.design = draw_design(design, n, rng);
    s.response.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = s.row(i);
        const double v = eval_function(variance, x);
        if (v < 0.0) {
            throw Error(ErrorCode::NegativeVariance, "variance function is negative at a drawn design point");
        }
        const double eps = draw_noise(noise, rng);
        s.response[i] = eval_function(mean, x) + std::sqrt(v) * eps;
    }
    s.meta = {{"seed", seed}, {"n", n}, {"design", design}, {"mean", mean}, {"variance", variance}, {"noise", noise}};
    return s;
}

// ---------------------------------------------------------------------------
// Lower-bound constructions

HomoscedasticHardInstance hard_instance_homoscedastic(double alpha, long long n, double c, std::uint64_t seed) {
    if (!(alpha > 0.0) || alpha >= 0.25) {
        throw Error(ErrorCode::AlphaOutOfRange, "hard instance needs 0 < alpha < 1/4");
    }
    if (n < 2) throw Error(ErrorCode::InvalidSampleSize, "n must be >= 2");
    if (!(c > 0.0)) throw Error(ErrorCode::InvalidArgument, "constant must be positive");

    HomoscedasticHardInstance inst;
    inst.h_requested = c * std::pow(static_cast<double>(n), -2.0 / (4.0 * alpha + 1.0));
    const long long cells = std::max(1LL, std::llround(1.0 / (6.0 * inst.h_requested)));
    inst.cells = static_cast<int>(cells);
    inst.h_realized = 1.0 / (6.0 * static_cast<double>(cells));
    const double h = inst.h_realized;
    const double theta2 = std::pow(h, 2.0 * alpha);
    inst.sigma0sq = 1.0 + theta2;
    inst.sigma1sq = 1.0;

    inst.q = smallest_odd_above(1.0 + 1.0 / (2.0 * alpha));
    inst.heights_law = moment_matched_distribution(inst.q);

    Rng rng(seed);
    std::vector<double> heights(static_cast<std::size_t>(cells));
    for (auto& r : heights) r = sample(inst.heights_law, rng);
    inst.mean = {fn::TrapezoidComb{h, std::pow(h, alpha), std::move(heights)}};

    design::CombSupport support;
    for (long long i = 1; i <= cells; ++i) {
        support.intervals.emplace_back((6.0 * i - 5.0) * h, (6.0 * i - 1.0) * h);
    }
    inst.design = {std::move(support)};
    return inst;
}

VarFnHardInstance hard_instance_varfn(double alpha, double beta, double x_star, long long n, double c,
                                      std::uint64_t seed) {
    if (!(alpha > 0.0) || !(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "smoothness must be positive");
    if (alpha >= beta / (4.0 * beta + 2.0)) {
        throw Error(ErrorCode::SmoothnessRegime, "construction needs alpha < beta / (4 beta + 2)");
    }
    if (!(x_star > 0.0 && x_star < 1.0)) throw Error(ErrorCode::OutOfDomain, "x_star must lie in (0, 1)");
    if (n < 2) throw Error(ErrorCode::InvalidSampleSize, "n must be >= 2");
    if (!(c > 0.0)) throw Error(ErrorCode::InvalidArgument, "constant must be positive");

    VarFnHardInstance inst;
    const double denom = 4.0 * alpha * beta + beta + 2.0 * alpha;
    const double nn = static_cast<double>(n);
    inst.h1_requested = c * std::pow(nn, -2.0 * beta / denom);
    inst.h2_requested = c * std::pow(nn, -4.0 * alpha / denom);

    // Keep h2 and move h1 so that M = h2/(4 h1) - 1/2 is a positive integer.
    const long long half = std::max(1LL, std::llround(inst.h2_requested / (4.0 * inst.h1_requested) - 0.5));
    inst.half_count = static_cast<int>(half);
    inst.cells = static_cast<int>(2 * half + 1);
    inst.h2 = inst.h2_requested;
    inst.h1 = inst.h2 / (2.0 * static_cast<double>(inst.cells));

    inst.q = smallest_odd_above(1.0 + (beta + 2.0 * alpha) / (2.0 * alpha * beta));
    inst.heights_law = moment_matched_distribution(inst.q);

    Rng rng(seed);
    std::vector<double> heights(static_cast<std::size_t>(inst.cells));
    for (auto& r : heights) r = sample(inst.heights_law, rng);
    inst.mean = {fn::LocalTrapezoid{x_star, inst.h1, inst.h2, alpha, std::move(heights)}};

    inst.var0 = FunctionSpec::constant(1.0);
    inst.var1 = {fn::Sum{{FunctionSpec::constant(1.0),
                          FunctionSpec{fn::SmoothBump{x_star, inst.h2, -std::pow(inst.h2, beta)}}}}};

    std::vector<std::pair<double, double>> intervals;
    intervals.emplace_back(0.0, x_star - inst.h2);
    const double left = x_star - inst.h2;
    for (int i = 1; i <= inst.cells; ++i) {
        intervals.emplace_back(left + (4.0 * i - 3.0) * inst.h1, left + (4.0 * i - 1.0) * inst.h1);
    }
    intervals.emplace_back(x_star + inst.h2, 1.0);
    inst.design = {design::CombSupport{clip_intervals(std::move(intervals), 0.0, 1.0)}};
    return inst;
}

double holder_seminorm(const FunctionSpec& spec, double alpha, int grid_size) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");
    if (grid_size < 2) throw Error(ErrorCode::InvalidArgument, "grid_size must be >= 2");
    const auto [lo, hi] = natural_domain(spec);
    std::vector<double> xs(static_cast<std::size_t>(grid_size));
    std::vector<double> fs(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_size - 1);
        fs[i] = eval_function(spec, xs[i]);
    }
    double sup = 0.0;
    double ratio = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sup = std::max(sup, std::abs(fs[i]));
        for (std::size_t j = i + 1; j < xs.size(); ++j) {
            ratio = std::max(ratio, std::abs(fs[i] - fs[j]) / std::pow(xs[j] - xs[i], alpha));
        }
    }
    return ratio + sup;
}

}  // namespace varest
