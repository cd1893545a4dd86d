#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "varest/error.hpp"
#include "varest/serialize.hpp"

namespace varest {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

template <class T>
T field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw Error(ErrorCode::SchemaMismatch, std::string("missing field '") + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("bad field '") + key + "': " + e.what());
    }
}

template <class T>
T field_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? field<T>(j, key) : fallback;
}

std::string kind_of(const json& j) {
    return field<std::string>(j, "kind");
}

}  // namespace

void to_json(json& j, const FunctionSpec& spec) {
    std::visit(overloaded{
                   [&](const fn::Constant& c) { j = {{"kind", "constant"}, {"value", c.value}}; },
                   [&](const fn::Polynomial& p) { j = {{"kind", "polynomial"}, {"coefficients", p.coefficients}}; },
                   [&](const fn::Sinusoid& s) {
                       j = {{"kind", "sinusoid"},
                            {"amplitude", s.amplitude},
                            {"frequency", s.frequency},
                            {"phase", s.phase}};
                   },
                   [&](const fn::SmoothBump& b) {
                       j = {{"kind", "bump"}, {"center", b.center}, {"width", b.width}, {"height", b.height}};
                   },
                   [&](const fn::TrapezoidComb& t) {
                       j = {{"kind", "trapezoid_comb"},
                            {"cell_width", t.cell_width},
                            {"amplitude", t.amplitude},
                            {"heights", t.heights}};
                   },
                   [&](const fn::LocalTrapezoid& t) {
                       j = {{"kind", "local_trapezoid"}, {"x_star", t.x_star}, {"h1", t.h1},
                            {"h2", t.h2},                {"alpha", t.alpha},   {"heights", t.heights}};
                   },
                   [&](const fn::Tabulated& t) {
                       j = {{"kind", "tabulated"}, {"grid", t.grid}, {"values", t.values}};
                   },
                   [&](const fn::Sum& s) { j = {{"kind", "sum"}, {"terms", s.terms}}; },
                   [&](const fn::Additive& a) { j = {{"kind", "additive"}, {"components", a.components}}; },
               },
               spec.kind);
}

void from_json(const json& j, FunctionSpec& spec) {
    const auto kind = kind_of(j);
    if (kind == "constant") {
        spec = {fn::Constant{field<double>(j, "value")}};
    } else if (kind == "polynomial") {
        spec = {fn::Polynomial{field<std::vector<double>>(j, "coefficients")}};
    } else if (kind == "sinusoid") {
        spec = {fn::Sinusoid{field<double>(j, "amplitude"), field<double>(j, "frequency"),
                             field_or<double>(j, "phase", 0.0)}};
    } else if (kind == "bump") {
        spec = {fn::SmoothBump{field<double>(j, "center"), field<double>(j, "width"), field<double>(j, "height")}};
    } else if (kind == "trapezoid_comb") {
        spec = {fn::TrapezoidComb{field<double>(j, "cell_width"), field<double>(j, "amplitude"),
                                  field<std::vector<double>>(j, "heights")}};
    } else if (kind == "local_trapezoid") {
        spec = {fn::LocalTrapezoid{field<double>(j, "x_star"), field<double>(j, "h1"), field<double>(j, "h2"),
                                   field<double>(j, "alpha"), field<std::vector<double>>(j, "heights")}};
    } else if (kind == "tabulated") {
        spec = {fn::Tabulated{field<std::vector<double>>(j, "grid"), field<std::vector<double>>(j, "values")}};
    } else if (kind == "sum") {
        spec = {fn::Sum{field<std::vector<FunctionSpec>>(j, "terms")}};
    } else if (kind == "additive") {
        spec = {fn::Additive{field<std::vector<FunctionSpec>>(j, "components")}};
    } else {
        throw Error(ErrorCode::SchemaMismatch, "unknown function kind '" + kind + "'");
    }
}

void to_json(json& j, const DesignSpec& spec) {
    std::visit(overloaded{
                   [&](const design::UniformInterval& u) { j = {{"kind", "uniform"}, {"a", u.a}, {"b", u.b}}; },
                   [&](const design::CombSupport& c) { j = {{"kind", "comb"}, {"intervals", c.intervals}}; },
                   [&](const design::GridGD& g) { j = {{"kind", "grid"}, {"d", g.d}}; },
                   [&](const design::DiagonalDD& g) { j = {{"kind", "diagonal"}, {"d", g.d}}; },
                   [&](const design::ProductOfUnivariate& p) { j = {{"kind", "product"}, {"factors", p.factors}}; },
               },
               spec.kind);
}

void from_json(const json& j, DesignSpec& spec) {
    const auto kind = kind_of(j);
    if (kind == "uniform") {
        spec = {design::UniformInterval{field<double>(j, "a"), field<double>(j, "b")}};
    } else if (kind == "comb") {
        spec = {design::CombSupport{field<std::vector<std::pair<double, double>>>(j, "intervals")}};
    } else if (kind == "grid") {
        spec = {design::GridGD{field<int>(j, "d")}};
    } else if (kind == "diagonal") {
        spec = {design::DiagonalDD{field<int>(j, "d")}};
    } else if (kind == "product") {
        spec = {design::ProductOfUnivariate{field<std::vector<DesignSpec>>(j, "factors")}};
    } else {
        throw Error(ErrorCode::SchemaMismatch, "unknown design kind '" + kind + "'");
    }
}

void to_json(json& j, const DiscreteDistribution& dist) {
    j = {{"atoms", dist.atoms}, {"probs", dist.probs}};
}

void from_json(const json& j, DiscreteDistribution& dist) {
    dist.atoms = field<std::vector<double>>(j, "atoms");
    dist.probs = field<std::vector<double>>(j, "probs");
}

void to_json(json& j, const NoiseSpec& spec) {
    switch (spec.kind) {
        case NoiseKind::Gaussian: j = {{"kind", "gaussian"}}; break;
        case NoiseKind::Rademacher: j = {{"kind", "rademacher"}}; break;
        case NoiseKind::MomentMatched:
            j = {{"kind", "moment_matched"}, {"atoms", spec.matched.atoms}, {"probs", spec.matched.probs}};
            break;
    }
}

void from_json(const json& j, NoiseSpec& spec) {
    const auto kind = kind_of(j);
    spec = {};
    if (kind == "gaussian") {
        spec.kind = NoiseKind::Gaussian;
    } else if (kind == "rademacher") {
        spec.kind = NoiseKind::Rademacher;
    } else if (kind == "moment_matched") {
        spec.kind = NoiseKind::MomentMatched;
        from_json(j, spec.matched);
    } else {
        throw Error(ErrorCode::SchemaMismatch, "unknown noise kind '" + kind + "'");
    }
}

void to_json(json& j, const KernelSpec& spec) {
    j = {{"kind", std::string(to_string(spec.kind))},
         {"lower_bound", spec.lower_bound},
         {"upper_bound", spec.upper_bound}};
}

void from_json(const json& j, KernelSpec& spec) {
    spec = KernelSpec::of(parse_kernel_kind(kind_of(j)));
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw Error(ErrorCode::Io, "write to '" + path.string() + "' failed");
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
    auto p = csv_path;
    p.replace_extension(".json");
    return p;
}

void write_sample(const SampleSet& sample, const std::filesystem::path& csv_path) {
    validate(sample);
    std::string text;
    for (std::size_t k = 0; k < sample.d; ++k) text += "x_" + std::to_string(k + 1) + ",";
    text += "y\n";
    for (std::size_t i = 0; i < sample.n; ++i) {
        for (std::size_t k = 0; k < sample.d; ++k) {
            text += format_double(sample.x(i, k));
            text += ',';
        }
        text += format_double(sample.response[i]);
        text += '\n';
    }
    write_text(csv_path, text);

    json meta = sample.meta.is_object() ? sample.meta : json::object();
    meta["seed"] = sample.seed;
    meta["n"] = sample.n;
    write_text(sidecar_path(csv_path), meta.dump(2) + "\n");
}

SampleSet read_sample(const std::filesystem::path& csv_path) {
    std::istringstream in(read_text(csv_path));
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::Io, "empty sample file '" + csv_path.string() + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) header.push_back(cell);
    }
    if (header.size() < 2 || header.back() != "y") {
        throw Error(ErrorCode::SchemaMismatch, "sample header must be x_1,...,x_d,y");
    }
    for (std::size_t k = 0; k + 1 < header.size(); ++k) {
        if (header[k] != "x_" + std::to_string(k + 1)) {
            throw Error(ErrorCode::SchemaMismatch, "unexpected column '" + header[k] + "'");
        }
    }
    const std::size_t d = header.size() - 1;

    std::vector<double> design;
    std::vector<double> response;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (std::size_t k = 0; k <= d; ++k) {
            double v = 0.0;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc{}) {
                throw Error(ErrorCode::SchemaMismatch, "bad number on line " + std::to_string(line_no));
            }
            (k < d ? design : response).push_back(v);
            p = next;
            if (k < d) {
                if (p == end || *p != ',') {
                    throw Error(ErrorCode::SchemaMismatch, "too few columns on line " + std::to_string(line_no));
                }
                ++p;
            }
        }
        if (p != end) throw Error(ErrorCode::SchemaMismatch, "too many columns on line " + std::to_string(line_no));
    }

    std::uint64_t seed = 0;
    json meta = json::object();
    const auto side = sidecar_path(csv_path);
    if (std::filesystem::exists(side)) {
        try {
            meta = json::parse(read_text(side));
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::SchemaMismatch, "bad sidecar '" + side.string() + "': " + e.what());
        }
        seed = field_or<std::uint64_t>(meta, "seed", 0);
    }
    auto sample = SampleSet::multivariate(d, std::move(design), std::move(response), seed);
    sample.meta = std::move(meta);
    return sample;
}

}  // namespace varest
