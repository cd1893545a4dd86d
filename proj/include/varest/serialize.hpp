#pragma once

#include <filesystem>

#include "json.hpp"
#include "varest/datagen.hpp"
#include "varest/kernels.hpp"
#include "varest/lb_tools.hpp"

namespace varest {

// JSON encodings. Every spec is an object with a "kind" tag plus its fields;
// decoding throws SchemaMismatch on unknown tags or missing fields.
void to_json(nlohmann::json& j, const FunctionSpec& spec);
void from_json(const nlohmann::json& j, FunctionSpec& spec);
void to_json(nlohmann::json& j, const DesignSpec& spec);
void from_json(const nlohmann::json& j, DesignSpec& spec);
void to_json(nlohmann::json& j, const NoiseSpec& spec);
void from_json(const nlohmann::json& j, NoiseSpec& spec);
void to_json(nlohmann::json& j, const DiscreteDistribution& dist);
void from_json(const nlohmann::json& j, DiscreteDistribution& dist);
void to_json(nlohmann::json& j, const KernelSpec& spec);
void from_json(const nlohmann::json& j, KernelSpec& spec);

/// Shortest text that reads back to the same double ("%.17g").
std::string format_double(double v);

/// Writes `x_1,...,x_d,y` CSV to csv_path and the metadata sidecar next to it
/// (same stem, .json extension).
void write_sample(const SampleSet& sample, const std::filesystem::path& csv_path);

/// Reads a CSV written by write_sample (or any CSV with that header). The
/// sidecar is loaded into meta when present.
SampleSet read_sample(const std::filesystem::path& csv_path);

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

/// Whole-file helpers; throw Io.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace varest
