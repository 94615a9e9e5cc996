#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "progeny/model.hpp"

namespace progeny {

struct KernelGraphSpec;

/// Parses the JSON model schema:
///   {"types": [...], "root": [...],
///    "offspring": [{"kind": "table", "entries": [{"x": [...], "p": ...}, ...]},
///                  {"kind": "poisson_product", "mu": [...]}, ...]}
/// Structural problems throw ParseError; value-level problems are left to validate().
OffspringModel parse_model(const std::string& json_text);
OffspringModel load_model(const std::filesystem::path& path);

/// Canonical JSON serialization (round-trips through parse_model).
std::string model_to_json(const OffspringModel& model);

/// FNV-1a hash of the canonical serialization.
std::uint64_t fingerprint(const OffspringModel& model);

/// {"n": ..., "q": [...], "kappa": [[...], ...]}
KernelGraphSpec parse_graph_spec(const std::string& json_text);
KernelGraphSpec load_graph_spec(const std::filesystem::path& path);

}  // namespace progeny
