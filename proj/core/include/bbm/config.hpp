#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "bbm/experiments.hpp"

namespace bbm {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Sixteen lowercase hex digits.
std::string hex64(std::uint64_t value);

namespace config {

/// Reads and validates an experiment config file. Errors carry the path
/// and, for syntax and key errors, the line number.
experiments::ExperimentConfig parse_config(const std::filesystem::path& path);

/// Same grammar from memory; `source` names the text in error messages.
experiments::ExperimentConfig parse_config_text(std::string_view text,
                                                std::string_view source =
                                                    "<config>");

/// Canonical text form with every default filled in. Parsing it yields an
/// equal config.
std::string to_config_text(const experiments::ExperimentConfig& cfg);

/// fnv1a64 of the canonical text, ignoring the worker count and output
/// directory.
std::uint64_t config_hash(const experiments::ExperimentConfig& cfg);

}  // namespace config
}  // namespace bbm
