#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fluctsel/core/model.hpp"

namespace fluctsel {

/// Brood CSV: header names year, laying_date, n_fledglings in any order;
/// other columns are ignored. Errors carry the 1-based file line.
std::vector<Brood> read_broods_csv(std::istream& in);
std::vector<Brood> read_broods_csv(const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path);

/// Shortest round-trip formatting; parse(write(d)) == d.
void write_broods_csv(std::ostream& out, const Dataset& d);
void write_broods_csv(const std::filesystem::path& path, const Dataset& d);

/// year,alpha,theta,omega (latent states, not natural-scale processes).
void write_latents_csv(const std::filesystem::path& path, const Dataset& d, const LatentStates& u);

std::string format_double(double v);

/// Flat INI: `key = value`, `[section]` headers, `#`/`;` comments.
/// Keys are returned as "section.key" (bare keys for the top level).
using IniMap = std::map<std::string, std::string>;
IniMap read_ini(std::istream& in, const std::string& origin = "<config>");
IniMap read_ini(const std::filesystem::path& path);

/// Writes text, creating parent directories. Throws IoError.
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Version, build and host details recorded in manifests.
nlohmann::json build_info();

}  // namespace fluctsel
