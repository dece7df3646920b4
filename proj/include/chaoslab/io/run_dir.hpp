#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

namespace chaoslab::io {

/// 64-bit FNV-1a over a byte string; the run-directory name is the hex
/// digest of the canonical configuration string, so identical configs map
/// to identical directories.
std::uint64_t fnv1a64(std::string_view data);
std::string hash_hex(std::uint64_t value);

struct RunPaths {
    std::filesystem::path root;
    std::filesystem::path spectra;
    std::filesystem::path stats;
    std::filesystem::path ofs;
    std::filesystem::path oracle;
    std::filesystem::path manifest;
};

/// Resolve (and create) runs/<hash>/{spectra,stats,ofs,oracle} under the
/// output root. `config_key` is the canonical configuration string.
RunPaths make_run_paths(const std::filesystem::path& out_root, const std::string& config_key);

/// Manifest files are JSON with sorted keys and a trailing newline,
/// written atomically; identical content means identical bytes.
void write_manifest(const std::filesystem::path& path, const nlohmann::json& manifest);
nlohmann::json read_manifest(const std::filesystem::path& path);

} // namespace chaoslab::io
