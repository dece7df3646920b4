#include "chaoslab/io/run_dir.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "chaoslab/io/csv.hpp"

namespace chaoslab::io {

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char byte : data) {
        hash ^= byte;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string hash_hex(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

RunPaths make_run_paths(const std::filesystem::path& out_root, const std::string& config_key) {
    RunPaths paths;
    paths.root = out_root / "runs" / hash_hex(fnv1a64(config_key));
    paths.spectra = paths.root / "spectra";
    paths.stats = paths.root / "stats";
    paths.ofs = paths.root / "ofs";
    paths.oracle = paths.root / "oracle";
    paths.manifest = paths.root / "manifest.json";
    for (const auto& dir : {paths.spectra, paths.stats, paths.ofs, paths.oracle}) {
        std::filesystem::create_directories(dir);
    }
    return paths;
}

void write_manifest(const std::filesystem::path& path, const nlohmann::json& manifest) {
    write_text_atomic(path, manifest.dump(2) + "\n");
}

nlohmann::json read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open manifest '" + path.string() + "'");
    }
    nlohmann::json manifest;
    in >> manifest;
    return manifest;
}

} // namespace chaoslab::io
