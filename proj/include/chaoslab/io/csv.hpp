#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace chaoslab::io {

/// Render a double with 17 significant digits, enough for exact binary
/// round-tripping, so identical runs emit byte-identical files.
std::string format_float(double value);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> cells);
};

/// Write a table as UTF-8, comma-separated, header row first, one "\n"
/// terminator per line. The file appears atomically: content goes to a
/// sibling temp file which is renamed over the target.
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Parse a CSV written by write_csv (no quoting or embedded commas; the
/// emitters never produce them). Used for round-trip checks and resume.
CsvTable read_csv(const std::filesystem::path& path);

/// Atomic small-file text write shared by every emitter.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

} // namespace chaoslab::io
