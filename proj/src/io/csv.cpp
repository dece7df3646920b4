#include "chaoslab/io/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace chaoslab::io {

std::string format_float(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != header.size()) {
        throw std::invalid_argument("csv row holds " + std::to_string(cells.size()) +
                                    " cells but the header names " + std::to_string(header.size()) +
                                    " columns");
    }
    rows.push_back(std::move(cells));
}

namespace {

std::string render_line(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) {
            line += ',';
        }
        line += cells[i];
    }
    line += '\n';
    return line;
}

} // namespace

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    const std::filesystem::path temp = path.string() + ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open '" + temp.string() + "' for writing");
        }
        out << content;
        out.flush();
        if (!out) {
            throw std::runtime_error("short write to '" + temp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(temp, path, ec);
    if (ec) {
        throw std::runtime_error("cannot move '" + temp.string() + "' into place: " + ec.message());
    }
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    if (table.header.empty()) {
        throw std::invalid_argument("csv table has no header row");
    }
    std::string content = render_line(table.header);
    for (const auto& row : table.rows) {
        content += render_line(row);
    }
    write_text_atomic(path, content);
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    }
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream split(line);
        while (std::getline(split, cell, ',')) {
            cells.push_back(cell);
        }
        if (!line.empty() && line.back() == ',') {
            cells.emplace_back();
        }
        if (first) {
            table.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != table.header.size()) {
                throw std::runtime_error("'" + path.string() + "': row with " +
                                         std::to_string(cells.size()) + " cells under a " +
                                         std::to_string(table.header.size()) + "-column header");
            }
            table.rows.push_back(std::move(cells));
        }
    }
    if (first) {
        throw std::runtime_error("'" + path.string() + "': empty csv file");
    }
    return table;
}

} // namespace chaoslab::io
