#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include "mdlan/matrix.hpp"

namespace mdlan {

static_assert(std::endian::native == std::endian::little,
              "MDM1 serialization assumes a little-endian host");

/// Shortest round-trip decimal representation; used for every CSV artifact
/// so repeated runs produce bit-identical files.
inline std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view field, const char* where) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    while (first != last && (*first == ' ' || *first == '\t')) ++first;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{})
        throw std::runtime_error(std::string(where) + ": cannot parse number '" +
                                 std::string(field) + "'");
    return v;
}

/// CSV matrix format: one line per matrix row, comma separated, '.' decimal
/// point, no header.
inline void write_csv(const Matrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path.string());
    std::string line;
    for (Index i = 0; i < m.rows(); ++i) {
        line.clear();
        for (Index j = 0; j < m.cols(); ++j) {
            if (j > 0) line += ',';
            line += format_double(m(i, j));
        }
        line += '\n';
        out << line;
    }
    if (!out) throw std::runtime_error("write_csv: write failed for " + path.string());
}

inline Matrix read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            std::size_t comma = line.find(',', start);
            std::string_view field(line.data() + start,
                                   (comma == std::string::npos ? line.size() : comma) - start);
            row.push_back(parse_double(field, "read_csv"));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("read_csv: ragged row " + std::to_string(rows.size() + 1) +
                                     " in " + path.string());
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("read_csv: empty matrix in " + path.string());
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

/// Raw binary matrix format MDM1: magic "MDM1", u64 rows, u64 cols,
/// little-endian f64 column-major payload.
inline void write_mdm1(const Matrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_mdm1: cannot open " + path.string());
    const char magic[4] = {'M', 'D', 'M', '1'};
    const std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
    const std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
    out.write(magic, 4);
    out.write(reinterpret_cast<const char*>(&rows), 8);
    out.write(reinterpret_cast<const char*>(&cols), 8);
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!out) throw std::runtime_error("write_mdm1: write failed for " + path.string());
}

inline Matrix read_mdm1(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_mdm1: cannot open " + path.string());
    char magic[4] = {};
    std::uint64_t rows = 0, cols = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&rows), 8);
    in.read(reinterpret_cast<char*>(&cols), 8);
    if (!in || magic[0] != 'M' || magic[1] != 'D' || magic[2] != 'M' || magic[3] != '1')
        throw std::runtime_error("read_mdm1: bad magic in " + path.string());
    if (rows == 0 || cols == 0 || rows > (1u << 30) || cols > (1u << 30))
        throw std::runtime_error("read_mdm1: implausible dimensions in " + path.string());
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in) throw std::runtime_error("read_mdm1: truncated payload in " + path.string());
    return m;
}

/// Dispatches on extension: ".mdm1" binary, anything else parsed as CSV.
inline Matrix load_matrix(const std::filesystem::path& path) {
    if (path.extension() == ".mdm1") return read_mdm1(path);
    return read_csv(path);
}

}  // namespace mdlan
