#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace warc {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    return fnv1a64(std::span(reinterpret_cast<const unsigned char*>(s.data()), s.size()));
}

/// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc())
        throw IoError("format_double: conversion failed");
    return {buf, ptr};
}

/// Write a file atomically (temp file in the same directory, then rename).
inline void atomic_write(const std::filesystem::path& path, const std::string& contents) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw IoError("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

// --- columnar text format ---------------------------------------------------

/// '#'-headed key=value metadata and column names, comma-separated numeric
/// rows, shortest round-trip floats.
class ColumnarWriter {
public:
    void meta(const std::string& key, const std::string& value) {
        head_ += "# " + key + "=" + value + "\n";
    }
    void meta(const std::string& key, double value) { meta(key, format_double(value)); }

    void columns(const std::vector<std::string>& names) {
        head_ += "# columns=";
        for (size_t i = 0; i < names.size(); ++i) {
            if (i) head_ += ",";
            head_ += names[i];
        }
        head_ += "\n";
        n_cols_ = names.size();
    }

    void row(std::span<const double> vals) {
        if (n_cols_ && vals.size() != n_cols_) throw IoError("columnar row width mismatch");
        for (size_t i = 0; i < vals.size(); ++i) {
            if (i) body_ += ",";
            body_ += format_double(vals[i]);
        }
        body_ += "\n";
    }
    void row(std::initializer_list<double> vals) { row(std::span(vals.begin(), vals.size())); }

    /// Mixed row where some cells are raw strings (labels).
    void row_raw(const std::vector<std::string>& cells) {
        if (n_cols_ && cells.size() != n_cols_) throw IoError("columnar row width mismatch");
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) body_ += ",";
            body_ += cells[i];
        }
        body_ += "\n";
    }

    std::string str() const { return head_ + body_; }
    void save(const std::filesystem::path& path) const { atomic_write(path, str()); }

private:
    std::string head_, body_;
    size_t n_cols_ = 0;
};

struct ColumnarData {
    std::map<std::string, std::string> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::vector<double> column_values(const std::string& name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw IoError("no such column: " + name);
        const size_t idx = static_cast<size_t>(it - columns.begin());
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(std::stod(r.at(idx)));
        return out;
    }
};

inline ColumnarData read_columnar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    ColumnarData data;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string rest = line.substr(1);
            const size_t start = rest.find_first_not_of(' ');
            if (start == std::string::npos) continue;
            rest = rest.substr(start);
            const size_t eq = rest.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = rest.substr(0, eq), value = rest.substr(eq + 1);
            if (key == "columns") {
                std::stringstream ss(value);
                std::string c;
                while (std::getline(ss, c, ',')) data.columns.push_back(c);
            } else {
                data.meta[key] = value;
            }
        } else {
            std::vector<std::string> cells;
            std::stringstream ss(line);
            std::string c;
            while (std::getline(ss, c, ',')) cells.push_back(c);
            data.rows.push_back(std::move(cells));
        }
    }
    return data;
}

// --- binary grid format -----------------------------------------------------
//
// "WARC" magic, u32 version, u32 rank, u64 dims[rank], u8 complex flag,
// then row-major little-endian binary64 payload (re/im interleaved when
// complex).

inline constexpr std::uint32_t binary_grid_version = 1;

struct BinaryGrid {
    std::vector<std::uint64_t> dims;
    bool is_complex = false;
    std::vector<double> data;  // re/im interleaved when complex

    std::uint64_t cells() const {
        std::uint64_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

inline std::string encode_grid(const BinaryGrid& g) {
    static_assert(std::endian::native == std::endian::little,
                  "binary grid writer assumes a little-endian host");
    const std::uint64_t expect = g.cells() * (g.is_complex ? 2 : 1);
    if (g.data.size() != expect) throw IoError("binary grid: payload size mismatch");
    std::string out;
    out.reserve(17 + 8 * g.dims.size() + 8 * g.data.size());
    out.append("WARC", 4);
    auto push = [&](const void* p, size_t n) { out.append(static_cast<const char*>(p), n); };
    const std::uint32_t ver = binary_grid_version;
    const std::uint32_t rank = static_cast<std::uint32_t>(g.dims.size());
    push(&ver, 4);
    push(&rank, 4);
    for (std::uint64_t d : g.dims) push(&d, 8);
    const unsigned char flag = g.is_complex ? 1 : 0;
    push(&flag, 1);
    push(g.data.data(), 8 * g.data.size());
    return out;
}

inline void write_grid(const std::filesystem::path& path, const BinaryGrid& g) {
    atomic_write(path, encode_grid(g));
}

inline BinaryGrid read_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 13 || bytes.compare(0, 4, "WARC") != 0)
        throw IoError("not a WARC binary grid: " + path.string());
    size_t off = 4;
    auto pull = [&](void* p, size_t n) {
        if (off + n > bytes.size()) throw IoError("truncated binary grid");
        std::memcpy(p, bytes.data() + off, n);
        off += n;
    };
    std::uint32_t ver = 0, rank = 0;
    pull(&ver, 4);
    pull(&rank, 4);
    if (ver != binary_grid_version) throw IoError("unsupported binary grid version");
    BinaryGrid g;
    g.dims.resize(rank);
    for (auto& d : g.dims) pull(&d, 8);
    unsigned char flag = 0;
    pull(&flag, 1);
    g.is_complex = flag != 0;
    const std::uint64_t n = g.cells() * (g.is_complex ? 2 : 1);
    g.data.resize(n);
    pull(g.data.data(), 8 * n);
    return g;
}

inline BinaryGrid grid_from_matrix(const Eigen::MatrixXd& m) {
    BinaryGrid g;
    g.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
    g.data.reserve(static_cast<size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) g.data.push_back(m(i, j));
    return g;
}

inline BinaryGrid grid_from_vector(const Eigen::VectorXcd& v) {
    BinaryGrid g;
    g.is_complex = true;
    g.dims = {static_cast<std::uint64_t>(v.size())};
    g.data.reserve(2 * static_cast<size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        g.data.push_back(v[i].real());
        g.data.push_back(v[i].imag());
    }
    return g;
}

// --- run manifest ------------------------------------------------------------

/// Records every output of a command with its checksum.
class Manifest {
public:
    Manifest(std::string command, std::uint64_t config_hash)
        : command_(std::move(command)), config_hash_(config_hash) {}

    void record(const std::filesystem::path& path, const std::string& contents) {
        entries_.push_back({path.filename().string(), contents.size(), fnv1a64(contents)});
    }

    /// Convenience: atomically write `contents` and record it.
    void write_file(const std::filesystem::path& path, const std::string& contents) {
        atomic_write(path, contents);
        record(path, contents);
    }

    void save(const std::filesystem::path& path, double wall_seconds) const {
        ColumnarWriter w;
        w.meta("command", command_);
        char hex[20];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(config_hash_));
        w.meta("config_hash", std::string(hex));
        w.meta("wall_time_s", wall_seconds);
        w.columns({"file", "bytes", "fnv1a64"});
        for (const auto& e : entries_) {
            std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(e.hash));
            w.row_raw({e.name, std::to_string(e.bytes), std::string(hex)});
        }
        w.save(path);
    }

private:
    struct Entry {
        std::string name;
        size_t bytes;
        std::uint64_t hash;
    };
    std::string command_;
    std::uint64_t config_hash_;
    std::vector<Entry> entries_;
};

}  // namespace warc
