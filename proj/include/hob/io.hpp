#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hob/error.hpp"
#include "hob/tensor.hpp"

namespace hob {

// Text formats (1-based indices, '#' starts a comment line):
//   tensor <m> <n> <nnz>      followed by nnz lines "i1 ... im value"
//   vector <n>                followed by n value lines

namespace detail {

inline std::optional<std::string> next_content_line(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        std::size_t pos = line.find_first_not_of(" \t\r");
        if (pos == std::string::npos) continue;
        if (line[pos] == '#') continue;
        return line;
    }
    return std::nullopt;
}

inline std::string format_double(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    return buf;
}

/// Writes via a temporary file and renames into place, so failed commands
/// never leave partial output behind.
inline void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::IoError, "cannot open for writing: " + path);
        out << content;
        if (!out) throw Error(ErrorKind::IoError, "write failed: " + path);
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorKind::IoError, "rename failed: " + path);
    }
}

} // namespace detail

inline SparseTensor read_tensor(std::istream& in) {
    auto header = detail::next_content_line(in);
    if (!header) throw Error(ErrorKind::ParseError, "missing tensor header");
    std::istringstream hs(*header);
    std::string tag;
    long m = 0, n = 0, nnz = 0;
    if (!(hs >> tag >> m >> n >> nnz) || tag != "tensor")
        throw Error(ErrorKind::ParseError, "malformed header: expected 'tensor <m> <n> <nnz>'");
    if (m < 2 || n < 1 || nnz < 0)
        throw Error(ErrorKind::ParseError, "malformed header: bad tensor shape");

    std::vector<TensorEntry> entries;
    entries.reserve(nnz);
    for (long k = 0; k < nnz; ++k) {
        auto line = detail::next_content_line(in);
        if (!line) throw Error(ErrorKind::ParseError, "unexpected end of tensor file");
        std::istringstream ls(*line);
        TensorEntry e;
        e.idx.resize(m);
        for (long s = 0; s < m; ++s) {
            long i = 0;
            if (!(ls >> i)) throw Error(ErrorKind::ParseError, "malformed tensor entry line");
            if (i < 1 || i > n) throw Error(ErrorKind::IndexOutOfRange, "index out of range");
            e.idx[s] = static_cast<int>(i - 1);
        }
        if (!(ls >> e.value)) throw Error(ErrorKind::ParseError, "malformed tensor entry line");
        entries.push_back(std::move(e));
    }
    return SparseTensor(static_cast<int>(m), static_cast<int>(n), std::move(entries));
}

inline SparseTensor read_tensor(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open: " + path);
    return read_tensor(in);
}

inline void write_tensor(const SparseTensor& a, const std::string& path, int precision = 17) {
    std::ostringstream out;
    out << "tensor " << a.order() << ' ' << a.dim() << ' ' << a.nnz() << '\n';
    for (int e = 0; e < a.nnz(); ++e) {
        auto t = a.index(e);
        for (int i : t) out << (i + 1) << ' ';
        out << detail::format_double(a.value(e), precision) << '\n';
    }
    detail::atomic_write(path, out.str());
}

inline Vec read_vec(std::istream& in) {
    auto header = detail::next_content_line(in);
    if (!header) throw Error(ErrorKind::ParseError, "missing vector header");
    std::istringstream hs(*header);
    std::string tag;
    long n = 0;
    if (!(hs >> tag >> n) || tag != "vector" || n < 1)
        throw Error(ErrorKind::ParseError, "malformed header: expected 'vector <n>'");
    Vec x;
    x.reserve(n);
    for (long k = 0; k < n; ++k) {
        auto line = detail::next_content_line(in);
        if (!line) throw Error(ErrorKind::ParseError, "unexpected end of vector file");
        std::istringstream ls(*line);
        double v = 0.0;
        if (!(ls >> v)) throw Error(ErrorKind::ParseError, "malformed vector entry line");
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteValue, "non-finite vector value");
        x.push_back(v);
    }
    return x;
}

inline Vec read_vec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open: " + path);
    return read_vec(in);
}

inline void write_vec(const Vec& x, const std::string& path, int precision = 17) {
    std::ostringstream out;
    out << "vector " << x.size() << '\n';
    for (double v : x) out << detail::format_double(v, precision) << '\n';
    detail::atomic_write(path, out.str());
}

} // namespace hob
