#pragma once

/**
 * Run traces: a named-channel table of doubles, one row per sample.
 *
 * Text form is comma separated with a header line. Numbers use the shortest
 * representation that parses back to the same double, so reading and
 * rewriting a file reproduces it byte for byte.
 *
 * Binary form:
 *
 *     magic     8 bytes  "MWTRACE\0"
 *     version   u32      1
 *     channels  u32
 *     rows      u64
 *     names     per channel: u32 length, bytes
 *     data      rows x channels f64, row major
 *
 * All integers and floats are little-endian.
 */

#include "morphwing/common.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace morphwing {

class TraceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Trace {
    std::vector<std::string> channels;
    std::vector<double> data; // row major

    std::size_t width() const { return channels.size(); }
    std::size_t rows() const { return width() == 0 ? 0 : data.size() / width(); }

    int find(std::string_view name) const {
        auto it = std::find(channels.begin(), channels.end(), name);
        return it == channels.end() ? -1 : static_cast<int>(it - channels.begin());
    }

    int index(std::string_view name) const {
        const int i = find(name);
        if (i < 0) throw ConfigError(std::string(name), "no such trace channel");
        return i;
    }

    double at(std::size_t row, std::size_t col) const { return data[row * width() + col]; }

    std::vector<double> column(std::string_view name) const {
        const auto c = static_cast<std::size_t>(index(name));
        std::vector<double> out(rows());
        for (std::size_t r = 0; r < out.size(); ++r) out[r] = at(r, c);
        return out;
    }

    void append(const std::vector<double>& row) {
        if (row.size() != width()) throw TraceError("row width does not match the channel list");
        data.insert(data.end(), row.begin(), row.end());
    }
};

inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) throw TraceError("cannot format value");
    return std::string(buf.data(), end);
}

inline double parse_double(std::string_view s) {
    double v = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size()) {
        // from_chars rejects "inf"/"nan" spellings produced by to_chars on some platforms
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
        throw TraceError("bad number '" + std::string(s) + "'");
    }
    return v;
}

inline void write_csv(std::ostream& os, const Trace& tr) {
    for (std::size_t c = 0; c < tr.width(); ++c) os << (c ? "," : "") << tr.channels[c];
    os << '\n';
    std::string line;
    for (std::size_t r = 0; r < tr.rows(); ++r) {
        line.clear();
        for (std::size_t c = 0; c < tr.width(); ++c) {
            if (c) line += ',';
            line += format_double(tr.at(r, c));
        }
        line += '\n';
        os << line;
    }
}

inline Trace read_csv(std::istream& is) {
    Trace tr;
    std::string line;
    if (!std::getline(is, line)) throw TraceError("empty trace file");
    auto split = [](std::string_view s) {
        std::vector<std::string_view> out;
        std::size_t start = 0;
        while (true) {
            const std::size_t k = s.find(',', start);
            out.push_back(s.substr(start, k == std::string_view::npos ? std::string_view::npos : k - start));
            if (k == std::string_view::npos) break;
            start = k + 1;
        }
        return out;
    };
    for (auto name : split(line)) tr.channels.emplace_back(name);
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split(line);
        if (fields.size() != tr.width())
            throw TraceError("line " + std::to_string(lineno) + ": expected " + std::to_string(tr.width()) + " fields");
        for (auto f : fields) tr.data.push_back(parse_double(f));
    }
    return tr;
}

inline constexpr std::array<char, 8> kTraceMagic = {'M', 'W', 'T', 'R', 'A', 'C', 'E', '\0'};
inline constexpr std::uint32_t kTraceVersion = 1;

namespace detail {

template <typename T>
void put_le(std::ostream& os, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<char, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    os.write(b.data(), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
    std::array<char, sizeof(T)> b;
    if (!is.read(b.data(), sizeof(T))) throw TraceError("truncated binary trace");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    T v;
    std::memcpy(&v, b.data(), sizeof(T));
    return v;
}

} // namespace detail

inline void write_binary(std::ostream& os, const Trace& tr) {
    os.write(kTraceMagic.data(), kTraceMagic.size());
    detail::put_le<std::uint32_t>(os, kTraceVersion);
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(tr.width()));
    detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(tr.rows()));
    for (const auto& name : tr.channels) {
        detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
    }
    for (double v : tr.data) detail::put_le<double>(os, v);
}

inline Trace read_binary(std::istream& is) {
    std::array<char, 8> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kTraceMagic) throw TraceError("not a binary trace");
    const auto version = detail::get_le<std::uint32_t>(is);
    if (version != kTraceVersion) throw TraceError("unsupported binary trace version " + std::to_string(version));
    const auto width = detail::get_le<std::uint32_t>(is);
    const auto rows = detail::get_le<std::uint64_t>(is);
    Trace tr;
    for (std::uint32_t c = 0; c < width; ++c) {
        const auto len = detail::get_le<std::uint32_t>(is);
        std::string name(len, '\0');
        if (!is.read(name.data(), len)) throw TraceError("truncated channel name");
        tr.channels.push_back(std::move(name));
    }
    tr.data.resize(static_cast<std::size_t>(rows) * width);
    for (double& v : tr.data) v = detail::get_le<double>(is);
    return tr;
}

enum class TraceFormat { Csv, Binary };

inline TraceFormat trace_format_for(const std::string& path) {
    auto ends_with = [&](std::string_view s) { return path.size() >= s.size() && path.compare(path.size() - s.size(), s.size(), s) == 0; };
    return ends_with(".bin") || ends_with(".mwt") ? TraceFormat::Binary : TraceFormat::Csv;
}

inline void save_trace(const std::string& path, const Trace& tr) {
    const auto fmt = trace_format_for(path);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw TraceError("cannot open " + path + " for writing");
    if (fmt == TraceFormat::Binary) write_binary(os, tr);
    else write_csv(os, tr);
    if (!os) throw TraceError("write failed: " + path);
}

/// Format is detected from the magic bytes, not the extension.
inline Trace load_trace(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw TraceError("cannot open " + path);
    std::array<char, 8> head{};
    is.read(head.data(), head.size());
    const bool binary = is.gcount() == 8 && head == kTraceMagic;
    is.clear();
    is.seekg(0);
    return binary ? read_binary(is) : read_csv(is);
}

} // namespace morphwing
