#pragma once

// File formats.
//
// Partition, text:    CSV with header line `x,y,value`; shortest
//                     round-trip decimal doubles, one point per row.
// Partition, binary:  magic "SWLD", u16 format version (1), u32 partition
//                     index, u64 point count, then packed little-endian
//                     (f64 x, f64 y, f64 value) records.
// Truth, text:        CSV `x,y,value,tiles` where tiles is the
//                     semicolon-joined list of tile indices containing
//                     the point (what the seam metric needs).
// Laplacian, binary:  magic "SWLG", u16 version (1), u64 n, u64 nnz,
//                     row_ptr u64[n+1], col u32[nnz], val f64[nnz],
//                     degree u32[n].  Also the on-disk cache format.
// Seam report:        line-oriented key=value text.
// Grid raster:        binned means on a W x H grid; `.pgm` gets a binary
//                     8-bit PGM normalized to the value range, anything
//                     else an ASCII matrix with `nan` for empty cells.
//
// The text formats round-trip doubles exactly; both partition forms decode
// to bit-identical in-memory data.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "seamweld/cascade.hpp"
#include "seamweld/graph.hpp"
#include "seamweld/point_model.hpp"
#include "seamweld/synth.hpp"

namespace seamweld {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; add byte swapping for this platform");

namespace detail {

inline void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

inline double parse_double(std::string_view text, std::size_t line, const std::string& path) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw IoError(path + ":" + std::to_string(line) + ": bad number '" +
                      std::string(text) + "'");
    return v;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read error on " + path.string());
    return data;
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("write error on " + path.string());
}

template <class T>
void append_raw(std::string& out, const T& v) {
    const char* p = reinterpret_cast<const char*>(&v);
    out.append(p, sizeof v);
}

template <class T>
T read_raw(std::string_view data, std::size_t& at, const std::string& path) {
    if (at + sizeof(T) > data.size()) throw IoError(path + ": truncated file");
    T v;
    std::memcpy(&v, data.data() + at, sizeof v);
    at += sizeof v;
    return v;
}

// Splits one CSV line at commas; no quoting, the formats never need it.
inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

inline std::string_view chomp(std::string_view line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
        line.remove_suffix(1);
    return line;
}

}  // namespace detail

inline constexpr char kPartitionMagic[4] = {'S', 'W', 'L', 'D'};
inline constexpr char kLaplacianMagic[4] = {'S', 'W', 'L', 'G'};
inline constexpr std::uint16_t kFormatVersion = 1;

inline void write_partition_csv(const std::filesystem::path& path,
                                const PointCloudPartition& part) {
    std::string out = "x,y,value\n";
    out.reserve(out.size() + part.size() * 60);
    for (std::size_t k = 0; k < part.size(); ++k) {
        detail::append_double(out, part.points[k].x);
        out.push_back(',');
        detail::append_double(out, part.points[k].y);
        out.push_back(',');
        detail::append_double(out, part.values[k]);
        out.push_back('\n');
    }
    detail::write_file(path, out);
}

inline PointCloudPartition read_partition_csv(const std::filesystem::path& path,
                                              std::size_t index = 0) {
    const std::string data = detail::read_file(path);
    PointCloudPartition part;
    part.index = index;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < data.size()) {
        std::size_t end = data.find('\n', pos);
        if (end == std::string::npos) end = data.size();
        const std::string_view line = detail::chomp(std::string_view(data).substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "x,y,value")
                throw IoError(path.string() + ": expected header 'x,y,value', got '" +
                              std::string(line) + "'");
            continue;
        }
        const auto fields = detail::split_fields(line);
        if (fields.size() != 3)
            throw IoError(path.string() + ":" + std::to_string(line_no) +
                          ": expected 3 fields, got " + std::to_string(fields.size()));
        part.points.push_back({detail::parse_double(fields[0], line_no, path.string()),
                               detail::parse_double(fields[1], line_no, path.string())});
        part.values.push_back(detail::parse_double(fields[2], line_no, path.string()));
    }
    return part;
}

inline void write_partition_binary(const std::filesystem::path& path,
                                   const PointCloudPartition& part) {
    std::string out;
    out.reserve(18 + part.size() * 24);
    out.append(kPartitionMagic, 4);
    detail::append_raw(out, kFormatVersion);
    detail::append_raw(out, static_cast<std::uint32_t>(part.index));
    detail::append_raw(out, static_cast<std::uint64_t>(part.size()));
    for (std::size_t k = 0; k < part.size(); ++k) {
        detail::append_raw(out, part.points[k].x);
        detail::append_raw(out, part.points[k].y);
        detail::append_raw(out, part.values[k]);
    }
    detail::write_file(path, out);
}

inline PointCloudPartition read_partition_binary(const std::filesystem::path& path) {
    const std::string data = detail::read_file(path);
    const std::string name = path.string();
    if (data.size() < 18 || std::memcmp(data.data(), kPartitionMagic, 4) != 0)
        throw IoError(name + ": not a SWLD partition file");
    std::size_t at = 4;
    const auto version = detail::read_raw<std::uint16_t>(data, at, name);
    if (version != kFormatVersion)
        throw IoError(name + ": unsupported format version " + std::to_string(version));
    PointCloudPartition part;
    part.index = detail::read_raw<std::uint32_t>(data, at, name);
    const auto count = detail::read_raw<std::uint64_t>(data, at, name);
    if (data.size() - at != count * 24)
        throw IoError(name + ": size does not match declared point count");
    part.points.reserve(count);
    part.values.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        const double x = detail::read_raw<double>(data, at, name);
        const double y = detail::read_raw<double>(data, at, name);
        part.points.push_back({x, y});
        part.values.push_back(detail::read_raw<double>(data, at, name));
    }
    return part;
}

inline bool is_binary_partition_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    char magic[4] = {};
    in.read(magic, 4);
    return in.gcount() == 4 && std::memcmp(magic, kPartitionMagic, 4) == 0;
}

// Reads either form, sniffing the magic bytes.
inline PointCloudPartition read_partition(const std::filesystem::path& path,
                                          std::size_t index = 0) {
    if (is_binary_partition_file(path)) {
        PointCloudPartition part = read_partition_binary(path);
        part.index = index;
        return part;
    }
    return read_partition_csv(path, index);
}

inline void write_merged_csv(const std::filesystem::path& path, const MergedDataset& merged) {
    std::string out = "x,y,value\n";
    out.reserve(out.size() + merged.size() * 60);
    for (std::size_t k = 0; k < merged.size(); ++k) {
        detail::append_double(out, merged.points[k].x);
        out.push_back(',');
        detail::append_double(out, merged.points[k].y);
        out.push_back(',');
        detail::append_double(out, merged.values[k]);
        out.push_back('\n');
    }
    detail::write_file(path, out);
}

inline void write_merged_binary(const std::filesystem::path& path, const MergedDataset& merged) {
    PointCloudPartition as_part;
    as_part.index = 0;
    as_part.points = merged.points;
    as_part.values = merged.values;
    write_partition_binary(path, as_part);
}

inline void write_truth_csv(const std::filesystem::path& path, const SceneTruth& truth) {
    std::string out = "x,y,value,tiles\n";
    out.reserve(out.size() + truth.points.size() * 70);
    for (std::size_t k = 0; k < truth.points.size(); ++k) {
        detail::append_double(out, truth.points[k].x);
        out.push_back(',');
        detail::append_double(out, truth.points[k].y);
        out.push_back(',');
        detail::append_double(out, truth.ground_truth[k]);
        out.push_back(',');
        for (std::size_t j = 0; j < truth.memberships[k].size(); ++j) {
            if (j) out.push_back(';');
            out.append(std::to_string(truth.memberships[k][j]));
        }
        out.push_back('\n');
    }
    detail::write_file(path, out);
}

// Loads the fields score() needs: ids, points, truth values, memberships.
inline SceneTruth read_truth_csv(const std::filesystem::path& path) {
    const std::string data = detail::read_file(path);
    const std::string name = path.string();
    SceneTruth truth;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < data.size()) {
        std::size_t end = data.find('\n', pos);
        if (end == std::string::npos) end = data.size();
        const std::string_view line = detail::chomp(std::string_view(data).substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "x,y,value,tiles")
                throw IoError(name + ": expected header 'x,y,value,tiles'");
            continue;
        }
        const auto fields = detail::split_fields(line);
        if (fields.size() != 4)
            throw IoError(name + ":" + std::to_string(line_no) + ": expected 4 fields");
        truth.points.push_back({detail::parse_double(fields[0], line_no, name),
                                detail::parse_double(fields[1], line_no, name)});
        truth.ground_truth.push_back(detail::parse_double(fields[2], line_no, name));
        std::vector<std::uint32_t> member;
        std::string_view tiles = fields[3];
        while (!tiles.empty()) {
            const std::size_t semi = tiles.find(';');
            const std::string_view tok = tiles.substr(0, semi);
            std::uint32_t t = 0;
            const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), t);
            if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
                throw IoError(name + ":" + std::to_string(line_no) + ": bad tile list");
            member.push_back(t);
            if (semi == std::string_view::npos) break;
            tiles.remove_prefix(semi + 1);
        }
        truth.memberships.push_back(std::move(member));
    }

    truth.ids.resize(truth.points.size());
    for (std::size_t k = 0; k < truth.points.size(); ++k)
        truth.ids[k] = point_id(truth.points[k]);
    std::vector<std::size_t> by_id(truth.points.size());
    for (std::size_t k = 0; k < by_id.size(); ++k) by_id[k] = k;
    std::sort(by_id.begin(), by_id.end(),
              [&](std::size_t a, std::size_t b) { return truth.ids[a] < truth.ids[b]; });
    SceneTruth sorted;
    for (std::size_t k : by_id) {
        sorted.ids.push_back(truth.ids[k]);
        sorted.points.push_back(truth.points[k]);
        sorted.ground_truth.push_back(truth.ground_truth[k]);
        sorted.memberships.push_back(std::move(truth.memberships[k]));
    }
    return sorted;
}

inline void write_laplacian(const std::filesystem::path& path, const GraphLaplacian& L) {
    std::string out;
    out.reserve(22 + L.row_ptr.size() * 8 + L.col.size() * 12 + L.degree.size() * 4);
    out.append(kLaplacianMagic, 4);
    detail::append_raw(out, kFormatVersion);
    detail::append_raw(out, static_cast<std::uint64_t>(L.n));
    detail::append_raw(out, static_cast<std::uint64_t>(L.nnz()));
    for (std::uint64_t v : L.row_ptr) detail::append_raw(out, v);
    for (std::uint32_t v : L.col) detail::append_raw(out, v);
    for (double v : L.val) detail::append_raw(out, v);
    for (std::uint32_t v : L.degree) detail::append_raw(out, v);
    detail::write_file(path, out);
}

inline GraphLaplacian read_laplacian(const std::filesystem::path& path) {
    const std::string data = detail::read_file(path);
    const std::string name = path.string();
    if (data.size() < 22 || std::memcmp(data.data(), kLaplacianMagic, 4) != 0)
        throw IoError(name + ": not a SWLG laplacian file");
    std::size_t at = 4;
    const auto version = detail::read_raw<std::uint16_t>(data, at, name);
    if (version != kFormatVersion)
        throw IoError(name + ": unsupported format version " + std::to_string(version));
    GraphLaplacian L;
    L.n = detail::read_raw<std::uint64_t>(data, at, name);
    const auto nnz = detail::read_raw<std::uint64_t>(data, at, name);
    const std::size_t expect = (L.n + 1) * 8 + nnz * 12 + L.n * 4;
    if (data.size() - at != expect)
        throw IoError(name + ": size does not match header");
    L.row_ptr.resize(L.n + 1);
    L.col.resize(nnz);
    L.val.resize(nnz);
    L.degree.resize(L.n);
    for (auto& v : L.row_ptr) v = detail::read_raw<std::uint64_t>(data, at, name);
    for (auto& v : L.col) v = detail::read_raw<std::uint32_t>(data, at, name);
    for (auto& v : L.val) v = detail::read_raw<double>(data, at, name);
    for (auto& v : L.degree) v = detail::read_raw<std::uint32_t>(data, at, name);
    return L;
}

// On-disk Laplacian cache keyed by a content hash of the partition's
// coordinates (and the edge-length filter, which changes the graph).
// Corrupt or unreadable entries are rebuilt and overwritten.
class LaplacianCache {
public:
    explicit LaplacianCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    std::filesystem::path entry_path(const PointCloudPartition& part,
                                     double max_edge_length = 0.0) const {
        std::uint64_t key = coordinate_hash(part.points);
        key = detail::splitmix64(key ^ detail::double_bits(max_edge_length));
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(key));
        return dir_ / (std::string(buf) + ".swlg");
    }

    GraphLaplacian load_or_build(const PointCloudPartition& part,
                                 double max_edge_length = 0.0) {
        const auto path = entry_path(part, max_edge_length);
        if (std::filesystem::exists(path)) {
            try {
                GraphLaplacian L = read_laplacian(path);
                if (L.n == part.size()) return L;
            } catch (const IoError&) {
                // fall through to rebuild
            }
        }
        GraphLaplacian L = build_partition_laplacian(part, max_edge_length);
        // Write-then-rename keeps concurrent builders from seeing torn files.
        auto tmp = path;
        tmp += "." + std::to_string(detail::splitmix64(
                         reinterpret_cast<std::uintptr_t>(&L))) + ".tmp";
        write_laplacian(tmp, L);
        std::error_code ec;
        std::filesystem::rename(tmp, path, ec);
        if (ec) std::filesystem::remove(tmp, ec);
        return L;
    }

private:
    std::filesystem::path dir_;
};

inline std::string render_seam_report(const SeamReport& report) {
    std::string out;
    auto kv = [&out](std::string_view key, auto value) {
        out.append(key);
        out.push_back('=');
        if constexpr (std::is_floating_point_v<decltype(value)>)
            detail::append_double(out, value);
        else
            out.append(std::to_string(value));
        out.push_back('\n');
    };
    kv("partitions", report.offsets.size());
    kv("max_degree", report.max_degree);
    kv("rounds", report.rounds.size());
    kv("offset_residual_norm", report.offset_residual_norm);
    for (std::size_t p = 0; p < report.offsets.size(); ++p)
        kv("offset." + std::to_string(p), report.offsets[p]);
    for (const RoundReport& rr : report.rounds) {
        for (int phase = 0; phase < 2; ++phase) {
            const auto& stats = phase == 0 ? rr.before : rr.after;
            for (const DegreeStats& s : stats) {
                out.append("round=" + std::to_string(rr.degree));
                out.append(phase == 0 ? " phase=before" : " phase=after");
                out.append(" degree=" + std::to_string(s.degree));
                out.append(" count=" + std::to_string(s.count));
                out.append(" max=");
                detail::append_double(out, s.max_abs);
                out.append(" rms=");
                detail::append_double(out, s.rms);
                out.push_back('\n');
            }
        }
    }
    for (const PairResidual& pr : report.pair_post) {
        out.append("pair=" + std::to_string(pr.i) + "," + std::to_string(pr.j));
        out.append(" count=" + std::to_string(pr.count));
        out.append(" post_mean=");
        detail::append_double(out, pr.mean_diff);
        out.push_back('\n');
    }
    kv("final_max_disagreement", report.final_max_disagreement);
    kv("data_scale", report.data_scale);
    return out;
}

inline void write_seam_report(const std::filesystem::path& path, const SeamReport& report) {
    detail::write_file(path, render_seam_report(report));
}

// Bins points onto a w x h grid (means per cell).  `.pgm` produces an 8-bit
// binary PGM normalized over the value range; any other extension an ASCII
// matrix, row per line, `nan` for empty cells, top row = max y.
inline void write_grid(const std::filesystem::path& path, const MergedDataset& merged,
                       std::size_t width, std::size_t height) {
    if (width == 0 || height == 0 || merged.size() == 0)
        throw InvalidConfig("write_grid: empty grid or dataset");

    double min_x = merged.points[0].x, max_x = min_x;
    double min_y = merged.points[0].y, max_y = min_y;
    for (const Point& p : merged.points) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    const double span_x = max_x > min_x ? max_x - min_x : 1.0;
    const double span_y = max_y > min_y ? max_y - min_y : 1.0;

    std::vector<double> sum(width * height, 0.0);
    std::vector<std::uint32_t> count(width * height, 0);
    for (std::size_t k = 0; k < merged.size(); ++k) {
        auto cx = static_cast<std::size_t>((merged.points[k].x - min_x) / span_x *
                                           static_cast<double>(width));
        auto cy = static_cast<std::size_t>((merged.points[k].y - min_y) / span_y *
                                           static_cast<double>(height));
        cx = std::min(cx, width - 1);
        cy = std::min(cy, height - 1);
        sum[cy * width + cx] += merged.values[k];
        ++count[cy * width + cx];
    }

    const bool pgm = path.extension() == ".pgm";
    std::string out;
    if (pgm) {
        double lo = 0.0, hi = 0.0;
        bool first = true;
        for (std::size_t c = 0; c < sum.size(); ++c) {
            if (!count[c]) continue;
            const double v = sum[c] / count[c];
            if (first) {
                lo = hi = v;
                first = false;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        const double span = hi > lo ? hi - lo : 1.0;
        out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
        for (std::size_t r = height; r-- > 0;) {
            for (std::size_t c = 0; c < width; ++c) {
                const std::size_t cell = r * width + c;
                const double v = count[cell] ? (sum[cell] / count[cell] - lo) / span : 0.0;
                out.push_back(static_cast<char>(static_cast<unsigned char>(v * 255.0)));
            }
        }
    } else {
        for (std::size_t r = height; r-- > 0;) {
            for (std::size_t c = 0; c < width; ++c) {
                if (c) out.push_back(' ');
                const std::size_t cell = r * width + c;
                if (count[cell])
                    detail::append_double(out, sum[cell] / count[cell]);
                else
                    out.append("nan");
            }
            out.push_back('\n');
        }
    }
    detail::write_file(path, out);
}

}  // namespace seamweld
