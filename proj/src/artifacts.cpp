#include "spdekit/artifacts.hpp"

#include "spdekit/errors.hpp"
#include "spdekit/version.hpp"

#include <bit>
#include <charconv>
#include <cstring>

namespace spdekit {

std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary) {
    if (!out_) throw ValidationError("cannot open output file " + path);
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

void write_manifest(const std::string& dir, const std::string& scenario_source,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ofstream out(dir + "/manifest.txt", std::ios::binary);
    if (!out) throw ValidationError("cannot open manifest in " + dir);
    out << "tool = " << kVersion << '\n';
    out << "scenario_hash = " << hex64(fnv1a(scenario_source)) << '\n';
    for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
}

namespace {

void require_little_endian() {
    if constexpr (std::endian::native != std::endian::little)
        throw ValidationError("binary export requires a little-endian host");
}

void put_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}
void put_u64(std::ofstream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), 8);
}
void put_f64(std::ofstream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), 8);
}
void put_f64s(std::ofstream& out, const double* v, std::size_t n) {
    out.write(reinterpret_cast<const char*>(v), static_cast<std::streamsize>(8 * n));
}

} // namespace

void write_flow_binary(const std::string& path, const std::vector<FlowSnapshot>& snaps) {
    require_little_endian();
    if (snaps.empty()) throw ValidationError("flow export: no snapshots");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open output file " + path);
    const FlowSnapshot& s0 = snaps.front();
    const long total = s0.spec.total();
    out.write("WFLW", 4);
    put_u32(out, 1);
    put_u32(out, static_cast<std::uint32_t>(s0.dim));
    put_u64(out, static_cast<std::uint64_t>(total));
    put_u64(out, static_cast<std::uint64_t>(snaps.size()));
    std::vector<double> row;
    double x[kMaxDim];
    for (const auto& s : snaps) {
        put_f64(out, s.t);
        // X point-major
        row.resize(static_cast<std::size_t>(total) * s.dim);
        for (long i = 0; i < total; ++i) {
            s.spec.node_coords(i, x);
            for (int c = 0; c < s.dim; ++c)
                row[static_cast<std::size_t>(i) * s.dim + c] =
                    x[c] + s.disp[static_cast<std::size_t>(c) * total + static_cast<std::size_t>(i)];
        }
        put_f64s(out, row.data(), row.size());
        row.resize(static_cast<std::size_t>(total) * s.dim * s.dim);
        for (long i = 0; i < total; ++i)
            for (int r = 0; r < s.dim; ++r)
                for (int c = 0; c < s.dim; ++c)
                    row[static_cast<std::size_t>(i) * s.dim * s.dim + r * s.dim + c] =
                        (r == c ? 1.0 : 0.0) +
                        s.dxmi[static_cast<std::size_t>(r * s.dim + c) * total +
                               static_cast<std::size_t>(i)];
        put_f64s(out, row.data(), row.size());
        put_f64s(out, s.det_direct.data(), s.det_direct.size());
        put_f64s(out, s.det_formula.data(), s.det_formula.size());
    }
}

void write_field_binary(const std::string& path, const GridSpec& spec,
                        const std::vector<double>& times, const std::vector<GridField>& snaps) {
    require_little_endian();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open output file " + path);
    out.write("WFLD", 4);
    put_u32(out, 1);
    put_u32(out, static_cast<std::uint32_t>(spec.dim));
    put_u32(out, static_cast<std::uint32_t>(spec.n));
    put_f64(out, spec.lo);
    put_f64(out, spec.side);
    put_u64(out, static_cast<std::uint64_t>(times.size()));
    for (std::size_t i = 0; i < times.size(); ++i) {
        put_f64(out, times[i]);
        put_f64s(out, snaps[i].v.data(), snaps[i].v.size());
    }
}

} // namespace spdekit
