#pragma once

#include "spdekit/flow.hpp"
#include "spdekit/grid.hpp"

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace spdekit {

/// shortest round-trip decimal form; locale-free and deterministic
std::string format_double(double v);

/// FNV-1a 64-bit over raw bytes
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);

/// Deterministic CSV writer: '\n' line ends, no locale, values preformatted
/// or formatted via format_double.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& cells);
    static std::string num(double v) { return format_double(v); }
    static std::string num(int v) { return std::to_string(v); }
    static std::string num(long v) { return std::to_string(v); }

private:
    std::ofstream out_;
};

/// manifest.txt beside the artifacts: scenario hash, tool version, tolerances
void write_manifest(const std::string& dir, const std::string& scenario_source,
                    const std::vector<std::pair<std::string, std::string>>& entries);

/// Flow snapshot container, little-endian:
///   magic "WFLW", version u32, d u32, npoints u64, ntimes u64,
///   then per time: t f64, X (n*d f64, point-major), DX (n*d*d),
///   det_direct (n), det_formula (n).
void write_flow_binary(const std::string& path, const std::vector<FlowSnapshot>& snaps);

/// Trajectory container, little-endian:
///   magic "WFLD", version u32, d u32, nodes u32, lo f64, side f64,
///   ntimes u64, then per time: t f64, samples (n^d f64).
void write_field_binary(const std::string& path, const GridSpec& spec,
                        const std::vector<double>& times, const std::vector<GridField>& snaps);

} // namespace spdekit
