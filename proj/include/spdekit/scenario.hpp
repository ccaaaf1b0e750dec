#pragma once

#include "spdekit/hormander.hpp"
#include "spdekit/probe.hpp"
#include "spdekit/spde.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace spdekit {

/// Scenario file: line-oriented `[section]` headers and `key = value`
/// entries. Full-line comments start with '#'. Expressions are quoted
/// strings in the expression grammar, optionally time-segmented:
///   sigma1.1 = @[0,0.25] "x1" @[0.25,0.5] "2*x1"
/// Segment intervals must partition [0, T].
struct Scenario {
    std::string name;
    int d = 0, d1 = 0, d2 = 0;
    double R0 = 1.0;
    double T = 1.0;
    double dt = 1e-3;
    int nodes = 64;
    bool cutoff = true;
    bool semi_implicit = true;
    double bicg_tol = 1e-10;
    double rank_tol = 1e-8;

    std::vector<std::uint64_t> seeds;
    std::vector<double> output_times;

    // coefficient text by canonical key ("sigma0.1", "c", "nu1", "f", "g1", "u0")
    std::map<std::string, std::string> coeff_text;

    struct ProbeWindowSpec {
        double s0 = 0.0, t0 = 0.0, r = 0.0;
        std::string alphas; // rows "a1 a2; b1 b2"
        int l = 5;
        double m = 0.0;
    };
    std::vector<ProbeWindowSpec> probes;

    HormanderGrid horm;
    int horm_n_max = 3;

    int iw_n_phi = 5;

    std::string source_text; // raw file contents, hashed into the manifest
};

Scenario parse_scenario_text(const std::string& text, const std::string& name_hint);
Scenario load_scenario(const std::string& path);

SegmentedExpr parse_segmented(const std::string& value, int d, double T, const std::string& where);

VectorFieldSet build_field_set(const Scenario& sc);
SpdeProblem build_problem(const Scenario& sc);
std::vector<ProbeWindow> build_probe_windows(const Scenario& sc);

} // namespace spdekit
