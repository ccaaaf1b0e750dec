#include "CLI11.hpp"

#include "spdekit/artifacts.hpp"
#include "spdekit/errors.hpp"
#include "spdekit/scenario.hpp"
#include "spdekit/spectral.hpp"
#include "spdekit/version.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <set>

namespace fs = std::filesystem;
using namespace spdekit;

namespace {

std::vector<std::pair<std::string, std::string>> base_manifest(const Scenario& sc,
                                                               const std::string& command) {
    return {
        {"command", command},
        {"scenario", sc.name},
        {"bicg_tol", format_double(sc.bicg_tol)},
        {"rank_tol", format_double(sc.rank_tol)},
        {"dt", format_double(sc.dt)},
        {"nodes", std::to_string(sc.nodes)},
    };
}

double snap_time(double t, double dt) {
    double s = std::llround(t / dt) * dt;
    return s;
}

std::vector<double> snapped_times(const std::vector<double>& times, double dt, double T) {
    std::set<double> out;
    for (double t : times) {
        double s = snap_time(t, dt);
        if (s >= 0.0 && s <= T + 1e-12) out.insert(s);
    }
    return std::vector<double>(out.begin(), out.end());
}

int cmd_check_hormander(const Scenario& sc, const std::string& out) {
    VectorFieldSet set = build_field_set(sc);
    HormanderReport rep = check_condition(set, sc.horm, sc.horm_n_max, sc.rank_tol);

    std::vector<std::string> header{"t"};
    for (int i = 1; i <= sc.d; ++i) header.push_back("x" + std::to_string(i));
    header.insert(header.end(), {"minimal_n", "rank"});
    for (int i = 1; i <= sc.d; ++i) header.push_back("s_" + std::to_string(i));
    CsvWriter csv(out + "/hormander.csv", header);
    for (const auto& node : rep.nodes) {
        std::vector<std::string> row{CsvWriter::num(node.t)};
        for (double v : node.x) row.push_back(CsvWriter::num(v));
        row.push_back(std::to_string(node.minimal_n));
        row.push_back(std::to_string(node.rank));
        for (double v : node.singular_values) row.push_back(CsvWriter::num(v));
        csv.row(row);
    }
    auto entries = base_manifest(sc, "check-hormander");
    entries.push_back({"n_max", std::to_string(sc.horm_n_max)});
    entries.push_back({"satisfied", rep.satisfied ? "yes" : "no"});
    entries.push_back({"global_minimal_n", std::to_string(rep.global_minimal_n)});
    write_manifest(out, sc.source_text, entries);

    if (rep.satisfied)
        std::cout << "hormander condition satisfied, global minimal n = " << rep.global_minimal_n
                  << " over " << rep.nodes.size() << " nodes\n";
    else
        std::cout << "hormander condition FAILED at " << rep.failing_nodes.size() << " of "
                  << rep.nodes.size() << " nodes (n_max = " << sc.horm_n_max << ")\n";
    return 0;
}

int cmd_simulate_flow(const Scenario& sc, const std::string& out) {
    VectorFieldSet set = build_field_set(sc);
    GridSpec grid = SpdeProblem::box_grid(sc.d, sc.R0, sc.nodes);
    auto times = snapped_times(sc.output_times, sc.dt, sc.T);

    CsvWriter csv(out + "/flow_summary.csv",
                  {"seed", "t", "min_det_direct", "max_det_direct", "min_singular_value",
                   "max_rel_det_mismatch"});
    for (std::uint64_t seed : sc.seeds) {
        BrownianPath path(seed, sc.d1, sc.T, sc.dt);
        FlowIntegrator fi(set, path, grid);
        std::vector<FlowSnapshot> snaps;
        auto emit = [&](int step) {
            for (double t : times) {
                if (std::llround(t / sc.dt) != step) continue;
                FlowSnapshot s = fi.snapshot();
                double mind = 1e300, maxd = -1e300, mism = 0.0;
                for (long i = 0; i < grid.total(); ++i) {
                    mind = std::min(mind, s.det_direct[static_cast<std::size_t>(i)]);
                    maxd = std::max(maxd, s.det_direct[static_cast<std::size_t>(i)]);
                    double f = s.det_formula[static_cast<std::size_t>(i)];
                    mism = std::max(mism,
                                    std::abs(s.det_direct[static_cast<std::size_t>(i)] - f) /
                                        std::max(std::abs(f), 1e-300));
                }
                csv.row({std::to_string(seed), CsvWriter::num(t), CsvWriter::num(mind),
                         CsvWriter::num(maxd), CsvWriter::num(s.min_singular_value()),
                         CsvWriter::num(mism)});
                snaps.push_back(std::move(s));
            }
        };
        emit(0);
        for (int m = 0; m < path.steps(); ++m) {
            fi.step();
            emit(m + 1);
        }
        write_flow_binary(out + "/flow_seed" + std::to_string(seed) + ".wflw", snaps);
    }
    write_manifest(out, sc.source_text, base_manifest(sc, "simulate-flow"));
    return 0;
}

int cmd_verify_det(const Scenario& sc, const std::string& out, int levels) {
    VectorFieldSet set = build_field_set(sc);
    // compact point set inside B_{R0}
    std::vector<double> pts;
    int per_axis = 5;
    std::vector<int> idx(static_cast<std::size_t>(sc.d), 0);
    for (;;) {
        std::vector<double> x(static_cast<std::size_t>(sc.d));
        double rho = 0.0;
        for (int a = 0; a < sc.d; ++a) {
            x[static_cast<std::size_t>(a)] =
                -0.8 * sc.R0 + 1.6 * sc.R0 * idx[static_cast<std::size_t>(a)] / (per_axis - 1);
            rho += x[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
        }
        if (rho <= sc.R0 * sc.R0) pts.insert(pts.end(), x.begin(), x.end());
        int a = 0;
        while (a < sc.d && ++idx[static_cast<std::size_t>(a)] == per_axis) {
            idx[static_cast<std::size_t>(a)] = 0;
            ++a;
        }
        if (a == sc.d) break;
    }

    CsvWriter csv(out + "/det_verify.csv",
                  {"seed", "level", "dt", "max_rel_err", "median_rel_err"});
    std::vector<std::vector<double>> level_errs(static_cast<std::size_t>(levels));
    for (std::uint64_t seed : sc.seeds) {
        BrownianPath path(seed, sc.d1, sc.T, sc.dt);
        for (int lv = 0; lv < levels; ++lv) {
            FlowIntegrator fi(set, path, pts);
            fi.run_to_end();
            std::vector<double> errs;
            for (long i = 0; i < fi.npoints(); ++i) {
                double f = fi.det_formula(i);
                errs.push_back(std::abs(fi.det_direct(i) - f) / std::max(std::abs(f), 1e-300));
            }
            std::sort(errs.begin(), errs.end());
            double maxe = errs.back();
            double med = errs[errs.size() / 2];
            csv.row({std::to_string(seed), std::to_string(lv), CsvWriter::num(path.dt()),
                     CsvWriter::num(maxe), CsvWriter::num(med)});
            level_errs[static_cast<std::size_t>(lv)].push_back(med);
            if (lv + 1 < levels) path = path.refine();
        }
    }
    for (int lv = 0; lv < levels; ++lv) {
        auto& e = level_errs[static_cast<std::size_t>(lv)];
        std::sort(e.begin(), e.end());
        std::cout << "level " << lv << ": median det mismatch " << e[e.size() / 2] << "\n";
    }
    auto entries = base_manifest(sc, "verify-det");
    entries.push_back({"levels", std::to_string(levels)});
    write_manifest(out, sc.source_text, entries);
    return 0;
}

void write_norm_ledger(CsvWriter& csv, std::uint64_t seed, const Trajectory& traj) {
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const GridField& u = traj.snaps[i];
        double mn = u.v.empty() ? 0.0 : u.v[0], mx = mn;
        for (double v : u.v) {
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        csv.row({std::to_string(seed), CsvWriter::num(traj.times[i]),
                 CsvWriter::num(sobolev_norm(u, 0.0)), CsvWriter::num(sobolev_norm(u, 1.0)),
                 CsvWriter::num(sobolev_norm(u, 2.0)), CsvWriter::num(sobolev_norm(u, 4.0)),
                 CsvWriter::num(sobolev_norm(u, 5.0)), CsvWriter::num(mn), CsvWriter::num(mx)});
    }
}

int cmd_solve(const Scenario& sc, const std::string& out, const std::string& method) {
    SpdeProblem prob = build_problem(sc);
    auto times = snapped_times(sc.output_times, sc.dt, sc.T);
    bool direct = method == "direct" || method == "both";
    bool reduced = method == "reduced" || method == "both";

    std::vector<std::string> ledger{"seed", "t", "l2", "h1", "h2", "h4", "h5", "min", "max"};
    std::unique_ptr<CsvWriter> norms_d, norms_r, gaps;
    if (direct) norms_d = std::make_unique<CsvWriter>(out + "/norms_direct.csv", ledger);
    if (reduced) norms_r = std::make_unique<CsvWriter>(out + "/norms_reduced.csv", ledger);
    if (direct && reduced)
        gaps = std::make_unique<CsvWriter>(out + "/gap.csv",
                                           std::vector<std::string>{"seed", "t", "rel_l2_gap"});

    for (std::uint64_t seed : sc.seeds) {
        BrownianPath path(seed, sc.d1, sc.T, sc.dt);
        Trajectory td, tr;
        if (direct) {
            td = solve_direct(prob, path, times);
            write_field_binary(out + "/u_direct_seed" + std::to_string(seed) + ".wfld", prob.grid,
                               td.times, td.snaps);
            write_norm_ledger(*norms_d, seed, td);
        }
        if (reduced) {
            FlowHealth health;
            tr = solve_reduced(prob, path, times, &health);
            write_field_binary(out + "/u_reduced_seed" + std::to_string(seed) + ".wfld", prob.grid,
                               tr.times, tr.snaps);
            write_norm_ledger(*norms_r, seed, tr);
            std::cout << "seed " << seed << ": flow min det " << health.min_det
                      << ", min singular value " << health.min_singular_value << "\n";
        }
        if (direct && reduced) {
            for (std::size_t i = 0; i < td.times.size(); ++i) {
                double gap = relative_l2_gap(td.snaps[i], tr.snaps[i]);
                gaps->row({std::to_string(seed), CsvWriter::num(td.times[i]),
                           CsvWriter::num(gap)});
                std::cout << "seed " << seed << " t " << td.times[i] << ": rel L2 gap " << gap
                          << "\n";
            }
        }
    }
    auto entries = base_manifest(sc, "solve");
    entries.push_back({"method", method});
    write_manifest(out, sc.source_text, entries);
    return 0;
}

int cmd_probe(const Scenario& sc, const std::string& out) {
    if (sc.probes.empty())
        throw ValidationError("probe: scenario declares no [probe] windows");
    SpdeProblem prob = build_problem(sc);
    auto windows = build_probe_windows(sc);

    // dense storage: coverage of [0, T] for the denominator plus >= 24
    // samples inside every window
    std::vector<double> want;
    for (int i = 0; i <= 16; ++i) want.push_back(sc.T * i / 16.0);
    for (const auto& w : windows)
        for (int i = 0; i < 24; ++i) want.push_back(w.s0 + (w.t0 - w.s0) * i / 23.0);
    auto times = snapped_times(want, sc.dt, sc.T);

    CsvWriter csv(out + "/probe.csv",
                  {"scenario", "seed", "window", "alpha", "sup", "ratio", "denom"});
    for (std::uint64_t seed : sc.seeds) {
        BrownianPath path(seed, sc.d1, sc.T, sc.dt);
        Trajectory traj = solve_direct(prob, path, times);
        for (std::size_t wi = 0; wi < windows.size(); ++wi) {
            ProbeResult res = probe_run(prob, traj, windows[wi]);
            for (std::size_t ai = 0; ai < windows[wi].alphas.size(); ++ai) {
                std::string alpha;
                for (int c = 0; c < sc.d; ++c) {
                    if (c) alpha += ' ';
                    alpha += std::to_string(windows[wi].alphas[ai][c]);
                }
                csv.row({sc.name, std::to_string(seed), std::to_string(wi + 1), alpha,
                         CsvWriter::num(res.sup[ai]), CsvWriter::num(res.ratio[ai]),
                         CsvWriter::num(res.denom)});
            }
        }
    }
    write_manifest(out, sc.source_text, base_manifest(sc, "probe"));
    return 0;
}

int cmd_iw_residual(const Scenario& sc, const std::string& out) {
    SpdeProblem prob = build_problem(sc);
    auto phis = make_bump_test_functions(prob.grid, sc.R0, sc.iw_n_phi);
    CsvWriter csv(out + "/iw_residual.csv",
                  {"seed", "phi", "residual", "pairing_0", "pairing_T"});
    for (std::uint64_t seed : sc.seeds) {
        BrownianPath path(seed, sc.d1, sc.T, sc.dt);
        IwResult res = ito_wentzell_residual(prob, path, phis);
        double worst = 0.0;
        for (std::size_t j = 0; j < phis.size(); ++j) {
            csv.row({std::to_string(seed), std::to_string(j), CsvWriter::num(res.residuals[j]),
                     CsvWriter::num(res.pairing_0[j]), CsvWriter::num(res.pairing_T[j])});
            worst = std::max(worst, std::abs(res.residuals[j]));
        }
        std::cout << "seed " << seed << ": max |residual| = " << worst << "\n";
    }
    write_manifest(out, sc.source_text, base_manifest(sc, "iw-residual"));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spdekit: Lie-bracket rank checking, stochastic flows, and twin SPDE solvers"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::string scn, out = ".", method = "both";
    int levels = 3;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("scenario", scn, "scenario file")->required();
        cmd->add_option("--out", out, "output directory (default .)");
    };
    CLI::App* horm = app.add_subcommand("check-hormander", "bracket rank condition over a grid");
    add_common(horm);
    CLI::App* flow = app.add_subcommand("simulate-flow", "stochastic flow with determinant checks");
    add_common(flow);
    CLI::App* det = app.add_subcommand("verify-det", "determinant identity over refinement levels");
    add_common(det);
    det->add_option("--levels", levels, "refinement levels (default 3)");
    CLI::App* solve = app.add_subcommand("solve", "direct and/or reduced solve");
    add_common(solve);
    solve->add_option("--method", method, "direct|reduced|both")
        ->check(CLI::IsMember({"direct", "reduced", "both"}));
    CLI::App* probe = app.add_subcommand("probe", "interior smoothness probes");
    add_common(probe);
    CLI::App* iw = app.add_subcommand("iw-residual", "pairing-form residual of the transformed equation");
    add_common(iw);

    CLI11_PARSE(app, argc, argv);

    try {
        Scenario sc = load_scenario(scn);
        fs::create_directories(out);
        if (horm->parsed()) return cmd_check_hormander(sc, out);
        if (flow->parsed()) return cmd_simulate_flow(sc, out);
        if (det->parsed()) return cmd_verify_det(sc, out, levels);
        if (solve->parsed()) return cmd_solve(sc, out, method);
        if (probe->parsed()) return cmd_probe(sc, out);
        if (iw->parsed()) return cmd_iw_residual(sc, out);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
