#pragma once

#include <chrono>
#include <filesystem>
#include <iostream>

#include "warc/analysis.hpp"
#include "warc/arcs.hpp"
#include "warc/parallel.hpp"
#include "warc/presets.hpp"
#include "warc/topology.hpp"

namespace warc {

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommandContext {
    RawConfig raw;
    std::filesystem::path out;
    int threads = 0;  // CLI override; 0 = take from config / hardware
    Manifest* manifest = nullptr;

    void save_text(const std::string& name, const std::string& contents) const {
        manifest->write_file(out / name, contents);
    }
    void save_columnar(const std::string& name, const ColumnarWriter& w) const {
        save_text(name, w.str());
    }
    void save_grid(const std::string& name, const BinaryGrid& g) const {
        save_text(name, encode_grid(g));
    }
};

inline void raise_config_errors(const std::vector<std::string>& errors) {
    if (errors.empty()) return;
    std::string msg = "configuration invalid:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
}

inline void check_sections(const RawConfig& cfg, std::initializer_list<const char*> allowed,
                           std::vector<std::string>& errors) {
    for (const auto& [sec, kv] : cfg.sections) {
        bool ok = false;
        for (const char* a : allowed)
            if (sec == a) {
                ok = true;
                break;
            }
        if (!ok) errors.push_back("unknown section [" + sec + "]");
    }
}

inline int resolve_threads(const CommandContext& ctx, int cfg_threads) {
    if (ctx.threads > 0) return ctx.threads;
    if (cfg_threads > 0) return cfg_threads;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

// --- topology commands -------------------------------------------------------

inline void cmd_chern(CommandContext& ctx) {
    std::vector<std::string> errors;
    check_sections(ctx.raw, {"model", "experiment"}, errors);
    const ModelParams base = resolve_model(ctx.raw, errors, ModelParams::simplified(1, 0, 0, 0));
    KeyTable ex(ctx.raw, "experiment", errors);
    const int n_path = ex.get_int("path_points", 26);
    const int n_kz = ex.get_int("kz_points", 21);
    const int grid = ex.get_int("grid", 101);
    const double m0 = ex.get_double("path_m_start", 4.0);
    const double jp0 = ex.get_double("path_jprime_start", 0.0);
    const double m1 = ex.get_double("path_m_end", 0.0);
    const double jp1 = ex.get_double("path_jprime_end", 1.5);
    const int threads = resolve_threads(ctx, ex.get_int("threads", 0));
    ex.finish();
    if (std::fabs(base.phi[0]) > 1e-12)
        errors.push_back("[model] phi: the closed-form cross-check requires phi = 0");
    if (n_path < 2 || n_kz < 1 || grid < 8) errors.push_back("[experiment] grid keys out of range");
    raise_config_errors(errors);

    const double J = base.t[0];
    struct Cell {
        double t, m, jp, kz, c = std::nan(""), c_closed = std::nan("");
    };
    std::vector<Cell> cells(static_cast<size_t>(n_path) * n_kz);
    parallel_for(static_cast<long>(cells.size()), threads, [&](long idx) {
        const int ip = static_cast<int>(idx) / n_kz;
        const int iz = static_cast<int>(idx) % n_kz;
        Cell& cell = cells[static_cast<size_t>(idx)];
        cell.t = static_cast<double>(ip) / (n_path - 1);
        cell.m = m0 + (m1 - m0) * cell.t;
        cell.jp = jp0 + (jp1 - jp0) * cell.t;
        cell.kz = -pi + 2.0 * pi * (iz + 0.5) / n_kz;
        ModelParams p = ModelParams::simplified(J, cell.jp, cell.m, 0.0);
        p.eps = base.eps;
        cell.c_closed = chern_closed_form(J, cell.jp, cell.m, cell.kz);
        try {
            cell.c = chern_reduced(p, cell.kz, grid);
        } catch (const GaplessError&) {
            // leave nan: sampled exactly at a gap closing
        }
    });

    ColumnarWriter w;
    w.meta("J", J);
    w.meta("grid", static_cast<double>(grid));
    w.columns({"path_t", "m", "Jprime", "k_z", "C", "C_closed"});
    for (const Cell& c : cells) w.row({c.t, c.m, c.jp, c.kz, c.c, c.c_closed});
    ctx.save_columnar("chern.csv", w);
}

inline void cmd_weyl_points(CommandContext& ctx) {
    std::vector<std::string> errors;
    check_sections(ctx.raw, {"model", "experiment"}, errors);
    const ModelParams p = resolve_model(ctx.raw, errors, *named_model("II"));
    KeyTable ex(ctx.raw, "experiment", errors);
    const double tol = ex.get_double("tol", 1e-9);
    const int seed = ex.get_int("seed_grid", 64);
    ex.finish();
    raise_config_errors(errors);

    const WeylSearchResult res = find_weyl_points(p, tol, seed);
    ColumnarWriter w;
    w.meta("nodes", static_cast<double>(res.nodes.size()));
    for (const auto& warn : res.warnings) w.meta("warning", warn);
    w.columns({"kx", "ky", "kz", "chirality", "frequency", "Mxx", "Mxy", "Mxz", "Myy", "Myz",
               "Mzz"});
    for (const WeylNode& n : res.nodes)
        w.row({n.k[0], n.k[1], n.k[2], static_cast<double>(n.chirality), n.frequency,
               n.quadratic_form(0, 0), n.quadratic_form(0, 1), n.quadratic_form(0, 2),
               n.quadratic_form(1, 1), n.quadratic_form(1, 2), n.quadratic_form(2, 2)});
    ctx.save_columnar("weyl_points.csv", w);
}

inline void cmd_phase_diagram(CommandContext& ctx) {
    std::vector<std::string> errors;
    check_sections(ctx.raw, {"model", "experiment"}, errors);
    const ModelParams base = resolve_model(ctx.raw, errors, ModelParams::simplified(1, 0, 0, 0));
    KeyTable ex(ctx.raw, "experiment", errors);
    const double m_min = ex.get_double("m_min", 0.0), m_max = ex.get_double("m_max", 5.0);
    const double jp_min = ex.get_double("jp_min", 0.0), jp_max = ex.get_double("jp_max", 1.4);
    const int n_m = ex.get_int("n_m", 21), n_jp = ex.get_int("n_jp", 21);
    const int seed = ex.get_int("seed_grid", 48);
    const int threads = resolve_threads(ctx, ex.get_int("threads", 0));
    ex.finish();
    if (n_m < 2 || n_jp < 2) errors.push_back("[experiment] n_m/n_jp must be >= 2");
    raise_config_errors(errors);

    std::vector<std::string> labels(static_cast<size_t>(n_m) * n_jp);
    parallel_for(static_cast<long>(labels.size()), threads, [&](long idx) {
        const int im = static_cast<int>(idx) / n_jp, ij = static_cast<int>(idx) % n_jp;
        const double m = m_min + (m_max - m_min) * im / (n_m - 1);
        const double jp = jp_min + (jp_max - jp_min) * ij / (n_jp - 1);
        ModelParams p = ModelParams::simplified(base.t[0], jp, m, base.phi[0]);
        p.eps = base.eps;
        try {
            labels[static_cast<size_t>(idx)] = to_string(classify_phase(p, seed));
        } catch (const OnBoundaryError&) {
            labels[static_cast<size_t>(idx)] = "boundary";
        }
    });

    ColumnarWriter w;
    w.meta("phi", base.phi[0]);
    w.columns({"m", "Jprime", "phase"});
    for (int im = 0; im < n_m; ++im)
        for (int ij = 0; ij < n_jp; ++ij) {
            const double m = m_min + (m_max - m_min) * im / (n_m - 1);
            const double jp = jp_min + (jp_max - jp_min) * ij / (n_jp - 1);
            w.row_raw({format_double(m), format_double(jp),
                       labels[static_cast<size_t>(im) * n_jp + ij]});
        }
    ctx.save_columnar("phase_diagram.csv", w);
}

inline void cmd_bands(CommandContext& ctx) {
    std::vector<std::string> errors;
    check_sections(ctx.raw, {"model", "experiment"}, errors);
    const ModelParams p = resolve_model(ctx.raw, errors, *named_model("II"));
    KeyTable ex(ctx.raw, "experiment", errors);
    const std::string family = ex.get_string("family", "slab");
    const int n_s = ex.get_int("n_s", 33);
    const std::string term = ex.get_string("termination", "A");
    const std::string cut = ex.get_string("cut", "perp");
    const int n1 = ex.get_int("n_par", 41);
    const int n2 = ex.get_int("n_z", 41);
    const double kx_fixed = ex.get_double("kx_a", -pi / 4.0);
    ex.finish();
    raise_config_errors(errors);

    ColumnarWriter w;
    if (family == "slab") {
        SlabSpec spec{n_s, cut == "par" ? SlabCut::par : SlabCut::perp,
                      term == "B" ? Sublattice::B : Sublattice::A, p};
        const auto ks = surface_grid(n1, n2);
        const BandStructure bs = slab_band_structure(spec, ks);
        std::vector<std::string> cols{"k_par", "k_z"};
        for (int n = 1; n <= n_s; ++n) cols.push_back("E" + std::to_string(n));
        w.meta("family", "slab");
        w.meta("n_s", static_cast<double>(n_s));
        w.columns(cols);
        std::vector<double> row(2 + n_s);
        for (size_t i = 0; i < ks.size(); ++i) {
            row[0] = ks[i].par;
            row[1] = ks[i].z;
            for (int n = 0; n < n_s; ++n) row[2 + n] = bs.energies(static_cast<Eigen::Index>(i), n);
            w.row(row);
        }
    } else if (family == "bulk") {
        w.meta("family", "bulk");
        w.meta("kx_a", kx_fixed);
        w.columns({"kx", "ky", "kz", "E_minus", "E_plus"});
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j) {
                const double ky = -pi + 2.0 * pi * i / (n1 - 1);
                const double kz = -pi + 2.0 * pi * j / (n2 - 1);
                const BlochData b = d_vector(p, Vector3d(kx_fixed, ky, kz));
                w.row({kx_fixed, ky, kz, b.d0 - b.d.norm(), b.d0 + b.d.norm()});
            }
    } else {
        throw ConfigError("[experiment] family: expected slab or bulk");
    }
    ctx.save_columnar("bands.csv", w);
}

inline void cmd_fermi_arcs(CommandContext& ctx) {
    std::vector<std::string> errors;
    check_sections(ctx.raw, {"model", "experiment"}, errors);
    const ModelParams p = resolve_model(ctx.raw, errors, *named_model("II"));
    KeyTable ex(ctx.raw, "experiment", errors);
    const int n_s = ex.get_int("n_s", 33);
    const std::string term = ex.get_string("termination", "A");
    const std::string cut = ex.get_string("cut", "perp");
    const double omega = ex.get_double("omega", p.eps);
    const int n_par = ex.get_int("grid_par", 201);
    const int n_z = ex.get_int("grid_z", 201);
    ex.finish();
    raise_config_errors(errors);

    SlabSpec spec{n_s, cut == "par" ? SlabCut::par : SlabCut::perp,
                  term == "B" ? Sublattice::B : Sublattice::A, p};
    const FermiArcs arcs = fermi_arcs(spec, omega, n_par, n_z);

    ColumnarWriter w;
    w.meta("n_s", static_cast<double>(n_s));
    w.meta("omega", omega);
    w.meta("arcs", static_cast<double>(arcs.arcs.size()));
    w.columns({"arc", "idx", "k_par", "k_z", "facet"});
    for (size_t a = 0; a < arcs.arcs.size(); ++a)
        for (size_t i = 0; i < arcs.arcs[a].size(); ++i) {
            const ArcPoint& pt = arcs.arcs[a][i];
            w.row({static_cast<double>(a), static_cast<double>(i), pt.k_par, pt.k_z,
                   static_cast<double>(pt.facet)});
        }
    ctx.save_columnar("fermi_arcs.csv", w);

    ColumnarWriter wp;
    wp.columns({"k_par", "k_z"});
    for (const SurfaceK& k : arcs.node_projections) wp.row({k.par, k.z});
    ctx.save_columnar("weyl_projections.csv", wp);
}

inline void cmd_berry_surface(CommandContext& ctx) {
    std::vector<std::string> errors;
    check_sections(ctx.raw, {"model", "experiment"}, errors);
    const ModelParams p = resolve_model(ctx.raw, errors, *named_model("II"));
    KeyTable ex(ctx.raw, "experiment", errors);
    const int n_s = ex.get_int("n_s", 33);
    const std::string term = ex.get_string("termination", "A");
    const std::string cut = ex.get_string("cut", "perp");
    const int band = ex.get_int("band", 0);  // 1-based; 0 selects the edge band
    const int n_par = ex.get_int("grid_par", 201);
    const int n_z = ex.get_int("grid_z", 201);
    const int threads = resolve_threads(ctx, ex.get_int("threads", 0));
    ex.finish();
    if (band < 0 || band > n_s) errors.push_back("[experiment] band: out of range");
    raise_config_errors(errors);

    SlabSpec spec{n_s, cut == "par" ? SlabCut::par : SlabCut::perp,
                  term == "B" ? Sublattice::B : Sublattice::A, p};
    const int nb = band == 0 ? edge_band_index(n_s) : band - 1;
    const double kp = surface_bz_par();
    std::vector<double> omega(static_cast<size_t>(n_par) * n_z, std::nan(""));
    parallel_for(static_cast<long>(omega.size()), threads, [&](long idx) {
        const int i = static_cast<int>(idx) / n_z, j = static_cast<int>(idx) % n_z;
        const double kpar = -kp + 2.0 * kp * i / (n_par - 1);
        const double kz = -pi + 2.0 * pi * j / (n_z - 1);
        try {
            omega[static_cast<size_t>(idx)] = berry_curvature_surface(spec, kpar, kz, nb);
        } catch (const NearDegeneracyError&) {
            // hot spot right on a band crossing: leave nan
        }
    });

    ColumnarWriter w;
    w.meta("n_s", static_cast<double>(n_s));
    w.meta("band", static_cast<double>(nb + 1));
    w.columns({"k_par", "k_z", "omega"});
    for (int i = 0; i < n_par; ++i)
        for (int j = 0; j < n_z; ++j)
            w.row({-kp + 2.0 * kp * i / (n_par - 1), -pi + 2.0 * pi * j / (n_z - 1),
                   omega[static_cast<size_t>(i) * n_z + j]});
    ctx.save_columnar("berry_surface.csv", w);
}

// --- dynamics commands --------------------------------------------------------

struct Scenario {
    std::shared_ptr<FiniteLattice> lattice;
    std::unique_ptr<CoupledSystem> system;
    EmitterSetup setup;
};

inline Scenario build_scenario(CommandContext& ctx, std::vector<std::string>& errors,
                               const ModelParams& model, const GeometryDefaults& gd,
                               const EmitterDefaults& ed) {
    Scenario sc;
    sc.lattice = build_geometry(ctx.raw, errors, model, gd);
    if (!errors.empty() || !sc.lattice) return sc;
    sc.setup = place_emitters(ctx.raw, errors, *sc.lattice, ed);
    if (!errors.empty()) return sc;
    try {
        sc.system = std::make_unique<CoupledSystem>(sc.lattice, sc.setup.emitters);
    } catch (const std::invalid_argument& e) {
        errors.push_back(std::string("[emitters] ") + e.what());
    }
    return sc;
}

inline void write_trajectory(const CommandContext& ctx, const std::string& name,
                             const CoupledSystem& sys, int excited, const Trajectory& traj) {
    ColumnarWriter w;
    const int ne = sys.n_emitters();
    std::vector<std::string> cols{"t"};
    const bool per_emitter = ne <= 4;
    if (per_emitter)
        for (int j = 1; j <= ne; ++j) cols.push_back("p" + std::to_string(j));
    else {
        cols.push_back("p_excited");
        cols.push_back("p_emitters");
    }
    cols.push_back("photon");
    cols.push_back("norm2");
    if (!traj.energy.empty()) cols.push_back("energy");
    if (!traj.concurrence.empty()) cols.push_back("concurrence");
    w.meta("emitters", static_cast<double>(ne));
    w.columns(cols);
    std::vector<double> row;
    for (size_t s = 0; s < traj.times.size(); ++s) {
        row.clear();
        row.push_back(traj.times[s]);
        if (per_emitter)
            for (int j = 0; j < ne; ++j) row.push_back(traj.emitter_pop(s, j));
        else {
            row.push_back(traj.emitter_pop(s, excited));
            row.push_back(traj.emitter_pop.row(s).sum());
        }
        row.push_back(traj.photon_pop[s]);
        row.push_back(traj.norm2[s]);
        if (!traj.energy.empty()) row.push_back(traj.energy[s]);
        if (!traj.concurrence.empty()) row.push_back(traj.concurrence[s]);
        w.row(row);
    }
    ctx.save_columnar(name, w);
}

inline void write_sites(const CommandContext& ctx, const FiniteLattice& lat) {
    ColumnarWriter w;
    w.meta("builder", lat.builder);
    w.columns({"id", "x", "y", "z", "sub", "c", "d"});
    for (int i = 0; i < lat.size(); ++i) {
        const Site& s = lat.sites[i];
        w.row({static_cast<double>(i), static_cast<double>(s.x), static_cast<double>(s.y),
               static_cast<double>(s.z), s.sub == Sublattice::A ? 0.0 : 1.0,
               static_cast<double>(s.c()), static_cast<double>(s.d())});
    }
    ctx.save_columnar("sites.csv", w);
}

inline void cmd_evolve(CommandContext& ctx) {
    std::vector<std::string> errors;
    check_sections(ctx.raw, {"model", "geometry", "emitters", "experiment"}, errors);
    const ModelParams p = resolve_model(ctx.raw, errors, *named_model("II"));
    KeyTable ex(ctx.raw, "experiment", errors);
    const double t_final = ex.get_double("t_final_J", 10.0);
    const double dt = ex.get_double("dt_J", 0.02);
    const int samples = ex.get_int("samples", 200);
    auto snap_times = ex.get_list("snapshot_times_J", {10.0});
    const bool record_energy = ex.get_bool("record_energy", true);
    const bool profile = ex.get_bool("profile", false);
    const double profile_R = ex.get_double("profile_R", 20.0);
    const double profile_w = ex.get_double("profile_width", 2.0);
    const int profile_bins = ex.get_int("profile_bins", 72);
    ex.finish();
    if (t_final <= 0.0 || dt <= 0.0) errors.push_back("[experiment] t_final_J/dt_J must be > 0");
    Scenario sc = build_scenario(ctx, errors, p, GeometryDefaults{},
                                 EmitterDefaults{});
    raise_config_errors(errors);

    if (profile) snap_times.push_back(t_final);
    EvolveOptions opt{dt, samples, snap_times, record_energy};
    const Trajectory traj =
        evolve(*sc.system, sc.system->single_excited(sc.setup.excited), t_final, opt);

    write_trajectory(ctx, "observables.csv", *sc.system, sc.setup.excited, traj);
    write_sites(ctx, *sc.lattice);
    for (const Snapshot& s : traj.snapshots) {
        BinaryGrid g = grid_from_vector(s.state);
        ctx.save_grid("snapshot_tJ" + format_double(s.time) + ".warc", g);
    }
    if (profile) {
        const Snapshot& last = traj.snapshots.back();
        const auto bins =
            angular_profile(*sc.system, last.state, sc.setup.emitters[sc.setup.excited].site,
                            Facet::perp_max, profile_R, profile_w, profile_bins);
        ColumnarWriter w;
        w.meta("R", profile_R);
        w.meta("width", profile_w);
        w.meta("t", last.time);
        w.columns({"alpha", "P"});
        for (size_t b = 0; b < bins.size(); ++b)
            w.row({2.0 * pi * (b + 0.5) / bins.size(), bins[b]});
        ctx.save_columnar("profile.csv", w);
    }
}

inline void cmd_bloch_map(CommandContext& ctx) {
    std::vector<std::string> errors;
    check_sections(ctx.raw, {"model", "geometry", "emitters", "experiment"}, errors);
    const ModelParams p = resolve_model(ctx.raw, errors, *named_model("II"));
    KeyTable ex(ctx.raw, "experiment", errors);
    const double t_snap = ex.get_double("snapshot_t_J", 10.0);
    const double dt = ex.get_double("dt_J", 0.02);
    const double window = ex.get_double("window_over_J", 0.25);
    ex.finish();
    Scenario sc = build_scenario(ctx, errors, p, GeometryDefaults{}, EmitterDefaults{});
    raise_config_errors(errors);

    EvolveOptions opt{dt, 2, {t_snap}, false};
    const Trajectory traj =
        evolve(*sc.system, sc.system->single_excited(sc.setup.excited), t_snap, opt);
    const VectorXcd amps = sc.system->site_amplitudes(traj.snapshots.back().state);
    const BlochPopulation bp = bloch_map(*sc.lattice, amps, t_snap);

    const double l_par = std::numbers::sqrt2 * (bp.n_par - 1);
    const double l_z = bp.n_z - 1;
    if (t_snap > 0.5 * std::min(l_par, l_z))
        std::cerr << "warning: snapshot time exceeds the reflection-free window" << std::endl;

    BinaryGrid pop, energy;
    pop.dims = {static_cast<std::uint64_t>(bp.bands), static_cast<std::uint64_t>(bp.n_par),
                static_cast<std::uint64_t>(bp.n_z)};
    energy.dims = pop.dims;
    for (int n = 0; n < bp.bands; ++n)
        for (int i = 0; i < bp.n_par; ++i)
            for (int j = 0; j < bp.n_z; ++j) {
                pop.data.push_back(bp.pop[n](i, j));
                energy.data.push_back(bp.energy[n](i, j));
            }
    ctx.save_grid("bloch_pop.warc", pop);
    ctx.save_grid("bloch_energy.warc", energy);

    double total = bp.total(), in_window = 0.0;
    for (int n = 0; n < bp.bands; ++n)
        for (int i = 0; i < bp.n_par; ++i)
            for (int j = 0; j < bp.n_z; ++j)
                if (std::fabs(bp.energy[n](i, j) - p.eps) <= window) in_window += bp.pop[n](i, j);

    ColumnarWriter w;
    w.meta("t", t_snap);
    w.meta("total_photon", amps.squaredNorm());
    w.meta("total_mapped", total);
    w.meta("window_over_J", window);
    w.meta("weight_in_window", total > 0.0 ? in_window / total : 0.0);
    w.columns({"k_par", "k_z", "pop_sum", "e_edge"});
    const int eb = edge_band_index(bp.bands);
    for (int i = 0; i < bp.n_par; ++i)
        for (int j = 0; j < bp.n_z; ++j) {
            double s = 0.0;
            for (int n = 0; n < bp.bands; ++n) s += bp.pop[n](i, j);
            w.row({bp.k_par[i], bp.k_z[j], s, bp.energy[eb](i, j)});
        }
    ctx.save_columnar("bloch_summary.csv", w);
}

inline void cmd_tof(CommandContext& ctx) {
    std::vector<std::string> errors;
    check_sections(ctx.raw, {"model", "geometry", "emitters", "experiment"}, errors);
    const ModelParams p = resolve_model(ctx.raw, errors, *named_model("II"));
    KeyTable ex(ctx.raw, "experiment", errors);
    const auto times = ex.get_list("times_J", {2.0, 4.0, 6.0});
    const double dt = ex.get_double("dt_J", 0.02);
    const int n_kpar = ex.get_int("n_kpar", 65);
    const int n_kperp = ex.get_int("n_kperp", 65);
    const int n_kz = ex.get_int("n_kz", 65);
    ex.finish();
    GeometryDefaults gd;
    gd.builder = "rect_block";
    gd.n_par = 31;
    gd.n_perp = 31;
    gd.n_z = 61;
    Scenario sc = build_scenario(ctx, errors, p, gd, EmitterDefaults{});
    if (times.empty()) errors.push_back("[experiment] times_J: empty list");
    raise_config_errors(errors);

    const double t_final = *std::max_element(times.begin(), times.end());
    EvolveOptions opt{dt, 2, times, false};
    const Trajectory traj =
        evolve(*sc.system, sc.system->single_excited(sc.setup.excited), t_final, opt);

    const double kp = surface_bz_par();
    const auto kpar = uniform_grid(-kp, kp, n_kpar);
    const auto kperp = uniform_grid(-kp, kp, n_kperp);
    const auto kz = uniform_grid(-pi, pi, n_kz);

    ColumnarWriter meta;
    meta.meta("times", static_cast<double>(times.size()));
    meta.columns({"t", "photon", "plancherel_mean"});
    for (const Snapshot& s : traj.snapshots) {
        const VectorXcd amps = sc.system->site_amplitudes(s.state);
        const MomentumDistribution md = momentum_distribution(*sc.lattice, amps, kpar, kperp, kz);
        BinaryGrid g;
        g.dims = {static_cast<std::uint64_t>(n_kpar), static_cast<std::uint64_t>(n_kperp),
                  static_cast<std::uint64_t>(n_kz)};
        g.data = md.n;
        const std::string tag = format_double(s.time);
        ctx.save_grid("nk3d_tJ" + tag + ".warc", g);

        const Map2D np = column_integrate(md, KAxis::perp);
        ColumnarWriter w;
        w.meta("t", s.time);
        w.columns({"k_par", "k_z", "n_perp"});
        for (size_t i = 0; i < np.u.size(); ++i)
            for (size_t j = 0; j < np.v.size(); ++j)
                w.row({np.u[i], np.v[j],
                       np.val(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
        ctx.save_columnar("nperp_tJ" + tag + ".csv", w);

        const auto [mean, total] = tof_plancherel(*sc.lattice, amps);
        meta.row({s.time, total, mean});
    }
    ctx.save_columnar("tof_summary.csv", meta);
}

inline void cmd_farfield(CommandContext& ctx) {
    std::vector<std::string> errors;
    check_sections(ctx.raw, {"model", "geometry", "emitters", "experiment"}, errors);
    const ModelParams p = resolve_model(ctx.raw, errors, *named_model("II"));
    KeyTable ex(ctx.raw, "experiment", errors);
    const auto times = ex.get_list("times_J", {0.0, 6.0, 12.0});
    const double dt = ex.get_double("dt_J", 0.02);
    const double lambda0 = ex.get_double("lambda0_over_a", 1.0);
    const auto dipole = ex.get_list("dipole", {0.0, 0.0, 1.0});
    const int n_theta = ex.get_int("n_theta", 61);
    const int n_phi = ex.get_int("n_phi", 121);
    const int threads = resolve_threads(ctx, ex.get_int("threads", 0));
    ex.finish();
    EmitterDefaults ed;
    ed.placement = "facet_array";
    ed.g = 0.2;
    Scenario sc = build_scenario(ctx, errors, p, GeometryDefaults{}, ed);
    if (dipole.size() != 3) errors.push_back("[experiment] dipole: expected three components");
    if (times.empty()) errors.push_back("[experiment] times_J: empty list");
    raise_config_errors(errors);

    FarFieldSpec spec;
    spec.dipole = Vector3d(dipole[0], dipole[1], dipole[2]);
    spec.lambda0 = lambda0;
    spec.n_theta = n_theta;
    spec.n_phi = n_phi;

    const double t_final = std::max(1e-9, *std::max_element(times.begin(), times.end()));
    EvolveOptions opt{dt, 2, times, false};
    const Trajectory traj =
        evolve(*sc.system, sc.system->single_excited(sc.setup.excited), t_final, opt);

    std::vector<Site> em_sites;
    for (const EmitterSpec& e : sc.setup.emitters)
        em_sites.push_back(sc.lattice->sites[e.site]);

    BinaryGrid g;
    g.dims = {static_cast<std::uint64_t>(traj.snapshots.size()),
              static_cast<std::uint64_t>(n_theta), static_cast<std::uint64_t>(n_phi)};
    g.data.resize(g.cells());
    std::vector<AngularMap> maps(traj.snapshots.size());
    parallel_for(static_cast<long>(traj.snapshots.size()), threads, [&](long s) {
        const VectorXcd em = traj.snapshots[static_cast<size_t>(s)].state.head(em_sites.size());
        maps[static_cast<size_t>(s)] = far_field(em_sites, em, spec);
    });
    size_t off = 0;
    for (const AngularMap& m : maps)
        for (int i = 0; i < n_theta; ++i)
            for (int j = 0; j < n_phi; ++j) g.data[off++] = m.f(i, j);
    ctx.save_grid("farfield.warc", g);

    ColumnarWriter w;
    w.meta("lambda0_over_a", lambda0);
    w.meta("n_theta", static_cast<double>(n_theta));
    w.meta("n_phi", static_cast<double>(n_phi));
    w.columns({"axis", "index", "value"});
    for (size_t s = 0; s < traj.snapshots.size(); ++s)
        w.row({0.0, static_cast<double>(s), traj.snapshots[s].time});
    for (int i = 0; i < n_theta; ++i)
        w.row({1.0, static_cast<double>(i), -pi / 2.0 + pi * i / (n_theta - 1)});
    for (int j = 0; j < n_phi; ++j)
        w.row({2.0, static_cast<double>(j), -pi + 2.0 * pi * j / (n_phi - 1)});
    ctx.save_columnar("farfield_axes.csv", w);
}

inline void cmd_chiral_channel(CommandContext& ctx) {
    std::vector<std::string> errors;
    check_sections(ctx.raw, {"model", "geometry", "emitters", "experiment"}, errors);
    const ModelParams p = resolve_model(ctx.raw, errors, *named_model("NR"));
    KeyTable ex(ctx.raw, "experiment", errors);
    const double t_final = ex.get_double("t_final_J", 40.0);
    const double dt = ex.get_double("dt_J", 0.02);
    const int samples = ex.get_int("samples", 400);
    ex.finish();
    GeometryDefaults gd;
    gd.builder = "braid_box";
    gd.span = 40;
    gd.n_z = 41;
    gd.absorb = {"perp_min", "par_max"};
    EmitterDefaults ed;
    ed.placement = "hinge_pair";
    ed.g = 0.5;
    ed.d_sites = 6;
    Scenario sc = build_scenario(ctx, errors, p, gd, ed);
    raise_config_errors(errors);

    EvolveOptions opt{dt, samples, {}, false};
    const Trajectory traj = evolve(*sc.system, sc.system->single_excited(0), t_final, opt);
    write_trajectory(ctx, "trajectory.csv", *sc.system, 0, traj);

    double c_max = 0.0, t_cmax = 0.0;
    for (size_t s = 0; s < traj.concurrence.size(); ++s)
        if (traj.concurrence[s] > c_max) {
            c_max = traj.concurrence[s];
            t_cmax = traj.times[s];
        }
    ColumnarWriter w;
    w.meta("c_max", c_max);
    w.meta("t_cmax", t_cmax);
    w.columns({"c_max", "t_cmax"});
    w.row({c_max, t_cmax});
    ctx.save_columnar("concurrence_max.csv", w);
}

inline void cmd_concurrence_scan(CommandContext& ctx) {
    std::vector<std::string> errors;
    check_sections(ctx.raw, {"model", "geometry", "emitters", "experiment"}, errors);
    const ModelParams p = resolve_model(ctx.raw, errors, *named_model("NR"));
    KeyTable ex(ctx.raw, "experiment", errors);
    const auto d_list = ex.get_list("d_list", {2, 4, 6, 8});
    const auto g_list = ex.get_list("g_list", {0.3, 0.5, 0.7, 1.0});
    const double t_final = ex.get_double("t_final_J", 40.0);
    const double dt = ex.get_double("dt_J", 0.02);
    const int samples = ex.get_int("samples", 400);
    const int threads = resolve_threads(ctx, ex.get_int("threads", 0));
    ex.finish();
    GeometryDefaults gd;
    gd.builder = "braid_box";
    gd.span = 40;
    gd.n_z = 41;
    gd.absorb = {"perp_min", "par_max"};
    EmitterDefaults ed;
    ed.placement = "hinge_pair";
    auto lattice = build_geometry(ctx.raw, errors, p, gd);
    raise_config_errors(errors);

    struct Cell {
        double d, g, c_max = std::nan(""), t_cmax = std::nan("");
        std::string status = "ok";
    };
    std::vector<Cell> cells;
    for (double d : d_list)
        for (double g : g_list) cells.push_back({d, g});

    parallel_for(static_cast<long>(cells.size()), threads, [&](long idx) {
        Cell& cell = cells[static_cast<size_t>(idx)];
        try {
            RawConfig sub;  // per-cell emitter placement
            sub.set("emitters", "placement", "hinge_pair");
            sub.set("emitters", "d_sites", std::to_string(static_cast<int>(cell.d)));
            sub.set("emitters", "g_over_J", format_double(cell.g));
            std::vector<std::string> errs;
            EmitterSetup setup = place_emitters(sub, errs, *lattice, ed);
            if (!errs.empty()) throw ConfigError(errs.front());
            CoupledSystem sys(lattice, setup.emitters);
            EvolveOptions opt{dt, samples, {}, false};
            const Trajectory traj = evolve(sys, sys.single_excited(0), t_final, opt);
            cell.c_max = 0.0;
            for (size_t s = 0; s < traj.concurrence.size(); ++s)
                if (traj.concurrence[s] > cell.c_max) {
                    cell.c_max = traj.concurrence[s];
                    cell.t_cmax = traj.times[s];
                }
        } catch (const std::exception& e) {
            cell.status = e.what();
            cell.c_max = std::nan("");
        }
    });

    ColumnarWriter w;
    w.meta("t_final_J", t_final);
    w.columns({"d_sites", "d_over_a", "g", "c_max", "t_cmax", "ok"});
    for (const Cell& c : cells)
        w.row({c.d, (2.0 * c.d - 1.0) / std::numbers::sqrt2, c.g, c.c_max, c.t_cmax,
               c.status == "ok" ? 1.0 : 0.0});
    ctx.save_columnar("concurrence_scan.csv", w);
}

inline void cmd_cavity(CommandContext& ctx) {
    std::vector<std::string> errors;
    check_sections(ctx.raw, {"model", "geometry", "emitters", "experiment"}, errors);
    const ModelParams p = resolve_model(ctx.raw, errors, *named_model("NR"));
    KeyTable ex(ctx.raw, "experiment", errors);
    const double t_final = ex.get_double("t_final_J", 260.0);
    const double dt = ex.get_double("dt_J", 0.02);
    const int samples = ex.get_int("samples", 1300);
    const double smooth = ex.get_double("smooth_window_J", 3.0);
    ex.finish();
    GeometryDefaults gd;
    gd.builder = "braid_box";
    gd.span = 42;
    gd.n_z = 43;
    EmitterDefaults ed;
    ed.placement = "hinge_pair";
    ed.g = 0.15;
    ed.d_sites = 8;
    Scenario sc = build_scenario(ctx, errors, p, gd, ed);
    raise_config_errors(errors);

    EvolveOptions opt{dt, samples, {}, false};
    const Trajectory traj = evolve(*sc.system, sc.system->single_excited(0), t_final, opt);
    write_trajectory(ctx, "trajectory.csv", *sc.system, 0, traj);

    std::vector<double> p1(traj.times.size()), p2(traj.times.size());
    for (size_t s = 0; s < traj.times.size(); ++s) {
        p1[s] = traj.emitter_pop(s, 0);
        p2[s] = traj.emitter_pop(s, 1);
    }
    const J12Estimate est = extract_j12(traj.times, p1, p2, smooth);
    double c_max = 0.0;
    for (double c : traj.concurrence) c_max = std::max(c_max, c);

    ColumnarWriter w;
    w.meta("smooth_window_J", smooth);
    w.columns({"j12", "j12_peak", "j12_fourier", "t_max", "ambiguous", "c_max"});
    w.row({est.j12, est.j12_peak, est.j12_fourier, est.t_max, est.ambiguous ? 1.0 : 0.0, c_max});
    ctx.save_columnar("j12.csv", w);
}

inline void cmd_j12_scan(CommandContext& ctx) {
    std::vector<std::string> errors;
    check_sections(ctx.raw, {"model", "geometry", "emitters", "experiment"}, errors);
    const ModelParams p = resolve_model(ctx.raw, errors, *named_model("NR"));
    KeyTable ex(ctx.raw, "experiment", errors);
    const auto spans = ex.get_list("spans", {22, 42});
    const auto d_list = ex.get_list("d_list", {4, 8, 12});
    const double g = ex.get_double("g_over_J", 0.15);
    const double t_final = ex.get_double("t_final_J", 260.0);
    const double dt = ex.get_double("dt_J", 0.02);
    const int samples = ex.get_int("samples", 1300);
    const int n_z = ex.get_int("n_z", 43);
    const double smooth = ex.get_double("smooth_window_J", 3.0);
    const int threads = resolve_threads(ctx, ex.get_int("threads", 0));
    ex.finish();
    raise_config_errors(errors);

    struct Cell {
        int span;
        int d;
        double j12 = std::nan(""), j12_peak = std::nan(""), j12_fourier = std::nan("");
        double c_max = std::nan("");
        bool ambiguous = false;
        std::string status = "ok";
    };
    std::vector<Cell> cells;
    for (double s : spans)
        for (double d : d_list) cells.push_back({static_cast<int>(s), static_cast<int>(d)});

    // lattices shared per span
    std::map<int, std::shared_ptr<FiniteLattice>> lats;
    for (double s : spans)
        lats[static_cast<int>(s)] =
            std::make_shared<FiniteLattice>(braid_box(p, static_cast<int>(s), n_z));

    parallel_for(static_cast<long>(cells.size()), threads, [&](long idx) {
        Cell& cell = cells[static_cast<size_t>(idx)];
        try {
            auto lattice = lats.at(cell.span);
            RawConfig sub;
            sub.set("emitters", "placement", "hinge_pair");
            sub.set("emitters", "d_sites", std::to_string(cell.d));
            sub.set("emitters", "g_over_J", format_double(g));
            std::vector<std::string> errs;
            EmitterDefaults ed;
            ed.placement = "hinge_pair";
            EmitterSetup setup = place_emitters(sub, errs, *lattice, ed);
            if (!errs.empty()) throw ConfigError(errs.front());
            CoupledSystem sys(lattice, setup.emitters);
            EvolveOptions opt{dt, samples, {}, false};
            const Trajectory traj = evolve(sys, sys.single_excited(0), t_final, opt);
            std::vector<double> p1(traj.times.size()), p2(traj.times.size());
            for (size_t s = 0; s < traj.times.size(); ++s) {
                p1[s] = traj.emitter_pop(s, 0);
                p2[s] = traj.emitter_pop(s, 1);
            }
            const J12Estimate est = extract_j12(traj.times, p1, p2, smooth);
            cell.j12 = est.j12;
            cell.j12_peak = est.j12_peak;
            cell.j12_fourier = est.j12_fourier;
            cell.ambiguous = est.ambiguous;
            cell.c_max = 0.0;
            for (double c : traj.concurrence) cell.c_max = std::max(cell.c_max, c);
        } catch (const std::exception& e) {
            cell.status = e.what();
        }
    });

    ColumnarWriter w;
    w.meta("g_over_J", g);
    w.meta("t_final_J", t_final);
    w.columns({"span", "L_sqrt2a", "d_sites", "j12", "j12_peak", "j12_fourier", "ambiguous",
               "c_max", "ok"});
    for (const Cell& c : cells)
        w.row({static_cast<double>(c.span), c.span / 2.0, static_cast<double>(c.d), c.j12,
               c.j12_peak, c.j12_fourier, c.ambiguous ? 1.0 : 0.0, c.c_max,
               c.status == "ok" ? 1.0 : 0.0});
    ctx.save_columnar("j12_scan.csv", w);
}

// --- dispatch ------------------------------------------------------------------

inline const std::map<std::string, void (*)(CommandContext&)>& command_table() {
    static const std::map<std::string, void (*)(CommandContext&)> table = {
        {"chern", cmd_chern},
        {"weyl-points", cmd_weyl_points},
        {"phase-diagram", cmd_phase_diagram},
        {"bands", cmd_bands},
        {"fermi-arcs", cmd_fermi_arcs},
        {"berry-surface", cmd_berry_surface},
        {"evolve", cmd_evolve},
        {"bloch-map", cmd_bloch_map},
        {"tof", cmd_tof},
        {"farfield", cmd_farfield},
        {"chiral-channel", cmd_chiral_channel},
        {"concurrence-scan", cmd_concurrence_scan},
        {"cavity", cmd_cavity},
        {"j12-scan", cmd_j12_scan},
    };
    return table;
}

/// Execute one command; throws ConfigError / IoError / NumericalError.
inline void run_command(const std::string& name, const RawConfig& raw,
                        const std::filesystem::path& out_dir, int threads) {
    const auto& table = command_table();
    const auto it = table.find(name);
    if (it == table.end()) throw ConfigError("unknown command '" + name + "'");
    const auto t0 = std::chrono::steady_clock::now();
    Manifest manifest(name, raw.hash());
    std::filesystem::create_directories(out_dir);
    CommandContext ctx{raw, out_dir, threads, &manifest};
    it->second(ctx);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest.save(out_dir / "manifest.csv", wall);
}

}  // namespace warc
