#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "deom/bath_json.hpp"
#include "deom/config.hpp"
#include "deom/oracles.hpp"

namespace deom {

struct RunArtifacts {
    std::string csv_path;
    std::string manifest_path;
    TimeSeries series;
    Json manifest;
};

inline std::string manifest_path_for(const std::string& csv_path) {
    return csv_path + ".manifest.json";
}

namespace detail {

inline Json fit_json(const BathFitReport& rep) {
    return Json::object({{"window", Json::array({rep.window_lo, rep.window_hi})},
                         {"samples_per_pair", rep.samples_per_pair},
                         {"max_abs_dev", rep.max_abs_dev},
                         {"mean_abs_dev", rep.mean_abs_dev},
                         {"max_rel_dev", rep.max_rel_dev},
                         {"declared_bound", rep.declared_bound}});
}

inline Hierarchy build_hierarchy(const RunConfig& cfg) {
    if (cfg.has_bath)
        return Hierarchy(cfg.build_model(), cfg.build_frame(), cfg.field, cfg.build_expansion(),
                         cfg.options);
    return Hierarchy(cfg.build_model(), cfg.build_frame(), cfg.options);
}

inline void write_text_file(const std::string& path, const std::string& text,
                            bool append = false) {
    std::ofstream out(path, append ? std::ios::binary | std::ios::app : std::ios::binary);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw ConfigError("failed while writing '" + path + "'");
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Symmetry residuals of the spectral density: J(w) must satisfy both
/// conj(J_ij(w)) = -J_ij(-w) and conj(J_ij(w)) = J_ji(w) wherever defined.
inline double symmetry_residual(const MatrixDensity& m, int n_points = 1000) {
    const double w_max = 10.0 * m.scale();
    double worst = 0.0;
    const auto active = m.active_components();
    for (int k = 0; k < n_points; ++k) {
        const double w = -w_max + 2.0 * w_max * k / (n_points - 1);
        for (int i : active)
            for (int j : active) {
                const cplx jw = m.eval(i, j, w);
                worst = std::max(worst, std::abs(std::conj(jw) + m.eval(i, j, -w)));
                worst = std::max(worst, std::abs(std::conj(jw) - m.eval(j, i, w)));
            }
    }
    return worst;
}

} // namespace detail

/// Propagates the configured run, writing the time series as CSV plus a
/// manifest JSON carrying the resolved configuration and run statistics.
/// Outputs are deterministic for a fixed configuration; the manifest records
/// wall time and is the one artifact allowed to differ between repeats.
inline RunArtifacts run(const RunConfig& base, const std::string& output_override = "",
                        int stride_override = 0) {
    RunConfig cfg = base;
    if (!output_override.empty()) {
        cfg.output_path = output_override;
        cfg.resolved["output"]["path"] = cfg.output_path;
    }
    if (stride_override > 0) {
        cfg.stride = stride_override;
        cfg.resolved["hierarchy"]["stride"] = cfg.stride;
        if (cfg.checkpoint_at >= 0
            && std::llround(cfg.checkpoint_at / cfg.dt) % cfg.stride != 0)
            throw ConfigError(
                "stride override leaves output.checkpoint_at off the output grid");
    }

    const auto t0 = std::chrono::steady_clock::now();
    Hierarchy h = detail::build_hierarchy(cfg);
    const std::vector<ObservableSpec> specs = cfg.build_observables(h.model());
    HierarchyState state = h.initial_state(cfg.build_initial());

    TimeSeries ts;
    const long long ck_steps =
        cfg.checkpoint_at >= 0 ? std::llround(cfg.checkpoint_at / cfg.dt) : -1;
    h.propagate(state, cfg.t_final, cfg.dt, cfg.stride, [&](const HierarchyState& s) {
        append_row(ts, h, s, specs);
        if (s.steps == ck_steps) save_checkpoint(s, cfg.checkpoint_path, cfg.resolved.dump());
    });

    std::ostringstream csv;
    write_csv(csv, ts);
    detail::write_text_file(cfg.output_path, csv.str());

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Json manifest = Json::object();
    manifest["config"] = cfg.resolved;
    manifest["catalog"] = Json::object({{"slots", h.catalog().slot_count()},
                                        {"modes", h.n_modes()},
                                        {"depth", cfg.options.depth}});
    manifest["system_dim"] = h.dim();
    manifest["bath_fit"] =
        cfg.has_bath ? detail::fit_json(fit_report(h.expansion(), cfg.build_density()))
                     : Json(nullptr);
    manifest["rows"] = ts.rows.size();
    manifest["wall_time_s"] = wall;
    manifest["warnings"] = h.warnings();
    manifest["resumed"] = false;
    const std::string mpath = manifest_path_for(cfg.output_path);
    detail::write_text_file(mpath, manifest.dump(2) + "\n");

    return {cfg.output_path, mpath, std::move(ts), std::move(manifest)};
}

/// Continues a checkpointed run to its configured end, appending rows to the
/// existing output file so the final bytes match an uninterrupted run. The
/// file must end exactly at the checkpointed row.
inline RunArtifacts resume_run(const std::string& checkpoint_path,
                               const std::string& output_override = "") {
    CheckpointData ck = load_checkpoint(checkpoint_path);
    RunConfig cfg = parse_config_text(ck.config_blob);
    if (!output_override.empty()) cfg.output_path = output_override;

    const auto t0 = std::chrono::steady_clock::now();
    Hierarchy h = detail::build_hierarchy(cfg);
    const std::vector<ObservableSpec> specs = cfg.build_observables(h.model());
    HierarchyState state = std::move(ck.state);
    require(state.dim == h.dim(), "checkpoint dimension does not match its configuration");
    require(state.dt == cfg.dt, "checkpoint was stepped with a different dt");
    require(state.scaled == cfg.options.rescale,
            "checkpoint scaling does not match its configuration");
    require(state.steps % cfg.stride == 0, "checkpoint does not lie on an output row");

    TimeSeries ts;
    h.propagate(state, cfg.t_final, cfg.dt, cfg.stride,
                [&](const HierarchyState& s) { append_row(ts, h, s, specs); });
    require(!ts.rows.empty(), "resumed propagation produced no rows");

    // The first recomputed row must already sit at the tail of the file;
    // everything after it is new.
    const std::string existing = detail::read_text_file(cfg.output_path);
    const std::string head = csv_header(ts);
    const std::string row0 = csv_row(ts, 0);
    require(existing.size() >= head.size() + row0.size()
                && existing.compare(0, head.size(), head) == 0,
            "output file does not carry the checkpoint's observable columns");
    require(existing.compare(existing.size() - row0.size(), row0.size(), row0) == 0,
            "output file does not end at the checkpointed row");

    std::string tail;
    for (std::size_t r = 1; r < ts.rows.size(); ++r) tail += csv_row(ts, r);
    detail::write_text_file(cfg.output_path, tail, true);

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    long long rows_total = 0;
    for (char c : existing) rows_total += c == '\n';
    rows_total += static_cast<long long>(ts.rows.size()) - 2;  // header and shared row

    Json manifest = Json::object();
    manifest["config"] = cfg.resolved;
    manifest["catalog"] = Json::object({{"slots", h.catalog().slot_count()},
                                        {"modes", h.n_modes()},
                                        {"depth", cfg.options.depth}});
    manifest["system_dim"] = h.dim();
    manifest["bath_fit"] =
        cfg.has_bath ? detail::fit_json(fit_report(h.expansion(), cfg.build_density()))
                     : Json(nullptr);
    manifest["rows"] = rows_total;
    manifest["wall_time_s"] = wall;
    manifest["warnings"] = h.warnings();
    manifest["resumed"] = true;
    const std::string mpath = manifest_path_for(cfg.output_path);
    detail::write_text_file(mpath, manifest.dump(2) + "\n");

    return {cfg.output_path, mpath, std::move(ts), std::move(manifest)};
}

/// Runs every oracle comparison and invariant check that applies to the
/// configuration and reports them as machine-readable entries. Failures are
/// entries, not errors: the report always comes back.
inline Json validate(const RunConfig& cfg) {
    Json checks = Json::array();
    bool all = true;
    auto add = [&](const std::string& name, const std::string& status, double worst, double tol,
                   const std::string& detail_msg) {
        checks.push_back(Json::object({{"name", name},
                                       {"status", status},
                                       {"worst", worst},
                                       {"tolerance", tol},
                                       {"detail", detail_msg}}));
        if (status == "fail") all = false;
    };

    if (cfg.has_bath) {
        const MatrixDensity m = cfg.build_density();
        const double res = detail::symmetry_residual(m);
        add("bath_symmetry", res < 1e-12 ? "pass" : "fail", res, 1e-12,
            "conj(J_ij(w)) = -J_ij(-w) = J_ji(w) on a 1000-point grid");

        try {
            const BathExpansion ex = cfg.build_expansion();
            const BathFitReport rep = fit_report(ex, m);
            add("bath_reconstruction", rep.max_rel_dev < 1e-3 ? "pass" : "fail",
                rep.max_rel_dev, 1e-3,
                rep.max_rel_dev < 1e-3 ? "expansion reproduces the quadrature correlation"
                                       : "raise bath.k_bose to tighten the expansion");
        } catch (const ConfigError& e) {
            add("bath_reconstruction", "skipped", 0.0, 0.0, e.what());
        }
    }

    bool ran_dynamics = false;
    try {
        Hierarchy h = detail::build_hierarchy(cfg);
        const MatC rho0 = cfg.build_initial();

        if (cfg.has_bath) {
            // invariants on a short probe segment
            HierarchyState s = h.initial_state(rho0);
            const double t_probe = std::min(cfg.t_final, 50.0 * cfg.dt);
            double worst_trace = 0.0, worst_conj = 0.0;
            h.propagate(s, t_probe, cfg.dt, cfg.stride, [&](const HierarchyState& st) {
                const MatC r = reduced_density(h, st).mat;
                worst_trace = std::max(worst_trace, std::abs(r.trace() - cplx{1.0, 0.0}));
                for (int n = 0; n < h.catalog().slot_count(); ++n) {
                    const MatC a = h.ado(st, n);
                    const MatC b = h.ado(st, h.conj_slot(n));
                    worst_conj = std::max(worst_conj, (a.adjoint() - b).norm());
                }
            });
            add("trace_conservation", worst_trace < 1e-8 ? "pass" : "fail", worst_trace, 1e-8,
                "reduced trace along a short probe segment");
            add("hermiticity_conjugacy", worst_conj < 1e-8 ? "pass" : "fail", worst_conj, 1e-8,
                "paired hierarchy slots stay mutually adjoint");
            ran_dynamics = true;
        }

        if (!cfg.has_bath || cfg.charge == 0.0) {
            HierarchyState s = h.initial_state(rho0);
            std::vector<double> grid;
            std::vector<MatC> got;
            h.propagate(s, cfg.t_final, cfg.dt, cfg.stride, [&](const HierarchyState& st) {
                grid.push_back(st.t);
                got.push_back(reduced_density(h, st).mat);
            });
            const OracleResult ref =
                closed_system_oracle(h.model(), h.frame(), rho0, grid);
            double worst = 0.0;
            for (std::size_t k = 0; k < grid.size(); ++k)
                worst = std::max(worst, (got[k] - ref.states[k]).cwiseAbs().maxCoeff());
            add("closed_system_oracle", worst < 1e-8 ? "pass" : "fail", worst, 1e-8,
                "decoupled run against the unitary reference");
            ran_dynamics = true;
        } else {
            const bool commuting = cfg.system_type == "two_level" && cfg.coupling[0].empty()
                                && cfg.coupling[1].empty() && cfg.coupling[2] == "sz"
                                && cfg.motion.rotation.mode == RotationProfile::Mode::none
                                && cfg.motion.translation.mode == TranslationProfile::Mode::none;
            if (!commuting) {
                add("pure_dephasing_oracle", "skipped", 0.0, 0.0,
                    "system and coupling do not commute, so the dephasing closed form "
                    "does not apply");
            } else if (std::abs(rho0(0, 1)) == 0.0) {
                add("pure_dephasing_oracle", "skipped", 0.0, 0.0,
                    "initial state carries no coherence to dephase");
            } else {
                HierarchyState s = h.initial_state(rho0);
                std::vector<double> grid;
                std::vector<cplx> got;
                h.propagate(s, cfg.t_final, cfg.dt, cfg.stride,
                            [&](const HierarchyState& st) {
                                grid.push_back(st.t);
                                got.push_back(reduced_density(h, st).mat(0, 1));
                            });
                const OracleResult ref =
                    pure_dephasing_oracle(cfg.omega0, rho0(0, 1), h.expansion(), grid);
                double worst = 0.0;
                for (std::size_t k = 0; k < grid.size(); ++k)
                    worst = std::max(worst,
                                     std::abs(std::abs(got[k]) - std::abs(ref.values[k])));
                add("pure_dephasing_oracle", worst < 1e-4 ? "pass" : "fail", worst, 1e-4,
                    "coherence magnitude against the cumulant closed form");
                ran_dynamics = true;
            }
        }

        if (cfg.has_bath && cfg.charge != 0.0) {
            RunConfig deeper = cfg;
            deeper.options.depth += 2;
            Hierarchy h2 = detail::build_hierarchy(deeper);
            HierarchyState s1 = h.initial_state(rho0);
            HierarchyState s2 = h2.initial_state(rho0);
            h.propagate(s1, cfg.t_final, cfg.dt, cfg.stride);
            h2.propagate(s2, cfg.t_final, cfg.dt, cfg.stride);
            const double diff =
                (reduced_density(h, s1).mat - reduced_density(h2, s2).mat).cwiseAbs().maxCoeff();
            add("depth_convergence", diff < 1e-6 ? "pass" : "fail", diff, 1e-6,
                diff < 1e-6 ? "two extra tiers leave the reduced state unchanged"
                            : "raise hierarchy.depth; the hierarchy is not converged");
            ran_dynamics = true;
        }
    } catch (const std::runtime_error& e) {
        add("dynamics", "fail", 0.0, 0.0, e.what());
    }
    (void)ran_dynamics;

    return Json::object({{"checks", checks}, {"all_passed", all}});
}

/// Spectral-density symmetry plus expansion quality for the configured bath;
/// no propagation involved.
inline Json check_bath(const RunConfig& cfg) {
    require(cfg.has_bath, "check-bath needs a configuration with a bath section");
    const MatrixDensity m = cfg.build_density();
    const double res = detail::symmetry_residual(m);

    Json out = Json::object();
    out["family"] = detail::density_family_name(cfg.bath_density);
    out["symmetry"] = Json::object(
        {{"max_residual", res}, {"tolerance", 1e-12}, {"pass", res < 1e-12}});
    try {
        const BathExpansion ex = cfg.build_expansion();
        Json e = Json::object();
        e["supported"] = true;
        e["method"] = ex.method;
        e["n_exponents"] = ex.n_exponents();
        e["fit"] = detail::fit_json(fit_report(ex, m));
        out["expansion"] = e;
    } catch (const ConfigError& err) {
        out["expansion"] = Json::object({{"supported", false}, {"reason", err.what()}});
    }
    out["pass"] = res < 1e-12;
    return out;
}

} // namespace deom
