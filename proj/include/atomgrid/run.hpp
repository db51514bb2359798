#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <unistd.h>

#include "atomgrid/anatomy.hpp"
#include "atomgrid/builtin_cases.hpp"
#include "atomgrid/case_io.hpp"
#include "atomgrid/dynamics.hpp"
#include "atomgrid/errors.hpp"
#include "atomgrid/powerflow.hpp"
#include "atomgrid/render.hpp"

namespace atomgrid {

// Exit codes: 0 ok (possibly with warnings), 2 input error, 3 numerical
// failure, 4 internal invariant violation.
enum ExitCode : int { exit_ok = 0, exit_input = 2, exit_numerics = 3, exit_internal = 4 };

struct RunConfig {
    std::string case_source = "ieee9";  // built-in name or case-file path
    std::string overlay_path;

    int fault_bus = -1;  // < 0 disables the fault scenario
    double fault_t = 1.0;
    double clear_t = 1.1;
    double fault_g = 1e4;   // fault shunt admittance, p.u.
    double fault_b = -1e4;

    double duration_s = 10.0;
    double dt_s = 1e-3;

    double q_unit = 1e-3;
    int embed_dim = 2;
    double settle_window_s = 1.0;
    double settle_tol = 0.002;

    double tol = 1e-8;  // power-flow options
    int max_iter = 20;

    std::vector<int> replace;  // sweep: ordered SM buses to convert

    std::string out_dir;
    std::string format = "json";  // json | csv | table
    unsigned seed = 0;            // echoed into outputs; reserved for test use

    void validate() const {
        if (duration_s <= 0) throw SemanticError("duration must be > 0");
        if (dt_s <= 0) throw SemanticError("dt must be > 0");
        if (dt_s > duration_s / 10.0)
            throw SemanticError("dt must be at most duration/10");
        if (fault_bus >= 0) {
            if (!(fault_t < clear_t))
                throw SemanticError("fault apply time must precede the clear time");
            if (clear_t >= duration_s)
                throw SemanticError("fault events must fall inside the horizon");
        }
        if (q_unit <= 0) throw SemanticError("q-unit must be > 0");
        if (embed_dim < 1 || embed_dim > 2) throw SemanticError("embed-dim must be 1 or 2");
        if (settle_window_s <= 0) throw SemanticError("settle-window must be > 0");
        if (settle_tol <= 0) throw SemanticError("settle-tol must be > 0");
        if (tol <= 0) throw SemanticError("tol must be > 0");
        if (max_iter < 0) throw SemanticError("max-iter must be >= 0");
        if (format != "json" && format != "csv" && format != "table")
            throw SemanticError("format must be json, csv or table");
    }

    NetworkCase load() const {
        NetworkCase net = load_case(case_source);
        if (!overlay_path.empty())
            net = apply_overlay(net, read_text_file(overlay_path));
        return net;
    }

    EventSchedule schedule() const {
        if (fault_bus < 0) return {};
        return fault_schedule(fault_bus, fault_t, clear_t, {fault_g, fault_b});
    }

    SettleOptions settle() const {
        SettleOptions s;
        s.window_s = settle_window_s;
        s.v_pp_tol = settle_tol;
        return s;
    }
};

namespace detail {

inline bool use_color() {
    return std::getenv("ATOMGRID_NO_COLOR") == nullptr && ::isatty(STDOUT_FILENO) == 1;
}

/// Writes via a temp file in the same directory plus rename, so readers
/// never observe a torn file.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.parent_path() / (".tmp." + path.filename().string());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw SemanticError("cannot write file: " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

inline void emit_error(std::ostream& err, int code, const std::string& kind,
                       const std::string& message) {
    Json doc;
    doc["error"] = {{"exit_code", code}, {"kind", kind}, {"message", message}};
    err << doc.dump() << "\n";
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError& e) {
        emit_error(err, exit_input, "parse", e.what());
        return exit_input;
    } catch (const SemanticError& e) {
        emit_error(err, exit_input, "semantic", e.what());
        return exit_input;
    } catch (const NumericsError& e) {
        emit_error(err, exit_numerics, "numerics", e.what());
        return exit_numerics;
    } catch (const InternalError& e) {
        emit_error(err, exit_internal, "internal", e.what());
        return exit_internal;
    } catch (const std::exception& e) {
        emit_error(err, exit_internal, "internal", e.what());
        return exit_internal;
    }
}

inline Json scenario_echo(const RunConfig& cfg, const EventSchedule& schedule,
                          const std::vector<std::string>& warnings) {
    Json doc;
    doc["case"] = cfg.case_source;
    if (cfg.overlay_path.empty())
        doc["overlay"] = nullptr;
    else
        doc["overlay"] = cfg.overlay_path;
    doc["events"] = events_json(schedule);
    doc["duration_s"] = cfg.duration_s;
    doc["dt_s"] = cfg.dt_s;
    doc["seed"] = cfg.seed;
    doc["warnings"] = warnings;
    return doc;
}

} // namespace detail

inline int cmd_powerflow(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        cfg.validate();
        const NetworkCase net = cfg.load();
        PowerFlowOptions opts;
        opts.tol = cfg.tol;
        opts.max_iter = cfg.max_iter;
        const PowerFlowSolution sol = solve_powerflow(net, opts);
        const Json doc = solution_json(net, sol);

        if (!cfg.out_dir.empty())
            detail::atomic_write_file(std::filesystem::path(cfg.out_dir) / "powerflow.json",
                                      doc.dump(2) + "\n");
        if (cfg.format == "csv") {
            out << "bus,v_pu,theta_rad\n";
            for (std::size_t i = 0; i < sol.bus_ids.size(); ++i)
                out << sol.bus_ids[i] << ","
                    << detail::num(std::abs(sol.v(static_cast<Eigen::Index>(i)))) << ","
                    << detail::num(std::arg(sol.v(static_cast<Eigen::Index>(i)))) << "\n";
        } else if (cfg.format == "table") {
            char line[96];
            std::snprintf(line, sizeof(line), "%4s %10s %12s\n", "bus", "V [p.u.]", "theta [rad]");
            out << line;
            for (std::size_t i = 0; i < sol.bus_ids.size(); ++i) {
                std::snprintf(line, sizeof(line), "%4d %10.5f %12.6f\n", sol.bus_ids[i],
                              std::abs(sol.v(static_cast<Eigen::Index>(i))),
                              std::arg(sol.v(static_cast<Eigen::Index>(i))));
                out << line;
            }
        } else {
            out << doc.dump(2) << "\n";
        }
        return exit_ok;
    });
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        cfg.validate();
        const NetworkCase net = cfg.load();
        PowerFlowOptions pf_opts;
        pf_opts.tol = cfg.tol;
        pf_opts.max_iter = cfg.max_iter;
        const PowerFlowSolution pf = solve_powerflow(net, pf_opts);
        const EventSchedule schedule = cfg.schedule();
        const Trajectory traj = simulate(net, pf, schedule, cfg.duration_s, cfg.dt_s);

        std::vector<std::string> warnings;
        if (traj.lost_sync)
            warnings.push_back("loss_of_synchronism at t = " +
                               detail::num(traj.lost_sync_time) + " s");
        const Json echo = detail::scenario_echo(cfg, schedule, warnings);

        if (!cfg.out_dir.empty()) {
            detail::atomic_write_file(std::filesystem::path(cfg.out_dir) / "trajectory.csv",
                                      trajectory_csv(traj));
            detail::atomic_write_file(std::filesystem::path(cfg.out_dir) / "scenario.json",
                                      echo.dump(2) + "\n");
        }
        if (cfg.format == "csv") {
            out << trajectory_csv(traj);
        } else if (cfg.format == "table") {
            char line[96];
            out << "samples: " << traj.samples() << ", dt: " << detail::num(traj.dt) << " s\n";
            for (const std::string& w : warnings) out << "warning: " << w << "\n";
            std::snprintf(line, sizeof(line), "%4s %12s %12s\n", "bus", "V(0) [p.u.]",
                          "V(end) [p.u.]");
            out << line;
            for (std::size_t i = 0; i < traj.bus_ids.size(); ++i) {
                std::snprintf(line, sizeof(line), "%4d %12.5f %12.5f\n", traj.bus_ids[i],
                              traj.v_bus(0, static_cast<Eigen::Index>(i)),
                              traj.v_bus(traj.samples() - 1, static_cast<Eigen::Index>(i)));
                out << line;
            }
        } else {
            out << echo.dump(2) << "\n";
        }
        return exit_ok;
    });
}

inline int cmd_analyze(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        cfg.validate();
        const NetworkCase net = cfg.load();
        PowerFlowOptions pf_opts;
        pf_opts.tol = cfg.tol;
        pf_opts.max_iter = cfg.max_iter;
        const PowerFlowSolution pf = solve_powerflow(net, pf_opts);
        const EventSchedule schedule = cfg.schedule();
        const Trajectory traj = simulate(net, pf, schedule, cfg.duration_s, cfg.dt_s);

        const ImpedanceMatrix z = anatomy_impedance(net);
        const ParticleSet particles = build_particles(net, z, cfg.embed_dim);
        const CenterOfMass com = center_of_mass(particles);
        const OrbitReport orbit = orbit_report(traj, net, cfg.q_unit, z, cfg.settle());

        const double t_before =
            cfg.fault_bus >= 0 ? cfg.fault_t : std::min(cfg.settle_window_s, cfg.duration_s);
        std::vector<ActivationRecord> activation;
        for (const Generator& g : net.generators)
            activation.push_back(activation_energy(traj, net, g.bus, t_before, traj.t.back(),
                                                   cfg.settle(), /*require_settled=*/false));

        Json doc = particles_json(particles, com);
        doc["case"] = net.name;
        doc["orbit_report"] = orbit_report_json(orbit);
        doc["activation"] = activation_json(activation);

        std::vector<std::string> warnings;
        if (traj.lost_sync)
            warnings.push_back("loss_of_synchronism at t = " +
                               detail::num(traj.lost_sync_time) + " s");
        if (!orbit.settled) warnings.push_back("orbit report not settled");
        doc["warnings"] = warnings;

        const std::string table = report_table(net, orbit, /*color=*/false);
        if (!cfg.out_dir.empty()) {
            detail::atomic_write_file(std::filesystem::path(cfg.out_dir) / "analysis.json",
                                      doc.dump(2) + "\n");
            detail::atomic_write_file(std::filesystem::path(cfg.out_dir) / "analysis.txt", table);
        }
        if (cfg.format == "table")
            out << report_table(net, orbit, detail::use_color());
        else if (cfg.format == "csv")
            out << trajectory_csv(traj);
        else
            out << doc.dump(2) << "\n";
        return exit_ok;
    });
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        cfg.validate();
        const NetworkCase base = cfg.load();
        for (int bus : cfg.replace) {
            const auto idx = base.generator_indices_at(bus);
            if (idx.empty())
                throw SemanticError("sweep: no generator at bus " + std::to_string(bus));
            if (base.generators[static_cast<std::size_t>(idx.front())].kind() != GenKind::sm)
                throw SemanticError("sweep: generator at bus " + std::to_string(bus) +
                                    " is not an SM");
        }

        // Replacements keep the electrical footprint (xd', damping, rating),
        // so the embedding is common to every sweep point.
        const ImpedanceMatrix z = anatomy_impedance(base);
        const ParticleSet baseline = build_particles(base, z, cfg.embed_dim);

        Json points = Json::array();
        NetworkCase current = base;
        for (std::size_t k = 0; k <= cfg.replace.size(); ++k) {
            if (k > 0) {
                const int bus = cfg.replace[k - 1];
                for (Generator& g : current.generators)
                    if (g.bus == bus) {
                        VsgParams vp;
                        vp.xd_prime = g.xd_prime();
                        vp.d = g.damping();
                        g.params = vp;
                    }
            }
            const std::vector<double> masses = particle_masses(current);
            ParticleSet ps = baseline;
            for (Particle& p : ps.particles) {
                p.mass = masses[static_cast<std::size_t>(p.gen_index)];
                p.kind = current.generators[static_cast<std::size_t>(p.gen_index)].kind();
            }
            const CenterOfMass com = center_of_mass(ps);

            Json pt;
            pt["n_vsg"] = k;
            Json replaced = Json::array();
            for (std::size_t i = 0; i < k; ++i) replaced.push_back(cfg.replace[i]);
            pt["replaced"] = replaced;
            Json r = Json::array();
            for (Eigen::Index i = 0; i < com.r.size(); ++i) r.push_back(com.r(i));
            pt["r"] = r;
            pt["m_total"] = com.m_total;
            if (std::isnan(com.dist_to_nearest_sm))
                pt["dist_to_nearest_sm"] = nullptr;
            else
                pt["dist_to_nearest_sm"] = com.dist_to_nearest_sm;
            points.push_back(pt);
        }

        Json doc;
        doc["case"] = base.name;
        doc["seed"] = cfg.seed;
        doc["points"] = points;

        if (!cfg.out_dir.empty())
            detail::atomic_write_file(std::filesystem::path(cfg.out_dir) / "sweep.json",
                                      doc.dump(2) + "\n");
        if (cfg.format == "csv") {
            out << "n_vsg,m_total,dist_to_nearest_sm\n";
            for (const Json& pt : points) {
                out << pt["n_vsg"].get<std::size_t>() << ","
                    << detail::num(pt["m_total"].get<double>()) << ",";
                if (pt["dist_to_nearest_sm"].is_null())
                    out << "\n";
                else
                    out << detail::num(pt["dist_to_nearest_sm"].get<double>()) << "\n";
            }
        } else if (cfg.format == "table") {
            char line[96];
            std::snprintf(line, sizeof(line), "%6s %14s %20s\n", "n_vsg", "m_total",
                          "dist_to_nearest_sm");
            out << line;
            for (const Json& pt : points) {
                std::snprintf(line, sizeof(line), "%6zu %14.6g %20.6g\n",
                              pt["n_vsg"].get<std::size_t>(), pt["m_total"].get<double>(),
                              pt["dist_to_nearest_sm"].is_null()
                                  ? std::numeric_limits<double>::quiet_NaN()
                                  : pt["dist_to_nearest_sm"].get<double>());
                out << line;
            }
        } else {
            out << doc.dump(2) << "\n";
        }
        return exit_ok;
    });
}

} // namespace atomgrid
