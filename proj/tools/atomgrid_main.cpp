// atomgrid command-line front end: power flow, transient simulation, orbit
// analysis and center-of-mass sweeps over synchronous-machine / VSG fleets.
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "atomgrid/run.hpp"

namespace {

void add_common_options(CLI::App* cmd, atomgrid::RunConfig& cfg) {
    cmd->add_option("--case", cfg.case_source,
                    "Built-in case name (ieee9, ieee39) or case-file path")
        ->capture_default_str();
    cmd->add_option("--overlay", cfg.overlay_path, "Overlay file applied to the case");
    cmd->add_option("--out", cfg.out_dir, "Directory for output files (written atomically)");
    cmd->add_option("--format", cfg.format, "Stdout rendering: json, csv or table")
        ->capture_default_str();
    cmd->add_option("--seed", cfg.seed, "Seed echoed into outputs (reserved for tests)")
        ->capture_default_str();
    cmd->add_option("--tol", cfg.tol, "Power-flow mismatch tolerance, p.u.")
        ->capture_default_str();
    cmd->add_option("--max-iter", cfg.max_iter, "Power-flow iteration cap")
        ->capture_default_str();
}

void add_scenario_options(CLI::App* cmd, atomgrid::RunConfig& cfg) {
    cmd->add_option("--fault-bus", cfg.fault_bus, "Bus for the three-phase fault (omit: no fault)");
    cmd->add_option("--fault-t", cfg.fault_t, "Fault application time, s")->capture_default_str();
    cmd->add_option("--clear-t", cfg.clear_t, "Fault clearing time, s")->capture_default_str();
    cmd->add_option("--fault-g", cfg.fault_g, "Fault shunt conductance, p.u.")
        ->capture_default_str();
    cmd->add_option("--fault-b", cfg.fault_b, "Fault shunt susceptance, p.u.")
        ->capture_default_str();
    cmd->add_option("--duration", cfg.duration_s, "Simulation horizon, s")->capture_default_str();
    cmd->add_option("--dt", cfg.dt_s, "Integration step, s")->capture_default_str();
}

void add_analysis_options(CLI::App* cmd, atomgrid::RunConfig& cfg) {
    cmd->add_option("--q-unit", cfg.q_unit, "Voltage quantum for level counting, p.u.")
        ->capture_default_str();
    cmd->add_option("--embed-dim", cfg.embed_dim, "Embedding dimension (1 or 2)")
        ->capture_default_str();
    cmd->add_option("--settle-window", cfg.settle_window_s, "Steady-state window length, s")
        ->capture_default_str();
    cmd->add_option("--settle-tol", cfg.settle_tol,
                    "Peak-to-peak ceiling for a settled window, p.u.")
        ->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"power-system transient dynamics with mass/orbit structure analysis"};
    app.require_subcommand(1);

    atomgrid::RunConfig cfg;

    CLI::App* pf = app.add_subcommand("powerflow", "Solve the AC power flow");
    add_common_options(pf, cfg);

    CLI::App* sim = app.add_subcommand("simulate", "Integrate a fault scenario");
    add_common_options(sim, cfg);
    add_scenario_options(sim, cfg);

    CLI::App* an = app.add_subcommand("analyze", "Simulate and report masses, center of mass, "
                                                 "orbit structure and activation energies");
    add_common_options(an, cfg);
    add_scenario_options(an, cfg);
    add_analysis_options(an, cfg);

    CLI::App* sw = app.add_subcommand("sweep", "Center-of-mass series over SM-to-VSG conversions");
    add_common_options(sw, cfg);
    add_analysis_options(sw, cfg);
    sw->add_option("--replace", cfg.replace,
                   "Ordered SM buses to convert to VSGs (one prefix per sweep point)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::ostringstream sink;
        app.exit(e, sink, sink);
        atomgrid::detail::emit_error(std::cerr, atomgrid::exit_input, "cli", e.what());
        return atomgrid::exit_input;
    }

    if (pf->parsed()) return atomgrid::cmd_powerflow(cfg, std::cout, std::cerr);
    if (sim->parsed()) return atomgrid::cmd_simulate(cfg, std::cout, std::cerr);
    if (an->parsed()) return atomgrid::cmd_analyze(cfg, std::cout, std::cerr);
    if (sw->parsed()) return atomgrid::cmd_sweep(cfg, std::cout, std::cerr);
    return atomgrid::exit_input;
}
