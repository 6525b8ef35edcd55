// Command-line front end: single solves, convergence ladders with CSV and
// Markdown tables, and a stabilization-parameter calculator.
//
// Exit codes: 0 success, 1 solver failure, 2 configuration error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "stabfem/adr.hpp"
#include "stabfem/harness.hpp"
#include "stabfem/mms.hpp"
#include "stabfem/stokes_darcy.hpp"
#include "stabfem/vtk.hpp"

namespace {

using namespace stabfem;

void export_vtk(const std::string& path, const Mesh& mesh, const FlowSolution& flow,
                const std::vector<double>& c) {
    // Velocity and concentration sampled at vertices (vertex DOFs come first
    // in the P2 numbering); pressure is vertex-native.
    const int nv = mesh.n_vertices();
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for VTK output");
    write_legacy_vtk(os, mesh,
                     {{"pressure", {flow.p.data(), size_t(nv)}},
                      {"concentration", {c.data(), size_t(nv)}}},
                     {{"velocity", {flow.u1.data(), size_t(nv)}, {flow.u2.data(), size_t(nv)}}});
}

void solve_one_mesh(const RunConfig& cfg, int n, bool write_vtk_file) {
    const auto cases = default_cases();
    const ManufacturedCase& mc = find_case(cases, cfg.case_name);
    const Mesh mesh = build_structured_mesh(n);
    const DofMap dm_v = build_dof_map(mesh, 2);
    const DofMap dm_p = build_dof_map(mesh, 1);

    std::vector<Method> methods;
    if (cfg.method == MethodSelection::Galerkin) methods = {Method::Galerkin};
    else if (cfg.method == MethodSelection::Sgs) methods = {Method::Sgs};
    else methods = {Method::Galerkin, Method::Sgs};

    for (Method m : methods) {
        const FlowSolution flow =
            solve_flow(mesh, mc.flow_problem(), m, cfg.stab_constants(), cfg.solver_options());
        const VelocityField vel = VelocityField::from_flow(mesh, dm_v, flow);
        const std::vector<double> c =
            solve_adr(mesh, mc.transport_problem(), vel, m, cfg.solver_options());

        const char* name = m == Method::Galerkin ? "galerkin" : "sgs";
        std::printf("case=%s method=%s n=%d h=%.6g\n", mc.name.c_str(), name, n, mesh.h);
        std::printf("  err_u1_h1=%.6g err_u2_h1=%.6g err_p_l2=%.6g\n",
                    h1_error(flow.u1, mc.u1, mesh, dm_v), h1_error(flow.u2, mc.u2, mesh, dm_v),
                    l2_error(flow.p, mc.p, mesh, dm_p));
        std::printf("  err_c_l2=%.6g err_c_h1=%.6g div_u_l2=%.6g\n",
                    l2_error(c, mc.c, mesh, dm_v), h1_error(c, mc.c, mesh, dm_v),
                    flow.div_u_l2);

        if (write_vtk_file && !cfg.vtk_path.empty()) {
            std::string path = cfg.vtk_path;
            if (methods.size() > 1) {
                const auto dot = path.rfind('.');
                const std::string suffix = std::string(".") + name;
                path = dot == std::string::npos ? path + suffix
                                                : path.substr(0, dot) + suffix + path.substr(dot);
            }
            export_vtk(path, mesh, flow, c);
            std::printf("  vtk written to %s\n", path.c_str());
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SGS-stabilized finite elements for coupled Brinkman flow and scalar "
                 "transport on the unit square"};
    app.require_subcommand(1);

    std::string config_path;
    std::string case_name, method, solver, out, markdown, vtk, meshes;
    double tol = 0, c1 = 0, c2 = 0;
    int n_single = 0;

    auto add_common = [&](CLI::App* sc) {
        sc->add_option("--config", config_path, "flat key = value configuration file");
        sc->add_option("--case", case_name, "manufactured case name");
        sc->add_option("--method", method, "galerkin|sgs|both");
        sc->add_option("--meshes", meshes, "comma-separated subdivisions, e.g. 10,20,40");
        sc->add_option("--solver", solver, "lu|bicgstab");
        sc->add_option("--tol", tol, "iterative solver tolerance");
        sc->add_option("--c1", c1, "flow stabilization constant c1");
        sc->add_option("--c2", c2, "flow stabilization constant c2");
        sc->add_option("--out", out, "CSV output path");
        sc->add_option("--markdown", markdown, "Markdown output path");
        sc->add_option("--vtk", vtk, "legacy VTK output path");
    };

    CLI::App* sc_solve = app.add_subcommand("solve", "solve on a single mesh");
    add_common(sc_solve);
    sc_solve->add_option("--n", n_single, "subdivisions per side (default: first of --meshes)");

    CLI::App* sc_conv = app.add_subcommand("converge", "run a refinement ladder");
    add_common(sc_conv);

    CLI::App* sc_taus = app.add_subcommand("taus", "print stabilization parameters");
    sc_taus->set_help_flag("--help", "print help");
    double t_mu = 1.0, t_sigma = 1.0, t_h = 0.1, t_c1 = 128.0, t_c2 = 1.0;
    double t_d = 1.0, t_u = 1.0, t_alpha = 1.0;
    sc_taus->add_option("--mu", t_mu, "viscosity");
    sc_taus->add_option("--sigma", t_sigma, "inverse permeability");
    sc_taus->add_option("--h", t_h, "mesh size");
    sc_taus->add_option("--c1", t_c1, "flow constant c1");
    sc_taus->add_option("--c2", t_c2, "flow constant c2");
    sc_taus->add_option("--d", t_d, "transport diffusion bound D");
    sc_taus->add_option("--u", t_u, "transport speed U");
    sc_taus->add_option("--alpha", t_alpha, "reaction constant");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(sc_taus)) {
            const FlowStabilization fs = compute_flow_taus(t_mu, t_sigma, t_h, t_c1, t_c2);
            const double tau3 = compute_tau3(t_d, t_u, t_alpha, t_h);
            std::printf("tau1 = %.12g\ntau2 = %.12g\ntau3 = %.12g\n", fs.tau1, fs.tau2, tau3);
            return 0;
        }

        CLI::App* sc = app.got_subcommand(sc_solve) ? sc_solve : sc_conv;
        RunConfig cfg;
        if (sc->count("--config")) apply_config_file(cfg, config_path);
        apply_env_overrides(cfg);
        if (sc->count("--case")) cfg.case_name = case_name;
        if (sc->count("--method")) cfg.method = parse_method_selection(method);
        if (sc->count("--meshes")) cfg.meshes = parse_mesh_list(meshes);
        if (sc->count("--solver")) apply_config_entry(cfg, "solver", solver);
        if (sc->count("--tol")) cfg.tol = tol;
        if (sc->count("--c1")) cfg.c1 = c1;
        if (sc->count("--c2")) cfg.c2 = c2;
        if (sc->count("--out")) cfg.out_path = out;
        if (sc->count("--markdown")) cfg.markdown_path = markdown;
        if (sc->count("--vtk")) cfg.vtk_path = vtk;
        cfg.validate();

        if (app.got_subcommand(sc_solve)) {
            const int n = sc_solve->count("--n") ? n_single : cfg.meshes.front();
            if (n < 1) throw ConfigError("--n must be >= 1");
            solve_one_mesh(cfg, n, true);
            return 0;
        }

        auto print_tables = [](const ConvergenceReport& r) {
            for (const auto& table : r.tables) {
                std::printf("# case=%s method=%s solver=%s c1=%.6g c2=%.6g\n",
                            r.case_name.c_str(),
                            table.method == Method::Galerkin ? "galerkin" : "sgs",
                            r.solver.c_str(), r.c1, r.c2);
                emit_csv(table, std::cout);
            }
        };

        ConvergenceReport report;
        try {
            report = run_convergence(cfg);
        } catch (const RunAborted& e) {
            std::fprintf(stderr, "error: solver failed (%s); writing partial report\n",
                         e.what());
            if (!cfg.out_path.empty()) emit_csv(e.partial, cfg.out_path);
            print_tables(e.partial);
            return 1;
        }
        if (!cfg.out_path.empty()) emit_csv(report, cfg.out_path);
        if (!cfg.markdown_path.empty()) emit_markdown(report, cfg.markdown_path);
        print_tables(report);
        if (!cfg.vtk_path.empty()) solve_one_mesh(cfg, cfg.meshes.back(), true);
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
