#pragma once

// Convergence-study driver: run the flow/transport pipeline over a mesh
// ladder, collect error norms and observed orders, and serialize them as CSV
// or Markdown tables. Also owns run configuration (defaults < config file <
// STABFEM_* environment overrides < CLI flags).

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stabfem/adr.hpp"
#include "stabfem/mms.hpp"
#include "stabfem/stokes_darcy.hpp"

namespace stabfem {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class MethodSelection { Galerkin, Sgs, Both };

inline MethodSelection parse_method_selection(const std::string& s) {
    if (s == "galerkin") return MethodSelection::Galerkin;
    if (s == "sgs") return MethodSelection::Sgs;
    if (s == "both") return MethodSelection::Both;
    throw ConfigError("unknown method '" + s + "' (expected galerkin|sgs|both)");
}

struct RunConfig {
    std::string case_name = "smooth";
    MethodSelection method = MethodSelection::Both;
    std::vector<int> meshes = {10, 20, 40, 80, 160};
    LinearSolver solver = LinearSolver::Lu;
    double tol = 1e-10;
    double c1 = 128.0;
    double c2 = 1.0;
    std::string out_path;       // CSV; empty = stdout only
    std::string markdown_path;  // empty = no markdown
    std::string vtk_path;       // empty = no VTK

    void validate() const {
        if (meshes.empty()) throw ConfigError("mesh list is empty");
        if (!(tol > 0.0)) throw ConfigError("tolerance must be positive");
        if (!(c1 > 0.0) || !(c2 > 0.0)) throw ConfigError("c1 and c2 must be positive");
        for (size_t i = 0; i < meshes.size(); ++i) {
            if (meshes[i] < 1) throw ConfigError("mesh subdivisions must be >= 1");
            if (i == 0) continue;
            if (meshes[i] <= meshes[i - 1])
                throw ConfigError("mesh list must be strictly increasing");
            const int ratio = meshes[i] / meshes[0];
            if (meshes[i] % meshes[0] != 0 || (ratio & (ratio - 1)) != 0)
                throw ConfigError("each mesh must be a power-of-two multiple of the first");
        }
    }

    LinearSolverOptions solver_options() const { return {solver, tol, 20000, Preconditioner::Ilu0}; }
    StabConstants stab_constants() const { return {c1, c2}; }
};

struct ReportRow {
    int n = 0;
    double h = 0.0;
    double err_u1_h1 = 0.0, err_u2_h1 = 0.0, err_p_l2 = 0.0;
    double err_c_l2 = 0.0, err_c_h1 = 0.0;
    std::optional<double> ord_u1_h1, ord_u2_h1, ord_p_l2, ord_c_l2, ord_c_h1;
    double div_u_l2 = 0.0;
    double solve_seconds = 0.0;
    int iterations = 0;
};

struct MethodTable {
    Method method = Method::Sgs;
    std::vector<ReportRow> rows;
};

struct ConvergenceReport {
    std::string case_name;
    double c1 = 128.0, c2 = 1.0;
    std::string solver;
    std::vector<MethodTable> tables;

    const MethodTable& table(Method m) const {
        for (const auto& t : tables)
            if (t.method == m) return t;
        throw std::logic_error("report has no table for requested method");
    }
};

// Carries whatever completed before a solver failure aborted the ladder.
struct RunAborted : std::runtime_error {
    ConvergenceReport partial;
    RunAborted(const std::string& what, ConvergenceReport r)
        : std::runtime_error(what), partial(std::move(r)) {}
};

namespace detail {

inline void fill_orders(std::vector<ReportRow>& rows) {
    for (size_t i = 1; i < rows.size(); ++i) {
        const ReportRow& c = rows[i - 1];
        ReportRow& f = rows[i];
        const double scale = std::log2(double(f.n) / double(c.n));
        auto ord = [scale](double ec, double ef) -> std::optional<double> {
            if (!(ec > 1e-14) || !(ef > 1e-14)) return std::nullopt;
            return std::log2(ec / ef) / scale;
        };
        f.ord_u1_h1 = ord(c.err_u1_h1, f.err_u1_h1);
        f.ord_u2_h1 = ord(c.err_u2_h1, f.err_u2_h1);
        f.ord_p_l2 = ord(c.err_p_l2, f.err_p_l2);
        f.ord_c_l2 = ord(c.err_c_l2, f.err_c_l2);
        f.ord_c_h1 = ord(c.err_c_h1, f.err_c_h1);
    }
}

}  // namespace detail

inline ConvergenceReport run_convergence(const RunConfig& config) {
    config.validate();
    const auto cases = default_cases();
    const ManufacturedCase& mc = find_case(cases, config.case_name);

    ConvergenceReport report;
    report.case_name = mc.name;
    report.c1 = config.c1;
    report.c2 = config.c2;
    report.solver = config.solver == LinearSolver::Lu ? "lu" : "bicgstab";

    std::vector<Method> methods;
    if (config.method == MethodSelection::Galerkin) methods = {Method::Galerkin};
    else if (config.method == MethodSelection::Sgs) methods = {Method::Sgs};
    else methods = {Method::Galerkin, Method::Sgs};
    for (Method m : methods) report.tables.push_back({m, {}});

    const LinearSolverOptions opts = config.solver_options();
    const StabConstants constants = config.stab_constants();

    for (int n : config.meshes) {
        const Mesh mesh = build_structured_mesh(n);
        const DofMap dm_v = build_dof_map(mesh, 2);
        const DofMap dm_p = build_dof_map(mesh, 1);

        for (auto& table : report.tables) {
            const auto t0 = std::chrono::steady_clock::now();
            FlowSolution flow;
            std::vector<double> c;
            int adr_iters = 0;
            try {
                flow = solve_flow(mesh, mc.flow_problem(), table.method, constants, opts);
                const VelocityField vel = VelocityField::from_flow(mesh, dm_v, flow);
                c = solve_adr(mesh, mc.transport_problem(), vel, table.method, opts,
                              &adr_iters);
            } catch (const std::exception& e) {
                for (auto& t : report.tables) detail::fill_orders(t.rows);
                throw RunAborted("mesh n=" + std::to_string(n) + ": " + e.what(),
                                 std::move(report));
            }
            const auto t1 = std::chrono::steady_clock::now();

            ReportRow row;
            row.n = n;
            row.h = mesh.h;
            row.err_u1_h1 = h1_error(flow.u1, mc.u1, mesh, dm_v);
            row.err_u2_h1 = h1_error(flow.u2, mc.u2, mesh, dm_v);
            row.err_p_l2 = l2_error(flow.p, mc.p, mesh, dm_p);
            row.err_c_l2 = l2_error(c, mc.c, mesh, dm_v);
            row.err_c_h1 = h1_error(c, mc.c, mesh, dm_v);
            row.div_u_l2 = flow.div_u_l2;
            row.solve_seconds = std::chrono::duration<double>(t1 - t0).count();
            row.iterations = flow.iterations + adr_iters;
            table.rows.push_back(row);
        }
    }
    for (auto& t : report.tables) detail::fill_orders(t.rows);
    return report;
}

namespace detail {

inline std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) {
    return v ? fmt6(*v) : std::string();
}

inline const char* method_name(Method m) {
    return m == Method::Galerkin ? "galerkin" : "sgs";
}

}  // namespace detail

inline void emit_csv(const MethodTable& table, std::ostream& os) {
    os << "n,h,err_u1_h1,err_u2_h1,err_p_l2,err_c_l2,err_c_h1,"
          "ord_u1_h1,ord_u2_h1,ord_p_l2,ord_c_l2,ord_c_h1,div_u_l2,solve_seconds\n";
    for (const auto& r : table.rows) {
        os << r.n << "," << detail::fmt6(r.h) << "," << detail::fmt6(r.err_u1_h1) << ","
           << detail::fmt6(r.err_u2_h1) << "," << detail::fmt6(r.err_p_l2) << ","
           << detail::fmt6(r.err_c_l2) << "," << detail::fmt6(r.err_c_h1) << ","
           << detail::fmt_opt(r.ord_u1_h1) << "," << detail::fmt_opt(r.ord_u2_h1) << ","
           << detail::fmt_opt(r.ord_p_l2) << "," << detail::fmt_opt(r.ord_c_l2) << ","
           << detail::fmt_opt(r.ord_c_h1) << "," << detail::fmt6(r.div_u_l2) << ","
           << detail::fmt6(r.solve_seconds) << "\n";
    }
}

// One CSV file per method; with several methods the method name is appended
// to the file stem.
inline void emit_csv(const ConvergenceReport& report, const std::string& path) {
    for (const auto& table : report.tables) {
        std::string target = path;
        if (report.tables.size() > 1) {
            const auto dot = path.rfind('.');
            const std::string suffix = std::string(".") + detail::method_name(table.method);
            target = dot == std::string::npos
                         ? path + suffix
                         : path.substr(0, dot) + suffix + path.substr(dot);
        }
        std::ofstream os(target);
        if (!os) throw std::runtime_error("emit_csv: cannot open '" + target + "'");
        emit_csv(table, os);
        if (!os.good()) throw std::runtime_error("emit_csv: write failed for '" + target + "'");
    }
}

inline void emit_markdown(const ConvergenceReport& report, std::ostream& os) {
    os << "# Convergence: case " << report.case_name << "\n\n";
    os << "Solver: " << report.solver << ", c1 = " << detail::fmt6(report.c1)
       << ", c2 = " << detail::fmt6(report.c2) << "\n";

    for (const auto& table : report.tables) {
        os << "\n## Method: " << detail::method_name(table.method) << "\n\n";
        os << "| Mesh size | h | u1 H1 error | Order | u2 H1 error | Order | p L2 error | "
              "Order | c L2 error | Order | c H1 error | Order | div u L2 |\n";
        os << "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
        for (const auto& r : table.rows) {
            os << "| " << r.n << " | " << detail::fmt6(r.h) << " | "
               << detail::fmt6(r.err_u1_h1) << " | " << detail::fmt_opt(r.ord_u1_h1) << " | "
               << detail::fmt6(r.err_u2_h1) << " | " << detail::fmt_opt(r.ord_u2_h1) << " | "
               << detail::fmt6(r.err_p_l2) << " | " << detail::fmt_opt(r.ord_p_l2) << " | "
               << detail::fmt6(r.err_c_l2) << " | " << detail::fmt_opt(r.ord_c_l2) << " | "
               << detail::fmt6(r.err_c_h1) << " | " << detail::fmt_opt(r.ord_c_h1) << " | "
               << detail::fmt6(r.div_u_l2) << " |\n";
        }
    }

    // Side-by-side comparison in the shape of the published tables.
    if (report.tables.size() == 2) {
        const auto& ga = report.table(Method::Galerkin);
        const auto& sg = report.table(Method::Sgs);
        os << "\n## Galerkin vs SGS (c, H1 norm)\n\n";
        os << "| Mesh size | Galerkin error | Order | SGS error | Order |\n";
        os << "|---|---|---|---|---|\n";
        for (size_t i = 0; i < ga.rows.size() && i < sg.rows.size(); ++i) {
            os << "| " << ga.rows[i].n << " | " << detail::fmt6(ga.rows[i].err_c_h1) << " | "
               << detail::fmt_opt(ga.rows[i].ord_c_h1) << " | "
               << detail::fmt6(sg.rows[i].err_c_h1) << " | "
               << detail::fmt_opt(sg.rows[i].ord_c_h1) << " |\n";
        }
    }
}

inline void emit_markdown(const ConvergenceReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("emit_markdown: cannot open '" + path + "'");
    emit_markdown(report, os);
    if (!os.good()) throw std::runtime_error("emit_markdown: write failed for '" + path + "'");
}

// ---- configuration ----------------------------------------------------

// Flat "key = value" file; '#' starts a comment.
inline std::map<std::string, std::string> parse_config_file(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

inline std::vector<int> parse_mesh_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw ConfigError("bad mesh list entry '" + item + "'");
        }
    }
    return out;
}

inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    try {
        if (key == "case") cfg.case_name = value;
        else if (key == "method") cfg.method = parse_method_selection(value);
        else if (key == "meshes") cfg.meshes = parse_mesh_list(value);
        else if (key == "solver") {
            if (value == "lu") cfg.solver = LinearSolver::Lu;
            else if (value == "bicgstab") cfg.solver = LinearSolver::Bicgstab;
            else throw ConfigError("unknown solver '" + value + "'");
        } else if (key == "tol") cfg.tol = std::stod(value);
        else if (key == "c1") cfg.c1 = std::stod(value);
        else if (key == "c2") cfg.c2 = std::stod(value);
        else if (key == "out") cfg.out_path = value;
        else if (key == "markdown") cfg.markdown_path = value;
        else if (key == "vtk") cfg.vtk_path = value;
        else throw ConfigError("unknown config key '" + key + "'");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("bad value '" + value + "' for key '" + key + "'");
    }
}

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {"case", "method", "meshes", "solver",
                                                  "tol",  "c1",     "c2",     "out",
                                                  "markdown", "vtk"};
    return keys;
}

// STABFEM_<KEY> environment variables override config-file keys.
inline void apply_env_overrides(RunConfig& cfg) {
    for (const auto& key : config_keys()) {
        std::string env_name = "STABFEM_";
        for (char ch : key)
            env_name += ch == '.' ? '_'
                                  : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        if (const char* v = std::getenv(env_name.c_str())) apply_config_entry(cfg, key, v);
    }
}

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path + "'");
    for (const auto& [k, v] : parse_config_file(is)) apply_config_entry(cfg, k, v);
}

}  // namespace stabfem
