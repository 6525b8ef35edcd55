#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stabfem/harness.hpp"

using namespace stabfem;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config() {
    RunConfig cfg;
    cfg.case_name = "smooth";
    cfg.meshes = {4, 8};
    return cfg;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) out.push_back(line);
    return out;
}

// CSV bytes with the trailing (timing) column removed from every line.
std::string strip_timing(const std::string& csv) {
    std::string out;
    for (const auto& line : lines_of(csv)) {
        const auto comma = line.rfind(',');
        out += line.substr(0, comma);
        out += '\n';
    }
    return out;
}

}  // namespace

TEST_CASE("config validation") {
    RunConfig cfg = tiny_config();
    CHECK_NOTHROW(cfg.validate());

    cfg.meshes = {10, 20, 40, 80, 160};
    CHECK_NOTHROW(cfg.validate());
    cfg.meshes = {10, 40};  // power-of-two multiple, skipping a level
    CHECK_NOTHROW(cfg.validate());

    cfg.meshes = {10, 30};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.meshes = {10, 10};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.meshes = {20, 10};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.meshes = {};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.meshes = {0, 2};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = tiny_config();
    cfg.tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.c1 = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("run_convergence produces one table per method with decreasing errors") {
    RunConfig cfg = tiny_config();
    cfg.method = MethodSelection::Both;
    const ConvergenceReport report = run_convergence(cfg);
    REQUIRE(report.tables.size() == 2);
    for (const auto& table : report.tables) {
        REQUIRE(table.rows.size() == 2);
        const auto& r0 = table.rows[0];
        const auto& r1 = table.rows[1];
        CHECK(r0.n == 4);
        CHECK(r1.n == 8);
        CHECK_FALSE(r0.ord_c_h1.has_value());
        CHECK(r1.ord_c_h1.has_value());
        for (double e : {r0.err_u1_h1, r0.err_u2_h1, r0.err_p_l2, r0.err_c_l2, r0.err_c_h1}) {
            CHECK(std::isfinite(e));
            CHECK(e > 0.0);
        }
        CHECK(r1.err_u1_h1 < r0.err_u1_h1);
        CHECK(r1.err_c_h1 < r0.err_c_h1);
    }
}

TEST_CASE("single-mesh run has no order columns") {
    RunConfig cfg = tiny_config();
    cfg.meshes = {4};
    cfg.method = MethodSelection::Sgs;
    const ConvergenceReport report = run_convergence(cfg);
    REQUIRE(report.tables.size() == 1);
    REQUIRE(report.tables[0].rows.size() == 1);
    CHECK_FALSE(report.tables[0].rows[0].ord_u1_h1.has_value());
}

TEST_CASE("unknown case is a configuration error") {
    RunConfig cfg = tiny_config();
    cfg.case_name = "no-such-case";
    CHECK_THROWS_AS(run_convergence(cfg), std::invalid_argument);
}

TEST_CASE("csv layout and round trip") {
    RunConfig cfg = tiny_config();
    cfg.method = MethodSelection::Sgs;
    const ConvergenceReport report = run_convergence(cfg);

    std::ostringstream os;
    emit_csv(report.tables[0], os);
    const auto lines = lines_of(os.str());
    REQUIRE(lines.size() == 3);  // header + one line per mesh
    CHECK(lines[0] ==
          "n,h,err_u1_h1,err_u2_h1,err_p_l2,err_c_l2,err_c_h1,"
          "ord_u1_h1,ord_u2_h1,ord_p_l2,ord_c_l2,ord_c_h1,div_u_l2,solve_seconds");

    // first data row has empty order cells
    std::vector<std::string> cells;
    {
        std::istringstream is(lines[1]);
        std::string cell;
        while (std::getline(is, cell, ',')) cells.push_back(cell);
    }
    REQUIRE(cells.size() == 14);
    for (int k = 7; k <= 11; ++k) CHECK(cells[k].empty());

    // parsed values reproduce the report to six significant digits
    const auto& row = report.tables[0].rows[0];
    CHECK(std::abs(std::stod(cells[1]) - row.h) <= 1e-5 * row.h);
    CHECK(std::abs(std::stod(cells[2]) - row.err_u1_h1) <= 1e-5 * row.err_u1_h1);
    CHECK(std::abs(std::stod(cells[6]) - row.err_c_h1) <= 1e-5 * row.err_c_h1);
}

TEST_CASE("runs are deterministic apart from timings") {
    RunConfig cfg = tiny_config();
    cfg.method = MethodSelection::Both;
    const ConvergenceReport a = run_convergence(cfg);
    const ConvergenceReport b = run_convergence(cfg);
    REQUIRE(a.tables.size() == b.tables.size());
    for (size_t t = 0; t < a.tables.size(); ++t) {
        std::ostringstream osa, osb;
        emit_csv(a.tables[t], osa);
        emit_csv(b.tables[t], osb);
        CHECK(strip_timing(osa.str()) == strip_timing(osb.str()));
    }
}

TEST_CASE("csv files per method share the stem") {
    RunConfig cfg = tiny_config();
    cfg.method = MethodSelection::Both;
    cfg.meshes = {4};
    const ConvergenceReport report = run_convergence(cfg);
    const fs::path dir = fs::temp_directory_path() / "stabfem_csv_test";
    fs::create_directories(dir);
    const std::string stem = (dir / "table.csv").string();
    emit_csv(report, stem);
    CHECK(fs::exists(dir / "table.galerkin.csv"));
    CHECK(fs::exists(dir / "table.sgs.csv"));
    fs::remove_all(dir);
}

TEST_CASE("markdown mirrors the table shape") {
    RunConfig cfg = tiny_config();
    cfg.method = MethodSelection::Both;
    const ConvergenceReport report = run_convergence(cfg);
    std::ostringstream os;
    emit_markdown(report, os);
    const std::string md = os.str();
    CHECK(md.find("## Method: galerkin") != std::string::npos);
    CHECK(md.find("## Method: sgs") != std::string::npos);
    CHECK(md.find("## Galerkin vs SGS (c, H1 norm)") != std::string::npos);
    CHECK(md.find("| Mesh size |") != std::string::npos);

    // the first data row of the comparison table has blank order cells
    const auto lines = lines_of(md);
    for (size_t i = 0; i + 2 < lines.size(); ++i)
        if (lines[i].find("| Mesh size | Galerkin error |") != std::string::npos) {
            const std::string& first_row = lines[i + 2];
            std::vector<std::string> cells;
            std::istringstream is(first_row);
            std::string cell;
            while (std::getline(is, cell, '|')) cells.push_back(cell);
            REQUIRE(cells.size() >= 6);
            CHECK(cells[3] == "  ");  // galerkin order cell, blank
            CHECK(cells[5] == "  ");  // sgs order cell, blank
        }
}

TEST_CASE("solver failure aborts with a partial report") {
    RunConfig cfg = tiny_config();
    cfg.method = MethodSelection::Sgs;
    cfg.solver = LinearSolver::Bicgstab;
    cfg.tol = 1e-300;  // unattainable
    CHECK_THROWS_AS(run_convergence(cfg), RunAborted);
    try {
        run_convergence(cfg);
    } catch (const RunAborted& e) {
        CHECK(e.partial.tables.size() == 1);
        CHECK(e.partial.tables[0].rows.size() < 2);
    }
}

TEST_CASE("config file parsing") {
    std::istringstream is("case = smooth\n"
                          "method = sgs   # trailing comment\n"
                          "\n"
                          "meshes = 4,8\n"
                          "tol = 1e-9\n");
    const auto kv = parse_config_file(is);
    CHECK(kv.at("case") == "smooth");
    CHECK(kv.at("method") == "sgs");
    CHECK(kv.at("meshes") == "4,8");

    RunConfig cfg;
    for (const auto& [k, v] : kv) apply_config_entry(cfg, k, v);
    CHECK(cfg.method == MethodSelection::Sgs);
    CHECK(cfg.meshes == std::vector<int>{4, 8});
    CHECK(cfg.tol == 1e-9);

    std::istringstream bad("this line has no equals sign\n");
    CHECK_THROWS_AS(parse_config_file(bad), ConfigError);
    CHECK_THROWS_AS(apply_config_entry(cfg, "unknown", "1"), ConfigError);
    CHECK_THROWS_AS(apply_config_entry(cfg, "tol", "not-a-number"), ConfigError);
    CHECK_THROWS_AS(apply_config_entry(cfg, "method", "magic"), ConfigError);
    CHECK_THROWS_AS(parse_mesh_list("4,x"), ConfigError);
}

TEST_CASE("environment variables override defaults") {
    setenv("STABFEM_C1", "7.5", 1);
    setenv("STABFEM_METHOD", "galerkin", 1);
    RunConfig cfg;
    apply_env_overrides(cfg);
    CHECK(cfg.c1 == 7.5);
    CHECK(cfg.method == MethodSelection::Galerkin);
    unsetenv("STABFEM_C1");
    unsetenv("STABFEM_METHOD");
}
