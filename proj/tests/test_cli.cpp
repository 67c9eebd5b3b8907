#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <hsps/commands.hpp>

namespace fs = std::filesystem;

namespace {

struct Result
{
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "hsps");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = hsps::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("hsps_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Data rows (no '#' metadata, no header) split into cells.
std::vector<std::vector<std::string>> csv_rows(const fs::path& p)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

const std::string data_dir = HSPS_DATA_DIR;
const std::string test_data_dir = HSPS_TEST_DATA_DIR;

} // namespace

TEST_SUITE("cli") {

TEST_CASE("characterize writes a report and a summary")
{
    const fs::path dir = fresh_dir("characterize");
    const Result r = run_cli({"characterize", "--config", data_dir + "/reference_operating_point.meas", "--out", dir.string()});
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "report.txt"));
    CHECK(r.out.find("g2_zero = 0.0235") != std::string::npos);

    const Result quiet = run_cli({"characterize", "--config", data_dir + "/reference_operating_point.meas", "--out",
                                  dir.string(), "--quiet"});
    CHECK(quiet.code == 0);
    CHECK(quiet.out.empty());
}

TEST_CASE("exit codes: schema, invariant and computation failures")
{
    const fs::path dir = fresh_dir("codes");
    const Result missing = run_cli({"characterize", "--config", test_data_dir + "/missing_r_i.meas", "--out", dir.string()});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("line 1") != std::string::npos);
    CHECK(missing.err.find("'r_i'") != std::string::npos);

    const Result inconsistent =
        run_cli({"characterize", "--config", test_data_dir + "/inconsistent_rc.meas", "--out", dir.string()});
    CHECK(inconsistent.code == 2);
    CHECK(inconsistent.err.find("exceeds R0") != std::string::npos);

    const Result floor = run_cli({"characterize", "--config", test_data_dir + "/below_dark_floor.meas", "--out", dir.string()});
    CHECK(floor.code == 3);
    CHECK(floor.err.find("[idler-rate]") != std::string::npos);

    CHECK(run_cli({"validate", "--config", test_data_dir + "/corrupt_gamma_c.cfg", "--out", dir.string()}).code == 2);
    CHECK(run_cli({"characterize", "--config", "/nonexistent.meas"}).code == 2);
    CHECK(run_cli({"sweep", "--format", "json"}).code == 2);
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("sweep: default grid crosses 1 near b0 = 0.55 and marks divergence")
{
    const fs::path dir = fresh_dir("sweep");
    REQUIRE(run_cli({"sweep", "--out", dir.string(), "--quiet"}).code == 0);
    const auto rows = csv_rows(dir / "g2_vs_b0.csv");
    REQUIRE(rows.size() == 100);
    double below = -1, above = -1;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double g_prev = std::stod(rows[i - 1][2]);
        const double g = std::stod(rows[i][2]);
        if (g_prev < 1 && g >= 1) {
            below = std::stod(rows[i - 1][0]);
            above = std::stod(rows[i][0]);
        }
    }
    CHECK(below >= 0.54);
    CHECK(above <= 0.56);
    CHECK(rows.back()[0] == "0.99");
    CHECK(rows.back()[2] != "diverged");

    REQUIRE(run_cli({"sweep", "--out", dir.string(), "--grid", "0.98:1:3", "--p-cor", "0.5", "--quiet"}).code == 0);
    const auto edge = csv_rows(dir / "g2_vs_b0.csv");
    REQUIRE(edge.size() == 3);
    CHECK(edge[2][0] == "1");
    CHECK(edge[2][2] == "diverged");
    CHECK(edge[2][5] == "diverged");
    CHECK(edge[1][5] != "diverged");

    REQUIRE(run_cli({"sweep", "--out", dir.string(), "--grid", "0:1:0", "--quiet"}).code == 0);
    CHECK(csv_rows(dir / "g2_vs_b0.csv").empty());
    CHECK(slurp(dir / "g2_vs_b0.csv").find("b0,R0,g2_cw,g2_random,g2_pulsed,g2_experimental_model\n")
          != std::string::npos);
}

TEST_CASE("sweep with a measurement file fills the model column")
{
    const fs::path dir = fresh_dir("sweep_model");
    REQUIRE(run_cli({"sweep", "--config", data_dir + "/reference_operating_point.meas", "--out", dir.string(),
                     "--grid", "0.1:0.2:2", "--quiet"})
                .code == 0);
    const auto rows = csv_rows(dir / "g2_vs_b0.csv");
    REQUIRE(rows.size() == 2);
    CHECK_FALSE(rows[0][5].empty());
    CHECK(slurp(dir / "g2_vs_b0.csv").find("measured operating point") != std::string::npos);
}

TEST_CASE("crossings, including a vanishing p_cor")
{
    const fs::path dir = fresh_dir("crossings");
    REQUIRE(run_cli({"crossings", "--p-cor", "1,0.5,1e-12", "--out", dir.string(), "--quiet"}).code == 0);
    const auto rows = csv_rows(dir / "crossings.csv");
    REQUIRE(rows.size() == 3);
    CHECK(std::abs(std::stod(rows[0][1]) - 0.55) <= 0.01);
    CHECK(std::abs(std::stod(rows[1][1]) - 0.42) <= 0.01);
    CHECK(rows[2][3] == "no-crossing");
    CHECK(rows[2][1].empty());
}

TEST_CASE("simulate and sweep are byte-identical across runs")
{
    const fs::path a = fresh_dir("det_a");
    const fs::path b = fresh_dir("det_b");
    for (const fs::path& dir : {a, b}) {
        REQUIRE(run_cli({"simulate", "--duration", "0.05", "--seed", "99", "--out", dir.string(), "--quiet"}).code == 0);
        REQUIRE(run_cli({"sweep", "--out", dir.string(), "--quiet"}).code == 0);
    }
    for (const char* name : {"simulation_summary.csv", "simulation_distribution.csv", "g2_vs_b0.csv"}) {
        CAPTURE(name);
        CHECK(slurp(a / name) == slurp(b / name));
        CHECK_FALSE(slurp(a / name).empty());
    }
}

TEST_CASE("output directory: flag, then environment, then working directory")
{
    const fs::path env_dir = fresh_dir("env");
    const fs::path flag_dir = fresh_dir("flag");
    setenv("HSPS_OUT_DIR", env_dir.string().c_str(), 1);
    REQUIRE(run_cli({"crossings", "--quiet"}).code == 0);
    CHECK(fs::exists(env_dir / "crossings.csv"));
    REQUIRE(run_cli({"crossings", "--quiet", "--out", flag_dir.string()}).code == 0);
    CHECK(fs::exists(flag_dir / "crossings.csv"));
    unsetenv("HSPS_OUT_DIR");
}

TEST_CASE("simulate writes both tables and optional time tags")
{
    const fs::path dir = fresh_dir("simulate");
    const Result r = run_cli({"simulate", "--config", data_dir + "/reference_sim.cfg", "--duration", "0.02", "--out",
                              dir.string(), "--timetags", (dir / "tags.bin").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("g2(0)") != std::string::npos);
    CHECK(fs::exists(dir / "simulation_summary.csv"));
    CHECK(fs::exists(dir / "simulation_distribution.csv"));
    CHECK(fs::file_size(dir / "tags.bin") % 9 == 0);
    CHECK(fs::file_size(dir / "tags.bin") > 0);
}

TEST_CASE("delay scan steps the gate over the twin arrival")
{
    const fs::path dir = fresh_dir("delay");
    REQUIRE(run_cli({"delay-scan", "--duration", "0.05", "--grid", "30:50:3", "--out", dir.string(), "--quiet"}).code
            == 0);
    const auto rows = csv_rows(dir / "delay_scan.csv");
    REQUIRE(rows.size() == 3);
    // Twins arrive 50 ns after the herald: inside [50, 60), just outside [40, 50).
    const double at30 = std::stod(rows[0][1]);
    const double at40 = std::stod(rows[1][1]);
    const double at50 = std::stod(rows[2][1]);
    CHECK(at50 > 10 * at30);
    CHECK(at50 > 10 * at40);
}

TEST_CASE("validate runs reduced checks and reports z-scores")
{
    const fs::path dir = fresh_dir("validate");
    const Result r = run_cli({"validate", "--skip-matrix", "--duration", "1", "--out", dir.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("round-trip R_c") != std::string::npos);
    CHECK(csv_rows(dir / "validation.csv").size() == 7);
}

} // TEST_SUITE
