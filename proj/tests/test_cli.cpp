// End-to-end checks of the rotor-echo binary: file schemas, determinism,
// exit codes.  The binary path and the shipped preset directory come in
// through compile definitions.
#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "loschmidt/config.hpp"
#include "loschmidt/csv.hpp"

using namespace loschmidt;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("rotor_echo_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

int run(const std::string& args) {
    const std::string cmd = std::string(ROTOR_ECHO_BIN) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* small_cfg =
    "model.k = 0.3\n"
    "model.n_dim = 256\n"
    "model.sigma = 0.8\n"
    "packet.r0_over_pi = 1.2\n"
    "packet.p0_over_pi = 0.6\n"
    "packet.xi_sq_fraction = 20\n"
    "run.t_max = 50\n"
    "run.estimator_steps = 20000\n"
    "run.output = small\n";

}  // namespace

TEST_CASE("quantum runs are deterministic and carry their configuration") {
    TempDir dir;
    write_file(dir.path / "run.cfg", small_cfg);
    const std::string base = "quantum --config " + (dir.path / "run.cfg").string();
    REQUIRE(run(base + " --out " + (dir.path / "a").string()) == 0);
    REQUIRE(run(base + " --out " + (dir.path / "b").string()) == 0);

    const std::string a = slurp(dir.path / "a" / "small.csv");
    const std::string b = slurp(dir.path / "b" / "small.csv");
    CHECK(a == b);  // byte-identical reruns
    CHECK(a.find("# model.k = 0.3") != std::string::npos);
    CHECK(a.find("t,M,Re_m,Im_m") != std::string::npos);

    const CsvTable table = read_csv((dir.path / "a" / "small.csv").string());
    REQUIRE(table.rows.size() == 51);
    CHECK(csv_column(table, "M")[0] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("sigma = 0 gives a constant-1 fidelity column") {
    TempDir dir;
    write_file(dir.path / "run.cfg", small_cfg);
    REQUIRE(run("quantum --config " + (dir.path / "run.cfg").string() + " --out " +
                dir.path.string() + " --set model.sigma=0") == 0);
    for (double m : csv_column(read_csv((dir.path / "small.csv").string()), "M"))
        CHECK(std::abs(m - 1.0) <= 1e-12);
}

TEST_CASE("a single-entry sweep reproduces the quantum run") {
    TempDir dir;
    write_file(dir.path / "run.cfg", std::string(small_cfg) + "sweep.sigma = 0.8\n");
    REQUIRE(run("quantum --config " + (dir.path / "run.cfg").string() + " --out " +
                dir.path.string()) == 0);
    REQUIRE(run("sweep --config " + (dir.path / "run.cfg").string() + " --out " +
                dir.path.string()) == 0);
    const CsvTable direct = read_csv((dir.path / "small.csv").string());
    const CsvTable swept = read_csv((dir.path / "small_sigma0.8.csv").string());
    REQUIRE(direct.rows.size() == swept.rows.size());
    for (std::size_t i = 0; i < direct.rows.size(); ++i)
        for (std::size_t c = 0; c < direct.rows[i].size(); ++c)
            CHECK(direct.rows[i][c] == swept.rows[i][c]);

    const CsvTable beta = read_csv((dir.path / "small_beta.csv").string());
    CHECK(beta.rows.size() == 1);
}

TEST_CASE("semiclassical output and estimates sidecar") {
    TempDir dir;
    write_file(dir.path / "run.cfg", small_cfg);
    REQUIRE(run("semiclassical --config " + (dir.path / "run.cfg").string() + " --out " +
                dir.path.string() + " --set run.t_max=30") == 0);
    const CsvTable main_table = read_csv((dir.path / "small.csv").string());
    CHECK(main_table.columns ==
          std::vector<std::string>{"t", "M_sc_integral", "M_sc1", "M_sc2"});
    const CsvTable sidecar = read_csv((dir.path / "small_estimates.csv").string());
    REQUIRE(sidecar.rows.size() == 1);
    CHECK(csv_column(sidecar, "regular")[0] == 1.0);
}

TEST_CASE("exit codes distinguish failure classes") {
    TempDir dir;
    write_file(dir.path / "run.cfg", small_cfg);
    write_file(dir.path / "bad.cfg", std::string(small_cfg) + "model.bogus = 1\n");
    const std::string out = " --out " + dir.path.string();

    SECTION("validation failures exit 1") {
        CHECK(run("quantum --config " + (dir.path / "bad.cfg").string() + out) == 1);
        CHECK(run("quantum --config " + (dir.path / "missing.cfg").string() + out) == 1);
        CHECK(run("quantum --config " + (dir.path / "run.cfg").string() + out +
                  " --set model.n_dim=1") == 1);
        CHECK(run("sweep --config " + (dir.path / "run.cfg").string() + out) == 1);
    }
    SECTION("budget guard exits 2") {
        CHECK(run("semiclassical --config " + (dir.path / "run.cfg").string() + out +
                  " --set run.quad_budget=10 --set run.t_max=2000") == 2);
    }
    SECTION("analysis failures exit 3") {
        REQUIRE(run("quantum --config " + (dir.path / "run.cfg").string() + out) == 0);
        CHECK(run("fit --config " + (dir.path / "run.cfg").string() + out + " --in " +
                  (dir.path / "small.csv").string() + " --t-lo 40 --t-hi 20") == 3);
    }
}

TEST_CASE("fit recovers a synthetic exponent end to end") {
    TempDir dir;
    write_file(dir.path / "run.cfg", small_cfg);
    CsvTable synth;
    synth.columns = {"t", "M"};
    synth.rows.push_back({0.0, 1.0});
    for (std::size_t t = 1; t <= 3000; ++t)
        synth.rows.push_back({static_cast<double>(t), std::pow(static_cast<double>(t), -1.5)});
    write_csv((dir.path / "synth.csv").string(), synth);
    REQUIRE(run("fit --config " + (dir.path / "run.cfg").string() + " --out " +
                dir.path.string() + " --in " + (dir.path / "synth.csv").string() +
                " --t-lo 10 --t-hi 3000 --smooth 1") == 0);
    const CsvTable fit = read_csv((dir.path / "small_fit.csv").string());
    CHECK(csv_column(fit, "alpha")[0] == Catch::Approx(1.5).margin(1e-9));
}

TEST_CASE("tau1 scan emits one row per packet center") {
    TempDir dir;
    write_file(dir.path / "run.cfg",
               std::string(small_cfg) + "scan.p0_over_pi = 0.5, 0.6\nrun.t_max = 60\n");
    REQUIRE(run("tau1 --config " + (dir.path / "run.cfg").string() + " --out " +
                dir.path.string()) == 0);
    const CsvTable table = read_csv((dir.path / "small_tau1.csv").string());
    REQUIRE(table.rows.size() == 2);
    CHECK(csv_column(table, "p0_over_pi")[0] == 0.5);
    CHECK(csv_column(table, "p0_over_pi")[1] == 0.6);
    for (double v : csv_column(table, "tau1_estimate")) CHECK(v > 0.0);
}

TEST_CASE("compare reports zero for identical files") {
    TempDir dir;
    write_file(dir.path / "run.cfg", small_cfg);
    REQUIRE(run("quantum --config " + (dir.path / "run.cfg").string() + " --out " +
                dir.path.string()) == 0);
    REQUIRE(run("compare --a " + (dir.path / "small.csv").string() + " --b " +
                (dir.path / "small.csv").string() + " --out " + dir.path.string()) == 0);
    const CsvTable rep = read_csv((dir.path / "compare.csv").string());
    CHECK(csv_column(rep, "max_rel_err")[0] == 0.0);
}

TEST_CASE("shipped figure presets parse and validate") {
    for (const char* name : {"fig1.cfg", "fig2.cfg", "fig3.cfg", "fig4.cfg"}) {
        const ExperimentConfig cfg =
            load_config((fs::path(ROTOR_ECHO_CONFIG_DIR) / name).string());
        const RotorParams params = cfg.rotor();
        CHECK_NOTHROW(cfg.packet(params));
        CHECK(params.k == 0.3);
    }
}
