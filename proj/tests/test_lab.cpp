#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "slowmix/lab.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace slowmix;

namespace {

ExperimentConfig base_config(const std::string& exp, const std::string& out) {
    ExperimentConfig c;
    c.experiment = exp;
    c.kappa_list = {1.0 / 8.0};
    c.amplitude = 0.0;
    c.grid = 32;
    c.seeds = {1};
    c.substeps = 16;
    c.out_path = out;
    return c;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

#ifdef SLOWMIX_CLI
int cli(const std::string& args) {
    std::string cmd = std::string(SLOWMIX_CLI) + " " + args + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}
#endif

} // namespace

TEST_CASE("config validation rejects each bad field") {
    auto ok = base_config("bounds", "x.csv");
    CHECK_NOTHROW(validate(ok));
    auto c = ok;
    c.experiment = "nope";
    CHECK_THROWS_AS(validate(c), ConfigInvalid);
    c = ok;
    c.kappa_list = {};
    CHECK_THROWS_AS(validate(c), ConfigInvalid);
    c = ok;
    c.kappa_list = {0.5};
    CHECK_THROWS_AS(validate(c), ConfigInvalid);
    c = ok;
    c.seeds = {};
    CHECK_THROWS_AS(validate(c), ConfigInvalid);
    c = ok;
    c.grid = 100;
    CHECK_THROWS_AS(validate(c), ConfigInvalid);
    c = ok;
    c.substeps = 0;
    CHECK_THROWS_AS(validate(c), ConfigInvalid);
    c = ok;
    c.out_path = "";
    CHECK_THROWS_AS(validate(c), ConfigInvalid);
    c = ok;
    c.amplitude = -1.0;
    CHECK_THROWS_AS(validate(c), ConfigInvalid);
}

TEST_CASE("worker seeds are stable and collision-free across the grid") {
    CHECK(derive_seed(42, 0, 0) == derive_seed(42, 0, 0));
    CHECK(derive_seed(42, 0, 0) != derive_seed(42, 0, 1));
    CHECK(derive_seed(42, 0, 0) != derive_seed(42, 1, 0));
    CHECK(derive_seed(42, 0, 0) != derive_seed(43, 0, 0));
}

TEST_CASE("bounds experiment writes a well-formed results row") {
    const std::string path = "lab_bounds.csv";
    std::remove(path.c_str());
    auto c = base_config("bounds", path);
    auto rr = run(c);
    CHECK(rr.rows == 1);
    CHECK(rr.failures == 0);
    auto text = slurp(path);
    CHECK(text.rfind("experiment,kappa,amplitude,seed,payload,wall_time_s,"
                     "code_version\n", 0) == 0);
    auto rows = parse_results(path);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].experiment == "bounds");
    CHECK(rows[0].kappa == doctest::Approx(0.125));
    CHECK(rows[0].seed == 1);
    CHECK(rows[0].num("poincare") ==
          doctest::Approx(std::log(2.0) / 0.125).epsilon(1e-9));
    CHECK(rows[0].has("corollary"));
    CHECK(rows[0].has("heuristic"));
    // sidecar config snapshot
    auto side = slurp(path + ".json");
    CHECK(side.find("\"experiment\": \"bounds\"") != std::string::npos);
    CHECK(side.find("\"grid\": 32") != std::string::npos);
    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
}

TEST_CASE("heat-only tdis run lands on the Poincare time") {
    const std::string path = "lab_tdis.csv";
    std::remove(path.c_str());
    auto c = base_config("tdis", path);
    auto rr = run(c);
    CHECK(rr.failures == 0);
    auto rows = parse_results(path);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].num("t_dis_hat") ==
          doctest::Approx(std::log(2.0) / 0.125).epsilon(0.05));
    CHECK(rows[0].num("op_norm_at_t") <= 0.5);
    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
}

TEST_CASE("identical configs give byte-identical payloads") {
    const std::string a = "lab_det_a.csv", b = "lab_det_b.csv";
    std::remove(a.c_str());
    std::remove(b.c_str());
    auto ca = base_config("twopoint-drift", a);
    ca.amplitude = 50.0;
    ca.kappa_list = {1.0 / 8.0, 1.0 / 16.0};
    ca.seeds = {3, 4};
    ca.overrides["samples"] = "1000";
    auto cb = ca;
    cb.out_path = b;
    run(ca);
    run(cb);
    auto rows = parse_results(a);
    auto rows_b = parse_results(b);
    REQUIRE(rows.size() == 4); // 2 kappas x 2 seeds
    REQUIRE(rows_b.size() == 4);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].kappa == rows_b[i].kappa);
        CHECK(rows[i].seed == rows_b[i].seed);
        // payloads byte-identical; only wall time may differ between runs
        CHECK(rows[i].payload == rows_b[i].payload);
        CHECK(rows[i].has("ci95_upper"));
    }
    std::remove(a.c_str());
    std::remove(b.c_str());
    std::remove((a + ".json").c_str());
    std::remove((b + ".json").c_str());
}

TEST_CASE("reruns append rows without repeating the header") {
    const std::string path = "lab_append.csv";
    std::remove(path.c_str());
    auto c = base_config("bounds", path);
    run(c);
    run(c);
    auto text = slurp(path);
    std::size_t headers = 0, pos = 0;
    while ((pos = text.find("experiment,kappa", pos)) != std::string::npos) {
        ++headers;
        ++pos;
    }
    CHECK(headers == 1);
    CHECK(parse_results(path).size() == 2);
    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
}

TEST_CASE("summary recovers a clean 1/kappa scaling") {
    const std::string path = "lab_synth.csv";
    {
        std::ofstream out(path);
        out << "experiment,kappa,amplitude,seed,payload,wall_time_s,"
               "code_version\n";
        out.precision(15);
        for (double k : {0.125, 0.0625, 0.03125})
            for (int s = 1; s <= 3; ++s)
                out << "tdis," << k << ",50," << s
                    << ",t_dis_hat=" << std::log(2.0) / k << ",1,0.1.0\n";
        for (double k : {0.125, 0.0625})
            out << "mix," << k << ",50,1,fit_ok=1;gamma_hat=0.3,1,0.1.0\n";
        out << "twopoint-drift,0.125,50,1,"
               "mean_ratio=0.7;ci95_upper=0.75,1,0.1.0\n";
        out << "twopoint-drift,0.0625,50,1,"
               "mean_ratio=0.72;ci95_upper=0.8,1,0.1.0\n";
    }
    auto table = sweep_summary(path);
    CHECK(table.get("tdis", "loglog_slope") == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(table.get("tdis", "curvature_flag") == 0.0);
    CHECK(table.get("mix", "median_gamma_max_over_min") ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(table.get("twopoint-drift", "max_ci95_upper") ==
          doctest::Approx(0.8).epsilon(1e-12));
    CHECK(std::ifstream(path + ".summary.csv").good());
    std::remove(path.c_str());
    std::remove((path + ".summary.csv").c_str());
}

TEST_CASE("summary flags curvature when the scaling bends") {
    const std::string path = "lab_curved.csv";
    {
        std::ofstream out(path);
        out << "experiment,kappa,amplitude,seed,payload,wall_time_s,"
               "code_version\n";
        out << "tdis,0.125,50,1,t_dis_hat=2,1,0.1.0\n";
        out << "tdis,0.0625,50,1,t_dis_hat=2.1,1,0.1.0\n";
        out << "tdis,0.03125,50,1,t_dis_hat=10,1,0.1.0\n";
    }
    auto table = sweep_summary(path);
    CHECK(table.get("tdis", "curvature_flag") == 1.0);
    std::remove(path.c_str());
    std::remove((path + ".summary.csv").c_str());
}

TEST_CASE("summary of an empty file is an error") {
    const std::string path = "lab_empty.csv";
    std::ofstream(path).close();
    CHECK_THROWS_AS(sweep_summary(path), InsufficientData);
    std::remove(path.c_str());
}

TEST_CASE("plot series for each kind, unknown kind rejected") {
    const std::string path = "lab_plot.csv";
    {
        std::ofstream out(path);
        out << "experiment,kappa,amplitude,seed,payload,wall_time_s,"
               "code_version\n";
        out << "mix,0.125,50,1,s=0;n=2;ratio=0.5;aliased=0,1,0.1.0\n";
        out << "mix,0.125,50,1,s=0;n=4;ratio=0.25;aliased=0,1,0.1.0\n";
        out << "tdis,0.125,50,1,t_dis_hat=3.5;c1=0.1,1,0.1.0\n";
        out << "twopoint-drift,0.125,50,1,"
               "mean_ratio=0.7;ci95_upper=0.75,1,0.1.0\n";
    }
    for (const std::string kind : {"mix-decay", "tdis-scaling", "drift-ci"}) {
        auto out_path = emit_plotdata(path, kind);
        auto text = slurp(out_path);
        CHECK(text.rfind("x,y,series\n", 0) == 0);
        CHECK(text.size() > 11); // at least one data row follows the header
        std::remove(out_path.c_str());
    }
    CHECK_THROWS_AS(emit_plotdata(path, "pie-chart"), UnknownKind);
    CHECK_FALSE(std::ifstream(path + ".pie-chart.csv").good());
    std::remove(path.c_str());
}

TEST_CASE("parser survives truncated and corrupt rows") {
    const std::string path = "lab_partial.csv";
    {
        std::ofstream out(path);
        out << "experiment,kappa,amplitude,seed,payload,wall_time_s,"
               "code_version\n";
        out << "tdis,0.125,50,1,t_dis_hat=3.5,1,0.1.0\n";
        out << "tdis,not-a-number,50,1,t_dis_hat=3.5,1,0.1.0\n";
        out << "tdis,0.0625\n";       // killed mid-write
        out << "tdis,0.0625,50,2,t_d"; // no trailing newline
    }
    auto rows = parse_results(path);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].num("t_dis_hat") == doctest::Approx(3.5));
    CHECK(rows[1].kappa == doctest::Approx(0.0625));
    std::remove(path.c_str());
}

#ifdef SLOWMIX_CLI

TEST_CASE("CLI runs an experiment and honors exit codes") {
    std::remove("cli_out.csv");
    std::remove("cli_out.csv.json");
    CHECK(cli("bounds --kappa 0.125 --amplitude 0 --grid 32 --seeds 1 "
              "--out cli_out.csv") == 0);
    CHECK(parse_results("cli_out.csv").size() == 1);
    // invalid kappa -> ConfigInvalid -> 2
    CHECK(cli("bounds --kappa 0.5 --amplitude 0 --grid 32 --seeds 1 "
              "--out cli_bad.csv") == 2);
    // bad plot kind -> 2; missing results file -> 3
    CHECK(cli("plotdata --in cli_out.csv --kind pie-chart") == 2);
    CHECK(cli("summary --in cli_no_such_file.csv") == 3);
    std::remove("cli_out.csv");
    std::remove("cli_out.csv.json");
}

TEST_CASE("CLI sweep reads a JSON config") {
    std::remove("cli_sweep.csv");
    {
        std::ofstream out("cli_sweep.json");
        out << "{\"experiment\": \"tdis\", \"kappa_list\": [0.125, 0.0625],\n"
               " \"seeds\": [1, 2], \"amplitude\": 0, \"grid\": 32,\n"
               " \"substeps\": 16, \"out_path\": \"cli_sweep.csv\"}\n";
    }
    CHECK(cli("sweep --config cli_sweep.json") == 0);
    CHECK(parse_results("cli_sweep.csv").size() == 4);
    CHECK(cli("summary --in cli_sweep.csv") == 0);
    // malformed JSON -> 2
    {
        std::ofstream out("cli_broken.json");
        out << "{\"experiment\": ";
    }
    CHECK(cli("sweep --config cli_broken.json") == 2);
    CHECK(cli("sweep --config cli_missing.json") == 2);
    std::remove("cli_sweep.csv");
    std::remove("cli_sweep.csv.json");
    std::remove("cli_sweep.csv.summary.csv");
    std::remove("cli_sweep.json");
    std::remove("cli_broken.json");
}

#endif
