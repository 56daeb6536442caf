#include "doctest.h"

#include "mfard/errors.hpp"
#include "mfard/sweep.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mfard;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("mfard-unit-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const fs::path p = dir / name;
    fs::remove(p);
    return p;
}

// Small but nontrivial: every model kind, two P values, two kappas.
SweepConfig tiny_config(const fs::path& out) {
    SweepConfig c;
    c.task = TaskSpec::parity(5, {0, 1});
    c.network = Hyperparams{16, 0.5, 1.0, 1.0, 1.0};
    c.models = {ModelKind::SGLD, ModelKind::MF, ModelKind::MF_ARD, ModelKind::NNGP, ModelKind::THEORY};
    c.P_grid = {20, 40};
    c.kappa_grid = {0.05, 0.5};
    c.seeds = 2;
    c.master_seed = 11;
    c.sgld.steps = 300;
    c.sgld.lr_decay_steps = 100;
    c.sgld.log_stride = 100;
    c.mf.B = 16;
    c.mf.outer_steps = 40;
    c.mf.K_decay_steps = 20;
    c.mf.lr_decay_steps = 20;
    c.mf.log_stride = 10;
    c.nngp.M = 256;
    c.P_eval = 200;
    c.output = out;
    return c;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_SUITE("sweep") {

TEST_CASE("presets") {
    const SweepConfig c = preset_config("fig4-parity");
    CHECK(c.task.d == 35);
    CHECK(c.task.support == std::vector<int>{0, 1, 2, 3});
    CHECK(c.network.N == 512);
    CHECK(c.network.gamma == 0.5);
    CHECK(c.P_grid == std::vector<std::int64_t>{10, 100, 500, 750, 1000, 2133, 3666, 5000, 7500, 10000});
    CHECK(c.kappa_grid == std::vector<double>{5e-4, 1e-3, 5e-3, 7.5e-3, 1e-2, 5e-2, 1e-1});
    for (const auto& name : preset_names()) CHECK_NOTHROW(preset_config(name).validate());
    CHECK_THROWS_AS(preset_config("nope"), ConfigError);
}

TEST_CASE("config parsing") {
    SUBCASE("preset with overrides") {
        const SweepConfig c = parse_config("preset: desk-fig1\nseeds: 1\nsgld:\n  steps: 1000\n");
        CHECK(c.task.d == 10);
        CHECK(c.seeds == 1);
        CHECK(c.sgld.steps == 1000);
        CHECK(c.preset == "desk-fig1");
    }
    SUBCASE("full document") {
        const SweepConfig c = parse_config(R"(
task: {kind: single_index, d: 6, k: 2, hermite_degree: 3}
models: [SGLD, NNGP]
P_grid: [10, 20]
kappa_grid: [0.1]
network: {N: 32, gamma: 0.75, sigma_w: 0.5, sigma_a: 2.0}
nngp: {M: 512, ridge: kappa2_over_2sigma_a2}
eval: {P_eval: 100}
)");
        CHECK(c.task.kind == TaskKind::SingleIndex);
        CHECK(c.task.support == std::vector<int>{0, 1});
        CHECK(c.task.hermite_degree == 3);
        CHECK(c.models == std::vector<ModelKind>{ModelKind::SGLD, ModelKind::NNGP});
        CHECK(c.network.gamma == 0.75);
        CHECK(c.nngp.ridge == RidgeConvention::KappaSqOverTwoSigmaASq);
        CHECK(c.P_eval == 100);
    }
    SUBCASE("errors name the field") {
        try {
            parse_config("preset: desk-fig1\nP_grid: []\n");
            FAIL("expected error");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("P_grid") != std::string::npos);
        }
        try {
            parse_config("preset: desk-fig1\nsgld:\n  learning_rte: 1e-3\n");
            FAIL("expected error");
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("learning_rate") != std::string::npos);
            CHECK(msg.find("line 3") != std::string::npos);
        }
        CHECK_THROWS_AS(parse_config("models: [SGLD, MFX]\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("preset: desk-fig1\nseeds: many\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("preset: desk-fig1\nkappa_grid: [-1]\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("[1, 2"), ConfigError);
    }
}

TEST_CASE("seeds") {
    SweepConfig c = tiny_config("unused.csv");
    // training data shared across models and noise levels
    const CellKey a{ModelKind::SGLD, 20, 0.05, 0}, b{ModelKind::MF, 20, 0.5, 0};
    CHECK(train_data_seed(c, a.P, a.seed) == train_data_seed(c, b.P, b.seed));
    CHECK(cell_seed(c, a) != cell_seed(c, b));
    CHECK(train_data_seed(c, 20, 0) != train_data_seed(c, 20, 1));
    CHECK(eval_data_seed(c, 0) != train_data_seed(c, 20, 0));
    c.random_support = true;
    const TaskSpec t0 = task_for_seed(c, 0);
    CHECK(t0.k() == 2);
    CHECK(task_for_seed(c, 0).support == t0.support);
}

TEST_CASE("csv formatting") {
    CHECK(format_real(0.1) == "0.10000000000000001");
    CHECK(format_real(std::numeric_limits<double>::quiet_NaN()) == "nan");
    SweepRecord r{{ModelKind::MF_ARD, 50, 5e-3, 2}, 0.5, 0.25, 0.125, 100, 1.5, CellStatus::Timeout};
    const std::string row = csv_row(r);
    CHECK(row == "1,MF_ARD,50,0.0050000000000000001,2,0.5,0.25,0.125,100,1.5,timeout");
    const std::string text = std::string(kCsvHeader) + "\n" + row + "\n" +
                             "1,MF,50,0.0050000000000000001,2,0.5,0.25,0.125,100,9,ok\n";
    const std::string canon = canonical_csv(text);
    CHECK(canon == std::string(kCsvHeader) + "\n" + "1,MF,50,0.0050000000000000001,2,0.5,0.25,0.125,100,0,ok\n" +
                       "1,MF_ARD,50,0.0050000000000000001,2,0.5,0.25,0.125,100,0,timeout\n");
}

TEST_CASE("a small grid writes one row per cell and resumes") {
    SweepConfig c = tiny_config(scratch("grid.csv"));
    c.models = {ModelKind::NNGP, ModelKind::THEORY};
    c.kappa_grid = {0.1};
    c.seeds = 1;
    const SweepSummary s = run_sweep(c);
    CHECK(s.cells == 4);
    CHECK(s.ok == 4);
    const std::string text = read_file(c.output);
    CHECK(count_lines(text) == 5);
    CHECK(text.rfind(std::string(kCsvHeader) + "\n", 0) == 0);

    const SweepSummary again = run_sweep(c);
    CHECK(again.skipped == 4);
    CHECK(again.ok + again.failed == 0);
    CHECK(read_file(c.output) == text);
}

TEST_CASE("a partial trailing row is dropped and recomputed") {
    SweepConfig c = tiny_config(scratch("partial.csv"));
    c.models = {ModelKind::THEORY};
    c.kappa_grid = {0.1};
    c.seeds = 1;
    run_sweep(c);
    const std::string full = read_file(c.output);
    // cut the last row in half
    {
        std::ofstream out(c.output, std::ios::binary | std::ios::trunc);
        out << full.substr(0, full.size() - 10);
    }
    const SweepSummary s = run_sweep(c);
    CHECK(s.skipped == 1);
    CHECK(s.ok == 1);
    CHECK(canonical_csv(read_file(c.output)) == canonical_csv(full));
}

TEST_CASE("results do not depend on the worker count") {
    SweepConfig one = tiny_config(scratch("w1.csv"));
    SweepConfig many = tiny_config(scratch("w4.csv"));
    one.workers = 1;
    many.workers = 4;
    run_sweep(one);
    run_sweep(many);
    CHECK(canonical_csv(read_file(one.output)) == canonical_csv(read_file(many.output)));
    CHECK(count_lines(read_file(one.output)) == 1 + 5 * 2 * 2 * 2);
}

TEST_CASE("theory cells follow the scalar fixed point") {
    SweepConfig c = tiny_config("unused.csv");
    const CellResult big = run_cell(c, {ModelKind::THEORY, 40, 10.0, 0});
    CHECK(big.record.m_S == 0.0);
    CHECK(big.record.test_mse == 0.5);
    const CellResult small = run_cell(c, {ModelKind::THEORY, 40, 1e-4, 0});
    CHECK(small.record.m_S > 0.5);
}

TEST_CASE("a diverging cell is reported, not thrown") {
    SweepConfig c = tiny_config("unused.csv");
    c.sgld.learning_rate_start = 50.0;
    c.sgld.learning_rate = 50.0;
    const CellResult r = run_cell(c, {ModelKind::SGLD, 20, 0.05, 0});
    CHECK(r.record.status == CellStatus::Diverged);
    CHECK(std::isnan(r.record.m_S));
}

}
