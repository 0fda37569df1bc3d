#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "vmicm/cli.hpp"
#include "vmicm/csv.hpp"
#include "vmicm/error.hpp"
#include "vmicm/simulate.hpp"

using namespace vmicm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("vmicm_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run(std::vector<std::string> args, std::string* err_text = nullptr) {
    args.insert(args.begin(), "vmicm");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (err_text) *err_text = err.str();
    return code;
}

std::vector<std::string> lines_of(const fs::path& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("dataset csv round trip is exact") {
    RandomStream rng(71, 0);
    const Dataset data = make_dataset(testing::normal_matrix(25, 1, rng).col(0) * 1e3,
                                      testing::uniform_matrix(25, 3, rng),
                                      testing::normal_matrix(25, 4, rng) / 7.0);
    std::stringstream buffer;
    write_dataset(buffer, data);
    const std::string text = buffer.str();
    CHECK(text.rfind("y,x1,x2,x3,g1,g2,g3,g4\n", 0) == 0);
    CHECK(text.find('\r') == std::string::npos);
    const Dataset back = read_dataset(buffer);
    CHECK(back.y == data.y);
    CHECK(back.x == data.x);
    CHECK(back.g == data.g);
    CHECK(back.g.col(0).isOnes(0.0));
}

TEST_CASE("csv reader reports the offending cell") {
    std::istringstream bad_cell("y,x1,g1\n1,0.5,2\n1,abc,2\n");
    try {
        read_dataset(bad_cell);
        FAIL("expected an input error");
    } catch (const InputError& e) {
        const std::string what = e.what();
        CHECK(what.find("row 3") != std::string::npos);
        CHECK(what.find("x1") != std::string::npos);
    }
    std::istringstream short_row("y,x1,g1\n1,0.5\n");
    CHECK_THROWS_AS(read_dataset(short_row), InputError);
    std::istringstream bad_header("y,z1,g1\n1,0.5,2\n");
    CHECK_THROWS_AS(read_dataset(bad_header), InputError);
    std::istringstream empty("");
    CHECK_THROWS_AS(read_dataset(empty), InputError);
    std::istringstream nan_cell("y,x1,g1\nnan,0.5,2\n");
    CHECK_THROWS_AS(read_dataset(nan_cell), InputError);
}

TEST_CASE("format keeps 17 significant digits") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(2.0) == "2");
}

TEST_CASE("basis-dump writes raw and transformed columns") {
    const fs::path dir = scratch("basis");
    const fs::path file = dir / "basis.csv";
    CHECK(run({"basis-dump", "--knots", "2", "--order", "3", "--out", file.string()}) == kExitOk);
    const auto lines = lines_of(file);
    REQUIRE(lines.size() == 201);
    CHECK(lines[0] == "u,B1,B2,B3,B4,B5,T1,T2,T3,T4,T5");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::istringstream row(lines[i]);
        std::vector<double> values;
        for (std::string cell; std::getline(row, cell, ',');) values.push_back(std::stod(cell));
        REQUIRE(values.size() == 11);
        double sum = 0.0;
        for (int l = 1; l <= 5; ++l) sum += values[static_cast<std::size_t>(l)];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(values[6] == 1.0);
    }
    CHECK(run({"basis-dump", "--knots", "0", "--order", "3", "--out", file.string()}) == kExitInput);
    CHECK(run({"basis-dump", "--knots", "2", "--order", "7", "--out", file.string()}) == kExitInput);
}

TEST_CASE("fit command writes its report and rejects bad input") {
    const fs::path dir = scratch("fit");
    ScenarioConfig config;
    config.n = 150;
    config.p = 6;
    config.q = 3;
    config.seed = 5;
    write_dataset_file((dir / "data.csv").string(), gen_continuous(config, 0).data);
    const fs::path out = dir / "report";
    CHECK(run({"fit", "--data", (dir / "data.csv").string(), "--out", out.string(), "--knots", "2",
               "--order", "4"}) == kExitOk);
    CHECK(fs::exists(out / "tuning.csv"));
    CHECK(fs::exists(out / "classification.csv"));
    const auto beta = lines_of(out / "beta.csv");
    CHECK(beta.size() == 4);
    const auto tuning = lines_of(out / "tuning.csv");
    CHECK(std::find(tuning.begin(), tuning.end(), "knots,2") != tuning.end());
    CHECK(std::find(tuning.begin(), tuning.end(), "order,4") != tuning.end());

    std::ofstream(dir / "bad.csv") << "y,x1,g1\n1,zero,1\n";
    std::string err;
    CHECK(run({"fit", "--data", (dir / "bad.csv").string(), "--out", out.string()}, &err) == kExitInput);
    CHECK(err.find("zero") != std::string::npos);
    CHECK(run({"fit", "--data", (dir / "missing.csv").string(), "--out", out.string()}) == kExitInput);
}

TEST_CASE("simulate command validates its preset") {
    const fs::path dir = scratch("simulate");
    CHECK(run({"simulate", "--preset", "table9", "--replicates", "1", "--seed", "1", "--out",
               dir.string()}) == kExitInput);
    CHECK(run({"simulate", "--preset", "table1", "--replicates", "0", "--seed", "1", "--out",
               dir.string()}) == kExitInput);
    CHECK(run({"simulate", "--preset", "table1", "--replicates", "1", "--seed", "1", "--out",
               dir.string(), "--n", "120", "--p", "6", "--q", "3"}) == kExitOk);
    CHECK(fs::exists(dir / "table1.csv"));
    CHECK(fs::exists(dir / "table1.txt"));
}

TEST_CASE("command line errors map to the input exit code") {
    CHECK(run({}) == kExitInput);
    CHECK(run({"unknown"}) == kExitInput);
    CHECK(run({"basis-dump", "--knots", "x", "--order", "3", "--out", "f"}) == kExitInput);
    CHECK(run({"--help"}) == kExitOk);
}
