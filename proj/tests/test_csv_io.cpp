#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "gigfrail/csv_io.hpp"
#include "gigfrail/simulate.hpp"

using namespace gigfrail;

namespace {

Dataset parse(const std::string& text) {
    std::istringstream in(text);
    return read_dataset_csv(in);
}

std::size_t error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const CsvError& e) {
        return e.line();
    }
    return static_cast<std::size_t>(-1);
}

}  // namespace

TEST_CASE("reading groups rows by cluster in order of appearance") {
    const Dataset d = parse("cluster_id,time,status,mycn,ploidy\nb,1.5,1,1,0\na,2,0,0,1\nb,0.25,0,0,0\n");
    REQUIRE(d.n_clusters() == 2);
    CHECK(d.clusters()[0].id == "b");
    CHECK(d.clusters()[0].records.size() == 2);
    CHECK(d.clusters()[1].records[0].time == 2.0);
    CHECK(d.covariate_names() == std::vector<std::string>{"mycn", "ploidy"});
    CHECK(d.n_events() == 1);
}

TEST_CASE("whitespace, CRLF and a header-only covariate set") {
    const Dataset d = parse("cluster_id,time,status\r\n 1 , 3.5 , 1\r\n\r\n2,4,0\r\n");
    CHECK(d.n_clusters() == 2);
    CHECK(d.n_covariates() == 0);
}

TEST_CASE("malformed input is reported with its line number") {
    CHECK(error_line("cluster_id,time,status\n1,2,1\n1,-3,1\n") == 3);
    CHECK(error_line("cluster_id,time,status\n1,2,1\n1,abc,1\n") == 3);
    CHECK(error_line("cluster_id,time,status,x\n1,2,1,\n") == 2);
    CHECK(error_line("cluster_id,time,status,x\n1,2,1\n") == 2);
    CHECK(error_line("cluster_id,time,status\n1,2,2\n") == 2);
    CHECK(error_line("cluster_id,time,status\n,2,1\n") == 2);
    CHECK(error_line("id,time,status\n1,2,1\n") == 1);
    CHECK(error_line("cluster_id,time,status\n1,2,nan\n") == 2);
    CHECK(error_line("cluster_id,time,status,x\n1,2,1,inf\n") == 2);
    CHECK_THROWS_AS(parse(""), CsvError);
    CHECK_THROWS_AS(parse("cluster_id,time,status\n"), CsvError);
    CHECK_THROWS_WITH_AS(parse("cluster_id,time,status\n1,2,0\n"), doctest::Contains("event"), CsvError);
}

TEST_CASE("shortest round-trip number formatting") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678, -0.0, 5e-324, std::numeric_limits<double>::max()}) {
        const std::string text = format_double(v);
        double back = 1.0;
        std::from_chars(text.data(), text.data() + text.size(), back);
        CHECK(back == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(3.0) == "3");
}

TEST_CASE("write then read reproduces the dataset exactly") {
    Scenario scn;
    scn.m = 50;
    scn.cluster_size = 3;
    Rng rng(3);
    const Dataset data = generate(scn, rng);
    std::stringstream buf;
    write_dataset_csv(buf, data);
    CHECK(read_dataset_csv(buf) == data);
}

TEST_CASE("atomic file writes") {
    const auto dir = std::filesystem::temp_directory_path() / "gigfrail_csv_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "out.csv";
    write_file_atomic(path, "first\n");
    write_file_atomic(path, "second\n");
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "second");
    CHECK_FALSE(std::filesystem::exists(dir / "out.csv.tmp"));
    CHECK_THROWS_AS(read_dataset_file(dir / "missing.csv"), CsvError);
    std::filesystem::remove_all(dir);
}
