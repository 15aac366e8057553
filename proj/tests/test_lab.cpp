#include "bvlab/lab.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bvlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("bvlab_lab_" + name);
    fs::remove_all(dir);
    return dir;
}

const PrimeStore& store() {
    static const PrimeStore s = build_prime_store(1000000);
    return s;
}

}  // namespace

TEST_CASE("config text") {
    ExperimentConfig cfg;
    apply_config_text(cfg,
                      "# census at a larger scale\n"
                      "x = 1e7\n"
                      "Q=500   # trailing comment\n"
                      "A = 0, 1.5 ,3\n"
                      "\n"
                      "family = coprime-radical\n"
                      "members = 1001, 1003\n"
                      "threads = 4\n");
    CHECK(cfg.x == 1e7);
    CHECK(cfg.Q == 500);
    CHECK(cfg.A_grid == std::vector<double>{0.0, 1.5, 3.0});
    CHECK(cfg.family == FamilyKind::coprime_radical_bounded);
    CHECK(cfg.members == std::vector<u64>{1001, 1003});
    CHECK(cfg.threads == 4);

    CHECK_THROWS_AS(apply_config_text(cfg, "x 5\n"), UsageError);
    CHECK_THROWS_AS(apply_setting(cfg, "colour", "red"), UsageError);
    CHECK_THROWS_AS(apply_setting(cfg, "x", "ten"), UsageError);
    CHECK_THROWS_AS(apply_setting(cfg, "threads", "1.5"), UsageError);
    CHECK_THROWS_AS(apply_setting(cfg, "family", "triangles"), UsageError);
    CHECK_THROWS_AS(apply_config_file(cfg, "/nonexistent/bvlab.conf"), ResourceError);
}

TEST_CASE("regime checks are reported per A") {
    ExperimentConfig cfg;
    cfg.A_grid = {0, 1};
    const auto checks = regime_checks(cfg);
    REQUIRE(checks.size() == 2);
    CHECK(checks[0].lower == doctest::Approx(std::pow(1e6, 0.01)));
    CHECK(checks[1].upper < checks[0].upper);
}

TEST_CASE("census writes one CSV and JSON per A and a summary") {
    ExperimentConfig cfg;
    cfg.output_dir = scratch("census");
    const auto run = run_census(cfg, store(), nullptr);
    REQUIRE(run.reports.size() == 3);
    CHECK(run.summary["status"] == "complete");
    for (const char* name : {"census_prime-powers_A0.csv", "census_prime-powers_A1.json", "census_prime-powers_A2.csv",
                             "summary.csv", "summary.json"})
        CHECK(fs::exists(cfg.output_dir / name));
    for (std::size_t i = 1; i < run.reports.size(); ++i)
        CHECK(run.reports[i].exceptional_count >= run.reports[i - 1].exceptional_count);

    const std::string first = slurp(cfg.output_dir / "census_prime-powers_A1.csv");
    ExperimentConfig again = cfg;
    again.output_dir = scratch("census_again");
    again.threads = 3;
    run_census(again, store(), nullptr);
    CHECK(slurp(again.output_dir / "census_prime-powers_A1.csv") == first);
    CHECK(slurp(again.output_dir / "summary.json") == slurp(cfg.output_dir / "summary.json"));
    fs::remove_all(cfg.output_dir);
    fs::remove_all(again.output_dir);
}

TEST_CASE("empty family still yields a summary row") {
    ExperimentConfig cfg;
    cfg.family = FamilyKind::explicit_list;
    cfg.A_grid = {1};
    cfg.output_dir = scratch("empty");
    const auto run = run_census(cfg, store(), nullptr);
    REQUIRE(run.summary["rows"].size() == 1);
    CHECK(run.summary["rows"][0]["family_size"] == 0);
    CHECK(run.summary["rows"][0]["exceptional"] == 0);
    CHECK_FALSE(run.summary["rows"][0]["warnings"].empty());
    fs::remove_all(cfg.output_dir);
}

TEST_CASE("a failing census leaves a partial summary") {
    ExperimentConfig cfg;
    cfg.x = 5e6;  // beyond the store
    cfg.output_dir = scratch("partial");
    CHECK_THROWS(run_census(cfg, store(), nullptr));
    const auto summary = nlohmann::json::parse(slurp(cfg.output_dir / "summary.json"));
    CHECK(summary["status"] == "partial");
    CHECK(summary.contains("error"));
    fs::remove_all(cfg.output_dir);
}

TEST_CASE("prime store cache reuse") {
    ExperimentConfig cfg;
    const auto dir = scratch("cache");
    fs::create_directories(dir);
    cfg.cache_path = dir / "primes.bvpc";
    std::ostringstream log;
    const auto built = obtain_prime_store(cfg, 100000, &log);
    CHECK(fs::exists(cfg.cache_path));
    const auto loaded = obtain_prime_store(cfg, 50000, &log);
    CHECK(loaded.limit() == 100000);
    CHECK(loaded == built);
    fs::remove_all(dir);
}

TEST_CASE("suites") {
    CHECK_THROWS_AS(run_suite("nope", 1), UsageError);
    const auto names = suite_names();
    CHECK(names.size() == 6);
    const auto report = run_suite("orthogonality", 1);
    CHECK(report.ok());
    CHECK(to_json(report)["passed"] == report.passed);
}
