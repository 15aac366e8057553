#pragma once

#include "bvlab/ap_stats.hpp"
#include "bvlab/error.hpp"
#include "bvlab/prime_store.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace bvlab {

// Bad command line, unknown suite, malformed config line.
class UsageError : public Error {
public:
    using Error::Error;
};

struct ExperimentConfig {
    double x = 1e6;
    double Q = 1e3;
    std::vector<double> A_grid{0.0, 1.0, 2.0};
    double epsilon = 0.01;
    FamilyKind family = FamilyKind::prime_powers;
    double C = 6.0;                         // prime_bound = (log x)^C
    double radical_exponent = 9.0 / 40.0;   // radical_bound = x^radical_exponent
    std::vector<u64> members;               // explicit family
    u64 seed = 1;
    std::filesystem::path output_dir = "bvlab-out";
    std::filesystem::path cache_path;       // empty: no cache
    unsigned threads = 1;
    std::size_t segment_size = std::size_t{1} << 16;
    std::size_t memory_budget = 0;
};

/// Sets one key. Throws UsageError for unknown keys or unparsable values.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Flat "key = value" lines; '#' starts a comment.
void apply_config_text(ExperimentConfig& cfg, std::string_view text);
void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);

/// Q within [x^epsilon, x^(1/3) (log x)^(-15-2A)]; reported per A, never enforced.
struct RegimeCheck {
    double A = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool holds = false;
};
std::vector<RegimeCheck> regime_checks(const ExperimentConfig& cfg);

FamilyBounds family_bounds(const ExperimentConfig& cfg);

/// Loads the cache when it covers `limit`, otherwise sieves and (if a cache
/// path is set) writes it. Progress lines go to `log` when non-null.
PrimeStore obtain_prime_store(const ExperimentConfig& cfg, u64 limit, std::ostream* log);

struct CensusRun {
    std::vector<CensusReport> reports;
    std::vector<std::filesystem::path> files;
    nlohmann::json summary;
};

/// One CSV and one JSON per A, plus summary.csv and summary.json. If a step
/// fails, summary.json is still written with "status": "partial" and the
/// error before the exception propagates.
CensusRun run_census(const ExperimentConfig& cfg, const PrimeStore& store, std::ostream* log);

struct SuiteReport {
    std::string name;
    std::size_t trials = 0;
    std::size_t passed = 0;
    double seconds = 0.0;
    nlohmann::json details;  // diagnostics; ratios here never affect `passed`

    bool ok() const { return passed == trials; }
};

const std::vector<std::string>& suite_names();

/// Runs one named suite ("all" is expanded by the caller). Throws UsageError
/// for unknown names.
SuiteReport run_suite(const std::string& name, u64 seed);

nlohmann::json to_json(const SuiteReport& r);

}  // namespace bvlab
