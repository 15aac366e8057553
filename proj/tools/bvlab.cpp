// Command-line driver: prime cache, censuses, verification suites, demos.
//
// Exit codes: 0 success, 1 a hard assertion failed, 2 usage error,
// 3 resource or I/O failure.

#include "bvlab/analytic.hpp"
#include "bvlab/bilinear.hpp"
#include "bvlab/lab.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace {

using namespace bvlab;

constexpr int kOk = 0;
constexpr int kAssertionFailed = 1;
constexpr int kUsage = 2;
constexpr int kResource = 3;

struct Globals {
    std::string config_file;
    std::vector<std::string> overrides;
    std::string cache;
    std::string output;
    unsigned threads = 0;
    bool threads_set = false;
    long long seed = -1;
};

// Defaults, then the config file, then BVLAB_CACHE, then --set and the
// dedicated flags.
ExperimentConfig resolve_config(const Globals& g) {
    ExperimentConfig cfg;
    if (!g.config_file.empty()) apply_config_file(cfg, g.config_file);
    if (const char* env = std::getenv("BVLAB_CACHE"); env && *env) cfg.cache_path = env;
    for (const auto& kv : g.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
        apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!g.cache.empty()) cfg.cache_path = g.cache;
    if (!g.output.empty()) cfg.output_dir = g.output;
    if (g.threads_set) cfg.threads = g.threads;
    if (g.seed >= 0) cfg.seed = static_cast<u64>(g.seed);
    return cfg;
}

int cmd_sieve_build(const ExperimentConfig& cfg, double limit) {
    if (cfg.cache_path.empty()) throw UsageError("sieve build needs a cache path (--cache or BVLAB_CACHE)");
    SieveOptions options;
    options.segment_size = cfg.segment_size;
    options.threads = cfg.threads;
    options.memory_budget = cfg.memory_budget;
    const PrimeStore store = build_prime_store(static_cast<u64>(limit), options);
    save_cache(store, cfg.cache_path);
    std::cout << "limit " << store.limit() << "\nprimes " << store.size() << "\ncache "
              << cfg.cache_path.string() << "\n";
    return kOk;
}

int cmd_sieve_info(const ExperimentConfig& cfg) {
    if (cfg.cache_path.empty()) throw UsageError("sieve info needs a cache path (--cache or BVLAB_CACHE)");
    const PrimeStore store = load_cache(cfg.cache_path);
    nlohmann::json info = {{"path", cfg.cache_path.string()},
                           {"version", kCacheVersion},
                           {"limit", store.limit()},
                           {"primes", store.size()},
                           {"bytes", std::filesystem::file_size(cfg.cache_path)}};
    if (store.size() > 0) info["largest"] = store.primes().back();
    std::cout << info.dump(2) << "\n";
    return kOk;
}

int cmd_census(const ExperimentConfig& cfg) {
    const PrimeStore store = obtain_prime_store(cfg, static_cast<u64>(std::ceil(cfg.x)), &std::cerr);
    const CensusRun run = run_census(cfg, store, &std::cerr);
    std::cout << run.summary.dump(2) << "\n";
    return kOk;
}

int cmd_verify(const ExperimentConfig& cfg, const std::string& suite) {
    std::vector<std::string> names;
    if (suite == "all") names = suite_names();
    else names.push_back(suite);

    nlohmann::json report = nlohmann::json::array();
    bool ok = true;
    for (const auto& name : names) {
        const SuiteReport r = run_suite(name, cfg.seed);
        std::cerr << (r.ok() ? "PASS " : "FAIL ") << r.name << " " << r.passed << "/" << r.trials << "\n";
        ok = ok && r.ok();
        report.push_back(to_json(r));
    }
    std::cout << nlohmann::json{{"seed", cfg.seed}, {"ok", ok}, {"suites", report}}.dump(2) << "\n";
    return ok ? kOk : kAssertionFailed;
}

struct DispersionArgs {
    double x = 1e4;
    u64 s = 25;
    double K = 0.0;   // 0: x^(1/3)
    double t = 0.0;   // Im z
    double Q = 0.0;   // 0: s / 2
    bool perron = true;
};

int cmd_dispersion_demo(const ExperimentConfig& cfg, const DispersionArgs& args) {
    const ModulusProfile profile = make_profile(args.s);
    i64 e = 1;
    const auto config = make_bilinear_config(args.x, args.x, profile, e, e);
    const double K = args.K > 0 ? args.K : std::cbrt(args.x);
    const double L = args.x / K;
    const std::complex<double> z{1.0 / std::log(L), args.t};
    const auto a = random_unit_coefficients(cfg.seed, 1);
    const auto b = random_unit_coefficients(cfg.seed, 2);
    const double Q = args.Q > 0 ? args.Q : static_cast<double>(args.s) / 2.0;

    const auto d = dispersion_decompose(config, K, z, b);
    nlohmann::json out = dispersion_to_json(config, Q, d);
    if (args.perron) {
        const auto p = perron_block(config, K, 2.0 * K, a, b);
        out["perron_block"] = {{"direct", {p.direct.real(), p.direct.imag()}},
                               {"contour", {p.contour.real(), p.contour.imag()}},
                               {"error", p.error},
                               {"majorant", p.majorant},
                               {"reference_budget", p.reference_budget},
                               {"ratio", p.ratio},
                               {"nodes", p.nodes}};
    }
    out["y_budget"] = y_budget(args.x, Q, 1);
    std::filesystem::create_directories(cfg.output_dir);
    append_jsonl((cfg.output_dir / "dispersion.jsonl").string(), out);
    std::cout << out.dump(2) << "\n";
    return d.identity_holds() ? kOk : kAssertionFailed;
}

int cmd_perron_demo(const ExperimentConfig& cfg, double L, double N) {
    PerronInputs in;
    in.c = 1.0 / std::log(L);
    in.T = L * std::log(L);
    in.N = N > 0 ? N : std::floor(L / 2) + 0.5;
    const auto gen = random_unit_coefficients(cfg.seed, 3);
    for (u64 n = 1; n <= static_cast<u64>(L); ++n) in.coefficients.push_back(gen(n));
    const PerronTrial t = perron_truncated(in);
    std::filesystem::create_directories(cfg.output_dir);
    append_jsonl((cfg.output_dir / "perron.jsonl").string(), to_json(t));
    std::cout << to_json(t).dump(2) << "\n";
    return kOk;  // the budget is a calibrated report, not a theorem
}

int cmd_large_sieve_demo(const ExperimentConfig& cfg, u64 Q, u64 N, i64 M) {
    const auto gen = random_unit_coefficients(cfg.seed, 4);
    std::vector<std::complex<double>> a(N);
    for (u64 i = 0; i < N; ++i) a[i] = gen(i);
    const LargeSieveTrial t = large_sieve_sides(Q, M, std::move(a));
    std::filesystem::create_directories(cfg.output_dir);
    nlohmann::json rec = to_json(t);
    rec.erase("coefficients");
    append_jsonl((cfg.output_dir / "large_sieve.jsonl").string(), to_json(t));
    std::cout << rec.dump(2) << "\n";
    return t.holds() ? kOk : kAssertionFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Experiments on primes in progressions to sparse moduli"};
    app.require_subcommand(1);

    Globals g;
    app.add_option("--config", g.config_file, "flat key = value config file");
    app.add_option("--set", g.overrides, "override a config key (key=value), repeatable");
    app.add_option("--cache", g.cache, "prime cache path (overrides BVLAB_CACHE)");
    app.add_option("--output", g.output, "output directory");
    auto* threads_opt = app.add_option("--threads", g.threads, "worker threads (0 = all cores)");
    app.add_option("--seed", g.seed, "seed for random coefficients and trials");

    auto* sieve = app.add_subcommand("sieve", "build or inspect the prime cache");
    sieve->require_subcommand(1);
    double limit = 1e6;
    auto* sieve_build = sieve->add_subcommand("build", "sieve up to --limit and write the cache");
    sieve_build->add_option("--limit", limit, "sieve limit")->check(CLI::Range(2.0, 4294967295.0));
    auto* sieve_info = sieve->add_subcommand("info", "describe the cache file");

    auto* census = app.add_subcommand("census", "exceptional-moduli census");
    census->require_subcommand(1);
    auto* census_run = census->add_subcommand("run", "one CSV/JSON per A plus a summary");

    auto* verify = app.add_subcommand("verify", "run an exact-identity suite");
    std::string suite;
    verify->add_option("suite", suite, "buchstab, dispersion, orthogonality, large-sieve, perron, spi or all")
        ->required();

    auto* dispersion = app.add_subcommand("dispersion", "dispersion decomposition");
    dispersion->require_subcommand(1);
    DispersionArgs dargs;
    auto* dispersion_demo = dispersion->add_subcommand("demo", "one dispersion breakdown with its Perron block");
    dispersion_demo->add_option("--x", dargs.x, "x");
    dispersion_demo->add_option("--s", dargs.s, "modulus s");
    dispersion_demo->add_option("--K", dargs.K, "block start K (default x^(1/3))");
    dispersion_demo->add_option("--t", dargs.t, "imaginary part of z");
    dispersion_demo->add_option("--Q", dargs.Q, "Q for the report (default s/2)");
    bool skip_perron = false;
    dispersion_demo->add_flag("--no-perron", skip_perron, "skip the contour integral");

    auto* perron = app.add_subcommand("perron", "truncated Perron formula");
    perron->require_subcommand(1);
    double perron_L = 50.0, perron_N = 0.0;
    auto* perron_demo = perron->add_subcommand("demo", "c = 1/log L, T = L log L, support n <= L");
    perron_demo->add_option("--L", perron_L, "L")->check(CLI::Range(3.0, 1e6));
    perron_demo->add_option("--N", perron_N, "N (default floor(L/2) + 1/2)");

    auto* large_sieve = app.add_subcommand("large-sieve", "large sieve inequality");
    large_sieve->require_subcommand(1);
    u64 ls_Q = 10, ls_N = 50;
    i64 ls_M = 0;
    auto* large_sieve_demo = large_sieve->add_subcommand("demo", "one randomized trial");
    large_sieve_demo->add_option("--Q", ls_Q, "Q")->check(CLI::Range(1, 1000));
    large_sieve_demo->add_option("--N", ls_N, "N")->check(CLI::Range(1, 100000));
    large_sieve_demo->add_option("--M", ls_M, "offset M");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }
    g.threads_set = threads_opt->count() > 0;
    dargs.perron = !skip_perron;

    try {
        const ExperimentConfig cfg = resolve_config(g);
        if (sieve_build->parsed()) return cmd_sieve_build(cfg, limit);
        if (sieve_info->parsed()) return cmd_sieve_info(cfg);
        if (census_run->parsed()) return cmd_census(cfg);
        if (verify->parsed()) return cmd_verify(cfg, suite);
        if (dispersion_demo->parsed()) return cmd_dispersion_demo(cfg, dargs);
        if (perron_demo->parsed()) return cmd_perron_demo(cfg, perron_L, perron_N);
        if (large_sieve_demo->parsed()) return cmd_large_sieve_demo(cfg, ls_Q, ls_N, ls_M);
        return kUsage;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const DomainError& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kUsage;
    } catch (const ResourceError& e) {
        std::cerr << "resource error: " << e.what() << "\n";
        return kResource;
    } catch (const FormatError& e) {
        std::cerr << "cache error: " << e.what() << "\n";
        return kResource;
    } catch (const VersionError& e) {
        std::cerr << "cache error: " << e.what() << "\n";
        return kResource;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kResource;
    } catch (const std::bad_alloc&) {
        std::cerr << "out of memory\n";
        return kResource;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kAssertionFailed;
    }
}
