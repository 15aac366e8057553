#include "bvlab/ap_stats.hpp"

#include "bvlab/error.hpp"
#include "bvlab/parallel.hpp"
#include "bvlab/summation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <set>

namespace bvlab {

namespace {

double inv_log(double t) { return 1.0 / std::log(t); }

double simpson_step(double a, double b, double fa, double fm, double fb, double whole, double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = inv_log(lm);
    const double frm = inv_log(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    return simpson_step(a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           simpson_step(m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

u64 floor_u64(double y) { return static_cast<u64>(std::floor(y)); }

bool in_class(u64 p, u64 q, u64 a) { return p % q == a; }

}  // namespace

double inverse_log_integral(double a, double b, double rel_tol) {
    if (!(a >= 2.0) || !(b >= a)) throw DomainError("inverse_log_integral needs 2 <= a <= b");
    if (b == a) return 0.0;
    const double fa = inv_log(a);
    const double fb = inv_log(b);
    const double fm = inv_log(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // (b - a) / log b is a lower bound for the integral, so the tolerance is
    // never looser than rel_tol relative to the true value.
    const double eps = rel_tol * (b - a) * fb;
    return simpson_step(a, b, fa, fm, fb, whole, eps, 50);
}

double logarithmic_integral(double x, double rel_tol) {
    if (!(x >= 2.0)) throw DomainError("logarithmic integral needs x >= 2");
    if (!(rel_tol > 0.0 && rel_tol <= 1e-6)) throw DomainError("rel_tol must lie in (0, 1e-6]");
    return inverse_log_integral(2.0, x, rel_tol);
}

LiTable::LiTable(const PrimeStore& store, double upto) {
    auto primes = upto < 0 ? store.primes() : store.primes_upto(floor_u64(std::min(upto, double(store.limit()))));
    values_.resize(primes.size());
    CompensatedSum acc;
    for (std::size_t k = 0; k < primes.size(); ++k) {
        if (k > 0) acc += inverse_log_integral(primes[k - 1], primes[k], 1e-14);
        values_[k] = acc.value();
    }
}

u64 count_primes_in_ap(const PrimeStore& store, double y, u64 q, i64 a) {
    if (q == 0) throw DomainError("modulus must be positive");
    if (y > static_cast<double>(store.limit()))
        throw OutOfRangeError("pi(y; q, a) requested beyond sieve limit");
    if (!(y >= 0.0)) throw DomainError("y must be non-negative");
    const u64 r = reduce_mod(a, q);
    u64 count = 0;
    for (u64 p : store.primes_upto(floor_u64(y)))
        if (in_class(p, q, r)) ++count;
    return count;
}

const char* to_string(JumpSide side) { return side == JumpSide::at_jump ? "at-jump" : "pre-jump"; }

double ap_error(const PrimeStore& store, double y, u64 q, i64 a, JumpSide side) {
    if (!(y >= 2.0)) throw DomainError("F(y; q, a) needs y >= 2");
    u64 count = count_primes_in_ap(store, y, q, a);
    if (side == JumpSide::pre_jump && std::floor(y) == y) {
        const u64 n = floor_u64(y);
        if (store.is_prime(n) && in_class(n, q, reduce_mod(a, q))) --count;
    }
    return static_cast<double>(count) - logarithmic_integral(y) / static_cast<double>(totient(q));
}

ApErrorRecord sup_error(const PrimeStore& store, const LiTable& li, double x, const ModulusProfile& profile) {
    if (!(x >= 2.0)) throw DomainError("F*(x, q) needs x >= 2");
    if (x > static_cast<double>(store.limit())) throw OutOfRangeError("F*(x, q) requested beyond sieve limit");
    const u64 s = profile.s;
    if (s == 0) throw DomainError("modulus must be positive");

    const auto primes = store.primes_upto(floor_u64(x));
    if (li.size() < primes.size()) throw DomainError("Li table does not cover x");
    const auto li_at = li.values();
    const double phi = static_cast<double>(profile.totient);

    ApErrorRecord best;
    best.modulus = s;
    best.value = -1.0;
    auto consider = [&](u64 a, double y, double err, JumpSide side) {
        if (std::abs(err) > best.value) {
            best.best_residue = a;
            best.best_point = y;
            best.value = std::abs(err);
            best.error = err;
            best.side = side;
        }
    };

    // y = 2: Li(2) = 0, and only the class of 2 has a prime.
    const u64 two_class = 2 % s;
    for (u64 a = 0; a < s; ++a)
        if (std::gcd(a, s) == 1) consider(a, 2.0, a == two_class ? 1.0 : 0.0, JumpSide::at_jump);

    std::vector<u64> counts(s, 0);
    std::vector<char> unit(s);
    for (u64 a = 0; a < s; ++a) unit[a] = std::gcd(a, s) == 1;
    if (!primes.empty() && unit[two_class]) counts[two_class] = 1;
    const bool narrow = s <= 0xFFFFFFFFu;
    for (std::size_t k = 1; k < primes.size(); ++k) {
        const u64 p = primes[k];
        const u64 a = narrow ? std::uint32_t(primes[k]) % std::uint32_t(s) : p % s;
        if (!unit[a]) continue;
        const double main = li_at[k] / phi;
        consider(a, double(p), double(counts[a]) - main, JumpSide::pre_jump);
        ++counts[a];
        consider(a, double(p), double(counts[a]) - main, JumpSide::at_jump);
    }

    const double main_x = logarithmic_integral(x) / phi;
    for (u64 a = 0; a < s; ++a)
        if (std::gcd(a, s) == 1) consider(a, x, double(counts[a]) - main_x, JumpSide::at_jump);

    if (best.value < 0.0) throw Error("no coprime residue class");
    return best;
}

ApErrorRecord sup_error(const PrimeStore& store, double x, const ModulusProfile& profile) {
    return sup_error(store, LiTable(store, x), x, profile);
}

// ---- families ----------------------------------------------------------------

const char* to_string(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::prime_powers: return "prime-powers";
        case FamilyKind::coprime_radical_bounded: return "coprime-radical";
        case FamilyKind::explicit_list: return "explicit";
    }
    return "?";
}

FamilyKind parse_family_kind(const std::string& name) {
    if (name == "prime-powers") return FamilyKind::prime_powers;
    if (name == "coprime-radical") return FamilyKind::coprime_radical_bounded;
    if (name == "explicit") return FamilyKind::explicit_list;
    throw DomainError("unknown family kind '" + name + "'");
}

FamilyBounds default_bounds(double x, double C, double radical_exponent, double epsilon) {
    FamilyBounds b;
    b.prime_bound = std::pow(std::log(x), C);
    b.radical_bound = std::pow(x, radical_exponent);
    b.epsilon = epsilon;
    return b;
}

ModuliFamily generate_family(double x, double Q, FamilyKind kind, const FamilyBounds& bounds) {
    if (!(Q >= 0.0)) throw DomainError("Q must be non-negative");
    if (!(x >= 2.0)) throw DomainError("x must be at least 2");
    ModuliFamily family;
    family.kind = kind;
    family.Q = Q;
    family.prime_bound = bounds.prime_bound;
    family.radical_bound = bounds.radical_bound;

    const u64 lo = floor_u64(Q) + 1;
    const u64 hi = floor_u64(2.0 * Q);
    std::vector<u64> chosen;

    switch (kind) {
        case FamilyKind::prime_powers: {
            const u64 pmax = std::min<u64>(hi, floor_u64(std::min(bounds.prime_bound, 1e18)));
            std::vector<bool> composite(pmax + 1, false);
            for (u64 p = 2; p <= pmax; ++p) {
                if (composite[p]) continue;
                for (u64 m = p * p; m <= pmax; m += p) composite[m] = true;
                u64 pk = p;
                while (pk < lo) pk *= p;
                if (pk <= hi) chosen.push_back(pk);
            }
            std::sort(chosen.begin(), chosen.end());
            break;
        }
        case FamilyKind::coprime_radical_bounded: {
            std::set<u64> used;
            for (u64 s = lo; s <= hi; ++s) {
                const auto f = factorize(s);
                if (static_cast<double>(radical(f)) > bounds.radical_bound) continue;
                const bool clash = std::any_of(f.factors.begin(), f.factors.end(),
                                               [&](const PrimePower& pp) { return used.count(pp.p) != 0; });
                if (clash) continue;
                for (const auto& pp : f.factors) used.insert(pp.p);
                chosen.push_back(s);
            }
            break;
        }
        case FamilyKind::explicit_list: {
            chosen = bounds.explicit_members;
            for (std::size_t i = 0; i < chosen.size(); ++i) {
                if (chosen[i] < lo || chosen[i] > hi)
                    throw DomainError("explicit member " + std::to_string(chosen[i]) + " outside (Q, 2Q]");
                for (std::size_t j = 0; j < i; ++j)
                    if (std::gcd(chosen[i], chosen[j]) != 1)
                        throw DomainError("explicit members " + std::to_string(chosen[j]) + " and " +
                                          std::to_string(chosen[i]) + " are not coprime");
            }
            break;
        }
    }

    for (u64 s : chosen) family.members.push_back(make_profile(s));
    if (family.members.empty()) family.warnings.push_back("empty family: no admissible modulus in (Q, 2Q]");
    if (Q < std::pow(x, bounds.epsilon)) family.warnings.push_back("Q is below x^epsilon");
    if (Q > std::cbrt(x)) family.warnings.push_back("Q exceeds x^(1/3)");
    return family;
}

// ---- census --------------------------------------------------------------------

CensusData compute_census_data(const PrimeStore& store, const LiTable& li, double x,
                               const ModuliFamily& family, unsigned threads) {
    const std::size_t n = family.members.size();
    CensusData data;
    data.members.resize(n);
    data.radicals.resize(n);
    data.radical_errors.resize(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const auto& profile = family.members[i];
        data.members[i] = sup_error(store, li, x, profile);
        if (profile.radical == profile.s) {
            data.radicals[i] = data.members[i];
        } else {
            data.radicals[i] = sup_error(store, li, x, make_profile(profile.radical));
        }
        // d_q is taken as e_q reduced mod q; it is the only residue forced by
        // e_q = d_q (mod q).
        const auto& m = data.members[i];
        const u64 d = m.best_residue % profile.radical;
        data.radical_errors[i] = ap_error(store, m.best_point, profile.radical, static_cast<i64>(d), m.side);
    });
    return data;
}

CensusReport classify_census(const PrimeStore& store, double x, const ModuliFamily& family, double A,
                             const CensusData& data) {
    CensusReport report;
    report.family = family;
    report.x = x;
    report.A = A;
    report.log_x = std::log(x);
    report.pi_x = store.count_primes(x);
    const double L = report.log_x;
    const double pi_x = static_cast<double>(report.pi_x);

    std::size_t admitted = 0;
    for (std::size_t i = 0; i < family.members.size(); ++i) {
        const auto& profile = family.members[i];
        CensusRow row;
        row.profile = profile;
        row.record = data.members[i];
        row.threshold = pi_x / (static_cast<double>(profile.totient) * std::pow(L, A));
        row.exceptional = row.record.value > row.threshold;
        report.exceptional_count += row.exceptional ? 1 : 0;
        report.rows.push_back(row);

        RadicalRow rad;
        rad.s = profile.s;
        rad.q = profile.radical;
        rad.phi_q = totient(factorize(profile.radical));
        rad.record = data.radicals[i];
        rad.threshold = pi_x / (static_cast<double>(rad.phi_q) * std::pow(L, A + 2.0));
        rad.admitted = rad.record.value <= rad.threshold;
        if (rad.admitted) {
            ++admitted;
            const double lambda = static_cast<double>(rad.q) / static_cast<double>(profile.s);
            report.combination.sum_sq_sparse += row.record.error * row.record.error;
            const double scaled = lambda * data.radical_errors[i];
            report.combination.sum_sq_radical += scaled * scaled;
        } else {
            ++report.discarded_count;
        }
        report.radicals.push_back(rad);
    }

    const double Q = family.Q;
    report.bounds.baker = std::pow(L, 34.0 + A);
    report.bounds.prime_power = std::pow(L, 14.0 + 2.0 * A);
    report.bounds.discarded = std::pow(L, 36.0 + A);
    report.bounds.sparse = report.bounds.discarded + report.bounds.prime_power * (1.0 + Q * Q / std::sqrt(x));

    const double base = pi_x * pi_x * static_cast<double>(admitted) / (Q * Q);
    report.combination.tail_b_a_plus_1 = base / std::pow(L, 2.0 * (A + 1.0));
    report.combination.tail_b_a_plus_2 = base / std::pow(L, 2.0 * (A + 2.0));
    return report;
}

CensusReport exceptional_census(const PrimeStore& store, double x, const ModuliFamily& family, double A,
                                unsigned threads) {
    const LiTable li(store, x);
    return classify_census(store, x, family, A, compute_census_data(store, li, x, family, threads));
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

void write_census_csv(std::ostream& out, const CensusReport& report) {
    out << "s,q,phi_s,best_a,best_y,F_star,threshold,exceptional\n";
    for (const auto& row : report.rows) {
        out << row.profile.s << ',' << row.profile.radical << ',' << row.profile.totient << ','
            << row.record.best_residue << ',' << format_double(row.record.best_point) << ','
            << format_double(row.record.value) << ',' << format_double(row.threshold) << ','
            << (row.exceptional ? 1 : 0) << '\n';
    }
}

nlohmann::json census_to_json(const CensusReport& report) {
    using nlohmann::json;
    json rows = json::array();
    for (const auto& row : report.rows) {
        rows.push_back({{"s", row.profile.s},
                        {"q", row.profile.radical},
                        {"phi_s", row.profile.totient},
                        {"best_a", row.record.best_residue},
                        {"best_y", row.record.best_point},
                        {"F_star", row.record.value},
                        {"threshold", row.threshold},
                        {"exceptional", row.exceptional ? 1 : 0}});
    }
    json radicals = json::array();
    for (const auto& r : report.radicals) {
        radicals.push_back({{"s", r.s},
                            {"q", r.q},
                            {"phi_q", r.phi_q},
                            {"best_a", r.record.best_residue},
                            {"best_y", r.record.best_point},
                            {"F_star", r.record.value},
                            {"threshold", r.threshold},
                            {"admitted", r.admitted ? 1 : 0}});
    }
    const double n_exc = static_cast<double>(report.exceptional_count);
    json out;
    out["x"] = report.x;
    out["A"] = report.A;
    out["log_x"] = report.log_x;
    out["pi_x"] = report.pi_x;
    out["Q"] = report.family.Q;
    out["kind"] = to_string(report.family.kind);
    out["family_size"] = report.family_size();
    out["exceptional_count"] = report.exceptional_count;
    out["discarded_count"] = report.discarded_count;
    out["rows"] = std::move(rows);
    out["radicals"] = std::move(radicals);
    out["bounds"] = {{"baker", report.bounds.baker},
                     {"prime_power", report.bounds.prime_power},
                     {"sparse", report.bounds.sparse},
                     {"discarded", report.bounds.discarded}};
    out["ratios"] = {{"exceptional_over_baker", n_exc / report.bounds.baker},
                     {"exceptional_over_prime_power", n_exc / report.bounds.prime_power},
                     {"exceptional_over_sparse", n_exc / report.bounds.sparse},
                     {"discarded_over_bound", double(report.discarded_count) / report.bounds.discarded}};
    out["combination"] = {{"sum_sq_sparse", report.combination.sum_sq_sparse},
                          {"sum_sq_radical", report.combination.sum_sq_radical},
                          {"tail_b_a_plus_1", report.combination.tail_b_a_plus_1},
                          {"tail_b_a_plus_2", report.combination.tail_b_a_plus_2},
                          {"note", "error exponent 2B is undefined in the source; B = A+1 and B = A+2 both shown"}};
    out["warnings"] = report.family.warnings;
    return out;
}

}  // namespace bvlab
