#pragma once

#include "bvlab/arith.hpp"
#include "bvlab/prime_store.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace bvlab {

/// Li(x) = integral of 1/log t over [2, x], by adaptive Simpson quadrature.
/// Throws DomainError for x < 2 or rel_tol outside (0, 1e-6].
double logarithmic_integral(double x, double rel_tol = 1e-13);

/// Integral of 1/log t over [a, b] for 2 <= a <= b.
double inverse_log_integral(double a, double b, double rel_tol = 1e-13);

/// Li at every prime of a store: value(k) = Li(primes[k]), accumulated gap by
/// gap with compensated summation.
class LiTable {
public:
    LiTable() = default;
    explicit LiTable(const PrimeStore& store, double upto = -1.0);

    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }

private:
    std::vector<double> values_;
};

/// pi(y; q, a). q = 1 counts every prime.
u64 count_primes_in_ap(const PrimeStore& store, double y, u64 q, i64 a);

enum class JumpSide {
    at_jump,   // value at y itself (right-continuous)
    pre_jump,  // limit from the left at y
};

const char* to_string(JumpSide side);

struct ApErrorRecord {
    u64 modulus = 1;
    u64 best_residue = 0;
    double best_point = 2.0;
    double value = 0.0;         // F*(x, modulus) = |error|
    double error = 0.0;         // signed F(y; modulus, a) at the maximiser
    JumpSide side = JumpSide::at_jump;
};

/// F(y; q, a) = pi(y; q, a) - Li(y) / phi(q), or its left limit at y.
double ap_error(const PrimeStore& store, double y, u64 q, i64 a, JumpSide side = JumpSide::at_jump);

/// F*(x, s) = sup over real y in [2, x] of max over coprime a of |F(y; s, a)|.
///
/// For a fixed class, pi(y; s, a) is a right-continuous step function that
/// jumps only at primes p = a (mod s), and Li(y)/phi(s) is continuous and
/// increasing. Between two consecutive jumps F is therefore continuous and
/// decreasing, so |F| attains its supremum on that piece at one of the two
/// ends: the jump itself or the left limit at the next jump. Adding y = 2 and
/// y = x closes the first and last pieces. Scanning these candidates is exact.
///
/// Ties keep the smallest y, then the smallest residue.
ApErrorRecord sup_error(const PrimeStore& store, const LiTable& li, double x, const ModulusProfile& profile);
ApErrorRecord sup_error(const PrimeStore& store, double x, const ModulusProfile& profile);

// ---- moduli families -------------------------------------------------------

enum class FamilyKind { prime_powers, coprime_radical_bounded, explicit_list };

const char* to_string(FamilyKind kind);
FamilyKind parse_family_kind(const std::string& name);

struct FamilyBounds {
    double prime_bound = 0.0;     // prime-powers: p <= prime_bound
    double radical_bound = 0.0;   // coprime-radical: rad(s) <= radical_bound
    double epsilon = 0.01;        // regime check x^epsilon <= Q
    std::vector<u64> explicit_members;
};

/// prime_bound = (log x)^C, radical_bound = x^(9/40).
FamilyBounds default_bounds(double x, double C = 6.0, double radical_exponent = 9.0 / 40.0,
                            double epsilon = 0.01);

struct ModuliFamily {
    FamilyKind kind = FamilyKind::explicit_list;
    double Q = 1.0;
    std::vector<ModulusProfile> members;
    double radical_bound = 0.0;
    double prime_bound = 0.0;
    // Empty family, violated regime hypotheses, and similar non-fatal notes.
    std::vector<std::string> warnings;
};

/// Members are in (Q, 2Q] and pairwise coprime. Prime powers: for each prime
/// p <= prime_bound, the unique p^N in (Q, 2Q] when there is one. Coprime
/// radical: first-fit scan of (Q, 2Q] in increasing order.
ModuliFamily generate_family(double x, double Q, FamilyKind kind, const FamilyBounds& bounds);

// ---- exceptional-moduli census ---------------------------------------------

struct CensusRow {
    ModulusProfile profile;
    ApErrorRecord record;
    double threshold = 0.0;  // pi(x) / (phi(s) L^A)
    bool exceptional = false;
};

// Classification of q = rad(s) against pi(x) / (phi(q) L^(A+2)).
struct RadicalRow {
    u64 s = 0;
    u64 q = 0;
    u64 phi_q = 0;
    ApErrorRecord record;
    double threshold = 0.0;
    bool admitted = false;  // q belongs to the well-distributed set
};

// Reference expressions evaluated with every implicit constant set to 1.
struct BoundExpressions {
    double baker = 0.0;         // L^(34+A)
    double prime_power = 0.0;   // L^(14+2A)
    double sparse = 0.0;        // L^(36+A) + L^(14+2A) (1 + Q^2 x^(-1/2))
    double discarded = 0.0;     // L^(36+A), bound on radicals outside the admitted set
};

// Quantities around the mean-square combination step. The exponent of the
// error term there is printed as L^(2B) with B undefined; both readings,
// B = A+1 and B = A+2, are evaluated.
struct CombinationDiagnostics {
    double sum_sq_sparse = 0.0;    // sum over admitted q of |F(y_q; s, e_q)|^2
    double sum_sq_radical = 0.0;   // sum over admitted q of |(q/s) F(y_q; q, d_q)|^2
    double tail_b_a_plus_1 = 0.0;  // pi(x)^2 #Q / (Q^2 L^(2(A+1)))
    double tail_b_a_plus_2 = 0.0;  // pi(x)^2 #Q / (Q^2 L^(2(A+2)))
};

struct CensusReport {
    ModuliFamily family;
    double x = 0.0;
    double A = 0.0;
    double log_x = 0.0;
    u64 pi_x = 0;
    std::vector<CensusRow> rows;
    std::vector<RadicalRow> radicals;
    std::size_t exceptional_count = 0;
    std::size_t discarded_count = 0;  // members whose radical is not admitted
    BoundExpressions bounds;
    CombinationDiagnostics combination;

    std::size_t family_size() const { return rows.size(); }
};

/// Sup errors for the members of a family and for their radicals. Work is
/// spread over `threads`; results do not depend on the thread count.
struct CensusData {
    std::vector<ApErrorRecord> members;
    std::vector<ApErrorRecord> radicals;
    std::vector<double> radical_errors;  // F(y_s; q, e mod q) at the member's maximiser
};

CensusData compute_census_data(const PrimeStore& store, const LiTable& li, double x,
                               const ModuliFamily& family, unsigned threads = 1);

CensusReport classify_census(const PrimeStore& store, double x, const ModuliFamily& family, double A,
                             const CensusData& data);

CensusReport exceptional_census(const PrimeStore& store, double x, const ModuliFamily& family, double A,
                                unsigned threads = 1);

/// Columns s,q,phi_s,best_a,best_y,F_star,threshold,exceptional.
void write_census_csv(std::ostream& out, const CensusReport& report);
nlohmann::json census_to_json(const CensusReport& report);

/// Shortest round-trip decimal form; used for every number written to disk.
std::string format_double(double v);

}  // namespace bvlab
