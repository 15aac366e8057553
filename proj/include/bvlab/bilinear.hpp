#pragma once

#include "bvlab/analytic.hpp"
#include "bvlab/arith.hpp"

#include <complex>
#include <functional>
#include <vector>

#include <json.hpp>

namespace bvlab {

/// A coefficient sequence n -> c_n. Generators used in experiments must be
/// pure functions of n so that evaluation order never matters.
using Coefficients = std::function<std::complex<double>(u64)>;

/// Stateless 64-bit mix of (seed, stream, n).
u64 coefficient_hash(u64 seed, u64 stream, u64 n);

Coefficients zero_coefficients();
Coefficients constant_coefficients(std::complex<double> value);
/// Uniform points on the unit circle.
Coefficients random_unit_coefficients(u64 seed, u64 stream);
/// Independent signs +-1.
Coefficients random_sign_coefficients(u64 seed, u64 stream);
/// Only n0 carries value; everything else is 0.
Coefficients single_coefficient(u64 n0, std::complex<double> value);

/// c_r = 1 for r = 1 and for primes r > x^epsilon, else 0.
Coefficients rough_sieve_coefficients(double x, double epsilon);

/// Throws DomainError if some r <= r_max with c_r != 0 has a prime factor
/// <= x^epsilon.
void check_sieve_support(const Coefficients& c, double x, double epsilon, u64 r_max);

/// floor(n^(e.num / e.den)) computed exactly with integer comparisons.
u64 floor_rational_power(u64 n, Rational e);

struct BilinearConfig {
    double x = 0.0;
    double y = 0.0;  // cap on n * m, y <= x
    ModulusProfile profile;
    i64 e = 1;  // residue modulo s
    i64 d = 1;  // residue modulo q, d = e (mod q)
    Rational lambda;  // q / s
    Rational alpha{1, 3};
    Rational beta{1, 3};
    double M = 0.0;  // type-I range, 2 sqrt(x) + 1 by default
    double epsilon = 0.01;

    u64 s() const { return profile.s; }
    u64 q() const { return profile.radical; }
    /// Integer m-range (lo, hi] of the type-II sum: x^alpha < m <= x^(alpha+beta).
    u64 type_two_low() const;
    u64 type_two_high() const;
};

/// Validates gcd(e, s) = 1, d = e (mod q), 3 <= x, 1 <= y <= x, and sets
/// lambda = q/s and M = 2 sqrt(x) + 1.
BilinearConfig make_bilinear_config(double x, double y, const ModulusProfile& profile, i64 e, i64 d);

/// Sum_{m <= M, (m,q) = 1} a_m (#{n <= y/m : n = e/m (s)} - (q/s) #{n <= y/m : n = d/m (q)}),
/// inner counts exact.
std::complex<double> type_one_difference(const BilinearConfig& cfg, const Coefficients& a);

/// Sum(K) of the block K < m <= K_end with coprime m and inner sums over n <= y/m.
std::complex<double> block_difference(const BilinearConfig& cfg, const Coefficients& a, const Coefficients& b,
                                      double K, double K_end);

/// The type-II difference over x^alpha < m <= x^(alpha+beta).
std::complex<double> type_two_difference(const BilinearConfig& cfg, const Coefficients& a, const Coefficients& b);

struct DyadicBlock {
    double K;
    double K_end;  // min(2K, x^(alpha+beta))
};

/// Blocks K_0 = x^alpha, K_{i+1} = 2 K_i covering (x^alpha, x^(alpha+beta)].
std::vector<DyadicBlock> dyadic_blocks(const BilinearConfig& cfg);

struct DispersionBreakdown {
    double K = 0.0;
    std::complex<double> z;
    double inner_length = 0.0;  // x / K
    double sigma_prime = 0.0;
    std::complex<double> sigma1, sigma2, sigma3, sigma4;
    double residual = 0.0;
    // (K / phi(s^2)) sum over characters mod s not induced from q of |sum b_n(z) chi(n)|^2,
    // equal to the main terms with inner counts smoothed to K/s and K/q.
    double character_form = 0.0;
    double character_gap = 0.0;  // sigma_prime - character_form
    double gap_scale = 0.0;      // L^2 / s

    bool identity_holds(double tol = 1e-9) const { return residual <= tol * (1.0 + sigma_prime); }
};

/// Expands sum_{K < m <= 2K, (m,q) = 1} |sum_{n <= L, n = e/m (s)} b_n(z) - (q/s) sum_{n <= L, n = d/m (q)} b_n(z)|^2
/// with b_n(z) = b_n n^-z into its four dispersion terms using exact counts of m.
DispersionBreakdown dispersion_decompose(const BilinearConfig& cfg, double K, std::complex<double> z,
                                         const Coefficients& b);

struct PerronBlockReport {
    double K = 0.0;
    double K_end = 0.0;
    double c = 0.0;  // 1 / log L
    double T = 0.0;  // L log L
    std::complex<double> direct;
    std::complex<double> contour;
    double error = 0.0;
    double weighted_square = 0.0;  // int |Sigma(K, c+it)|^2 / |c+it| dt
    double weight = 0.0;           // int dt / |c+it|
    double majorant = 0.0;         // weight * weighted_square / (4 pi^2) + K^2
    double reference_budget = 0.0;  // log x * weighted_square + K^2
    double calibration = 1.0;
    double ratio = 0.0;            // |direct|^2 / (calibration * majorant)
    std::size_t nodes = 0;
};

/// Sum(K) directly and through the truncated contour integral of Sum(K, z),
/// with the Cauchy-Schwarz majorant of |Sum(K)|^2.
PerronBlockReport perron_block(const BilinearConfig& cfg, double K, double K_end, const Coefficients& a,
                               const Coefficients& b, const QuadratureOptions& options = {},
                               double calibration = 1.0);

/// (x^2/Q^2 + x^{3/2} + x^{5/3} cardQ / Q + x cardQ) (log x)^4.
double y_budget(double x, double Q, u64 cardQ);

struct AveragedSquareReport {
    double K = 0.0;
    double Q = 0.0;
    std::size_t family_size = 0;
    double lhs = 0.0;
    double bound1 = 0.0;
    double bound2 = 0.0;
    bool uses_bound1 = true;  // K <= sqrt(x)
    double ratio1 = 0.0;
    double ratio2 = 0.0;
    double ratio_selected = 0.0;
};

/// sum over the configs of |Sum_q(K)|^2 on the block (K, 2K], with both
/// bound shapes at unit constants. All configs must share x.
AveragedSquareReport averaged_square_sum(const std::vector<BilinearConfig>& configs, double K, double Q,
                                         const Coefficients& a, const Coefficients& b, unsigned threads = 1);

nlohmann::json dispersion_to_json(const BilinearConfig& cfg, double Q, const DispersionBreakdown& d);

}  // namespace bvlab
