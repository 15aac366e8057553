#pragma once

#include "bvlab/arith.hpp"

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace bvlab {

/// D(t) = sum_j coef_j * exp(i t freq_j).
struct ExponentialSum {
    std::vector<double> freq;
    std::vector<std::complex<double>> coef;

    void add(double f, std::complex<double> c) {
        freq.push_back(f);
        coef.push_back(c);
    }
    std::size_t size() const { return freq.size(); }
    bool empty() const { return freq.empty(); }
    double max_abs_freq() const;
    std::complex<double> operator()(double t) const;
};

struct QuadratureOptions {
    // Panel width in the uniform region is oscillation_step / max |freq|.
    double oscillation_step = 3.0;
    // A second pass at 2/3 of the panel width must agree to this tolerance,
    // relative to 1 + |integral|.
    double rel_tol = 1e-7;
    bool verify = true;
    std::size_t max_nodes = std::size_t{1} << 26;
};

struct ContourResult {
    std::complex<double> integral;  // (1/2pi) int_{-T}^{T} D(t) / (c + it) dt
    double weighted_square = 0.0;   // int_{-T}^{T} |D(t)|^2 / |c + it| dt
    std::size_t nodes = 0;
    double refinement_delta = 0.0;  // |first pass - second pass|, 0 when not verified
};

/// Composite 16-point Gauss-Legendre on [-T, T]. Panels grow geometrically
/// from width c/2 at the origin until they reach the oscillation-limited
/// width, then stay uniform. Throws NumericalError when the refinement pass
/// disagrees or the node budget is exceeded.
ContourResult contour_integral(const ExponentialSum& d, double c, double T, const QuadratureOptions& options = {});

/// int_{-T}^{T} dt / |c + it| = 2 asinh(T / c).
double contour_weight(double c, double T);

using CoefficientFn = std::function<std::complex<double>(u64)>;

struct PerronInputs {
    double N = 2.5;
    double c = 0.5;
    double T = 100.0;
    // Finite support: c_n for 1 <= n <= support.
    std::vector<std::complex<double>> coefficients;  // index 0 holds c_1
    double calibration = 10.0;
};

struct PerronTrial {
    double N = 0.0;
    double c = 0.0;
    double T = 0.0;
    std::size_t support = 0;
    std::complex<double> direct;   // sum_{n <= N} c_n
    std::complex<double> contour;  // truncated Perron integral
    double deviation = 0.0;
    double series_term = 0.0;      // N^c / T * sum |c_n| n^-c
    double boundary_term = 0.0;    // C_N (1 + N log N / T)
    double C_N = 0.0;
    double budget = 0.0;           // series_term + boundary_term
    double calibration = 10.0;
    std::size_t nodes = 0;

    bool within_budget() const { return deviation <= calibration * budget; }
};

PerronTrial perron_truncated(const PerronInputs& in, const QuadratureOptions& options = {});

struct LargeSieveTrial {
    u64 Q = 1;
    i64 M = 0;
    u64 N = 1;
    std::vector<std::complex<double>> coefficients;  // a_{M+1}, ..., a_{M+N}
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;

    /// The inequality is a theorem; only float slack is allowed.
    bool holds() const { return lhs <= rhs * (1.0 + 1e-9) + 1e-12; }
};

/// sum_{r <= Q} r/phi(r) sum*_{chi mod r} |sum_n a_n chi(n)|^2 against
/// (Q^2 + N - 1) sum |a_n|^2. Requires Q, N >= 1 and coefficients.size() == N.
LargeSieveTrial large_sieve_sides(u64 Q, i64 M, std::vector<std::complex<double>> coefficients);

nlohmann::json to_json(const PerronTrial& t);
nlohmann::json to_json(const LargeSieveTrial& t);

/// Appends one compact JSON object per line. Throws ResourceError on I/O failure.
void append_jsonl(const std::string& path, const nlohmann::json& record);

}  // namespace bvlab
