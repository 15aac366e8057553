#include "bvlab/analytic.hpp"

#include "bvlab/characters.hpp"
#include "bvlab/error.hpp"
#include "bvlab/summation.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

namespace bvlab {

namespace {

constexpr int kGaussPoints = 16;

struct GaussRule {
    std::array<double, kGaussPoints> node{};    // on [-1, 1]
    std::array<double, kGaussPoints> weight{};
};

// Newton iteration on P_16 from the Chebyshev-like initial guesses.
const GaussRule& gauss_rule() {
    static const GaussRule rule = [] {
        GaussRule g;
        constexpr int n = kGaussPoints;
        for (int i = 0; i < n; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            g.node[i] = x;
            g.weight[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        return g;
    }();
    return rule;
}

struct Panel {
    double a;
    double b;
};

struct PassResult {
    std::complex<double> integral;
    double weighted_square = 0.0;
    std::size_t nodes = 0;
};

// Breakpoints on [0, T]: geometric from c/2 up to width h, then uniform.
std::vector<Panel> graded_panels(double c, double T, double h, double& uniform_start) {
    std::vector<Panel> out;
    double a = 0.0;
    double width = std::min(c / 2.0, T);
    while (a < T && width < h) {
        const double b = std::min(T, a + width);
        out.push_back({a, b});
        a = b;
        width = a;  // doubles the distance from the origin
    }
    uniform_start = a;
    return out;
}

PassResult run_pass(const ExponentialSum& d, double c, double T, double h, std::size_t max_nodes) {
    const GaussRule& g = gauss_rule();
    const std::size_t terms = d.size();
    double t0 = 0.0;
    const auto graded = graded_panels(c, T, h, t0);
    const std::size_t uniform = t0 < T ? static_cast<std::size_t>(std::ceil((T - t0) / h)) : 0;
    const std::size_t nodes = 2 * kGaussPoints * (graded.size() + uniform);
    if (nodes > max_nodes) throw NumericalError("contour quadrature exceeds the node budget", nodes);

    ComplexSum integral;
    CompensatedSum square;
    std::array<std::complex<double>, kGaussPoints> pos{}, neg{};

    auto flush = [&](double a, double w) {
        for (int k = 0; k < kGaussPoints; ++k) {
            const double t = a + 0.5 * w * (1.0 + g.node[k]);
            const double wt = 0.5 * w * g.weight[k];
            const std::complex<double> z{c, t};
            const double mod = std::abs(z);
            integral += wt * (pos[k] / z + neg[k] / std::conj(z));
            square += wt * (std::norm(pos[k]) + std::norm(neg[k])) / mod;
        }
    };

    for (const auto& p : graded) {
        const double w = p.b - p.a;
        pos.fill({});
        neg.fill({});
        for (int k = 0; k < kGaussPoints; ++k) {
            const double t = p.a + 0.5 * w * (1.0 + g.node[k]);
            for (std::size_t j = 0; j < terms; ++j) {
                const auto phase = std::polar(1.0, t * d.freq[j]);
                pos[k] += d.coef[j] * phase;
                neg[k] += d.coef[j] * std::conj(phase);
            }
        }
        flush(p.a, w);
    }

    if (uniform > 0) {
        const double w = (T - t0) / static_cast<double>(uniform);
        std::vector<std::complex<double>> twiddle(terms * kGaussPoints), step(terms), base(terms);
        for (std::size_t j = 0; j < terms; ++j) {
            for (int k = 0; k < kGaussPoints; ++k)
                twiddle[j * kGaussPoints + k] = std::polar(1.0, 0.5 * w * (1.0 + g.node[k]) * d.freq[j]);
            step[j] = std::polar(1.0, w * d.freq[j]);
        }
        constexpr std::size_t kResync = 32;
        for (std::size_t p = 0; p < uniform; ++p) {
            const double a = t0 + static_cast<double>(p) * w;
            if (p % kResync == 0)
                for (std::size_t j = 0; j < terms; ++j) base[j] = std::polar(1.0, a * d.freq[j]);
            pos.fill({});
            neg.fill({});
            for (std::size_t j = 0; j < terms; ++j) {
                const std::complex<double> b = base[j];
                const std::complex<double> cf = d.coef[j];
                const std::complex<double>* tw = &twiddle[j * kGaussPoints];
                for (int k = 0; k < kGaussPoints; ++k) {
                    const std::complex<double> phase = b * tw[k];
                    pos[k] += cf * phase;
                    neg[k] += cf * std::conj(phase);
                }
                base[j] = b * step[j];
            }
            flush(a, w);
        }
    }

    return {integral.value() / (2.0 * std::numbers::pi), square.value(), nodes};
}

}  // namespace

double ExponentialSum::max_abs_freq() const {
    double m = 0.0;
    for (double f : freq) m = std::max(m, std::abs(f));
    return m;
}

std::complex<double> ExponentialSum::operator()(double t) const {
    ComplexSum s;
    for (std::size_t j = 0; j < freq.size(); ++j) s += coef[j] * std::polar(1.0, t * freq[j]);
    return s.value();
}

double contour_weight(double c, double T) { return 2.0 * std::asinh(T / c); }

ContourResult contour_integral(const ExponentialSum& d, double c, double T, const QuadratureOptions& options) {
    if (!(c > 0.0) || !(T > 0.0)) throw DomainError("contour needs c > 0 and T > 0");
    if (d.freq.size() != d.coef.size()) throw DomainError("exponential sum has mismatched arrays");
    if (d.empty()) return {};

    const double omega = d.max_abs_freq();
    const double h = omega > 0.0 ? options.oscillation_step / omega : std::numeric_limits<double>::infinity();
    const PassResult coarse = run_pass(d, c, T, h, options.max_nodes);
    ContourResult out{coarse.integral, coarse.weighted_square, coarse.nodes, 0.0};
    if (!options.verify) return out;

    const PassResult fine = run_pass(d, c, T, h * (2.0 / 3.0), options.max_nodes);
    out = {fine.integral, fine.weighted_square, coarse.nodes + fine.nodes, std::abs(fine.integral - coarse.integral)};
    const double square_delta = std::abs(fine.weighted_square - coarse.weighted_square);
    if (out.refinement_delta > options.rel_tol * (1.0 + std::abs(fine.integral)) ||
        square_delta > options.rel_tol * (1.0 + fine.weighted_square))
        throw NumericalError("contour quadrature did not converge", out.nodes);
    return out;
}

PerronTrial perron_truncated(const PerronInputs& in, const QuadratureOptions& options) {
    if (!(in.N >= 2.0) || !(in.c > 0.0) || !(in.T >= 2.0))
        throw DomainError("Perron trial needs N >= 2, c > 0, T >= 2");

    PerronTrial out;
    out.N = in.N;
    out.c = in.c;
    out.T = in.T;
    out.support = in.coefficients.size();
    out.calibration = in.calibration;

    ExponentialSum d;
    ComplexSum direct;
    CompensatedSum abs_series;
    for (std::size_t i = 0; i < in.coefficients.size(); ++i) {
        const auto cn = in.coefficients[i];
        if (cn == std::complex<double>{}) continue;
        const double n = static_cast<double>(i + 1);
        if (n <= in.N) direct += cn;
        abs_series += std::abs(cn) * std::pow(n, -in.c);
        const double u = std::log(in.N / n);
        d.add(u, cn * std::exp(in.c * u));
        if (n >= 0.75 * in.N && n <= 1.25 * in.N) out.C_N = std::max(out.C_N, std::abs(cn));
    }
    out.direct = direct.value();

    const ContourResult r = contour_integral(d, in.c, in.T, options);
    out.contour = r.integral;
    out.nodes = r.nodes;
    out.deviation = std::abs(out.direct - out.contour);
    out.series_term = std::pow(in.N, in.c) / in.T * abs_series.value();
    out.boundary_term = out.C_N * (1.0 + in.N * std::log(in.N) / in.T);
    out.budget = out.series_term + out.boundary_term;
    return out;
}

LargeSieveTrial large_sieve_sides(u64 Q, i64 M, std::vector<std::complex<double>> coefficients) {
    if (Q < 1) throw DomainError("large sieve needs Q >= 1");
    if (coefficients.empty()) throw DomainError("large sieve needs N >= 1");

    LargeSieveTrial out;
    out.Q = Q;
    out.M = M;
    out.N = coefficients.size();
    out.coefficients = std::move(coefficients);

    CompensatedSum energy;
    for (const auto& a : out.coefficients) energy += std::norm(a);

    CompensatedSum lhs;
    for (u64 r = 1; r <= Q; ++r) {
        const auto group = build_character_group(r);
        const double weight = static_cast<double>(r) / static_cast<double>(group->order());
        // sum_n a_n chi(n) = sum over residues of chi(residue) * (a_n summed over that residue)
        std::vector<std::complex<double>> by_residue(r);
        for (u64 i = 0; i < out.N; ++i)
            by_residue[reduce_mod(M + static_cast<i64>(i) + 1, r)] += out.coefficients[i];
        for (const auto& chi : group->characters()) {
            if (!chi.is_primitive()) continue;
            const auto table = chi.value_table();
            ComplexSum s;
            for (u64 a = 0; a < r; ++a)
                if (by_residue[a] != std::complex<double>{}) s += table[a] * by_residue[a];
            lhs += weight * std::norm(s.value());
        }
    }
    out.lhs = lhs.value();
    out.rhs = (static_cast<double>(Q) * static_cast<double>(Q) + static_cast<double>(out.N) - 1.0) * energy.value();
    out.ratio = out.rhs > 0.0 ? out.lhs / out.rhs : 0.0;
    return out;
}

namespace {

nlohmann::json complex_json(std::complex<double> z) { return nlohmann::json::array({z.real(), z.imag()}); }

}  // namespace

nlohmann::json to_json(const PerronTrial& t) {
    return {{"kind", "perron"},
            {"N", t.N},
            {"c", t.c},
            {"T", t.T},
            {"support", t.support},
            {"direct", complex_json(t.direct)},
            {"contour", complex_json(t.contour)},
            {"deviation", t.deviation},
            {"series_term", t.series_term},
            {"boundary_term", t.boundary_term},
            {"C_N", t.C_N},
            {"budget", t.budget},
            {"calibration", t.calibration},
            {"ratio", t.budget > 0.0 ? t.deviation / t.budget : 0.0},
            {"within_budget", t.within_budget()},
            {"nodes", t.nodes}};
}

nlohmann::json to_json(const LargeSieveTrial& t) {
    nlohmann::json coeffs = nlohmann::json::array();
    for (const auto& a : t.coefficients) coeffs.push_back(complex_json(a));
    return {{"kind", "large-sieve"}, {"Q", t.Q},     {"M", t.M},         {"N", t.N},
            {"coefficients", coeffs}, {"lhs", t.lhs}, {"rhs", t.rhs},     {"ratio", t.ratio},
            {"holds", t.holds()}};
}

void append_jsonl(const std::string& path, const nlohmann::json& record) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw ResourceError("cannot open " + path + " for appending");
    out << record.dump() << '\n';
    if (!out) throw ResourceError("write to " + path + " failed");
}

}  // namespace bvlab
