#pragma once
//
// Expansions of the free boundary resolvent at the thresholds:
//
//   R_0^{+/-}(mu^4)       ~ sum_{j >= -3} mu^j       G_j^{+/-},        mu -> 0
//   R_0^{+/-}((2-mu)^4)   ~ sum_{j >= -1} mu^{j/2}   Gtilde_j^{+/-},   mu -> 0
//
// Orders j <= 0 are available in closed form. Higher orders are extracted from
// the analytic continuation of the kernel by a Cauchy integral on a circle in
// the expansion variable (mu, resp. nu = mu^{1/2}).
//

#include <bischrod/free_resolvent.hpp>
#include <bischrod/lattice.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

namespace bischrod {

enum class Threshold { zero, sixteen };

/// Closed-form G_j^{+/-}(n, m) for j in {-3, -2, -1, 0}.
inline complex coeff_zero(int j, Sign sign, int n, int m)
{
    detail::require(j >= -3 && j <= 0, "coeff_zero: order outside {-3,...,0}; use coeff_numeric");
    const double s = sign_value(sign);
    const double d = std::abs(n - m);
    switch (j)
    {
    case -3: return complex(-1.0, s) / 4.0;
    case -2: return 0.0;
    case -1: return complex(1.0, s) / 4.0 * (0.125 - 0.5 * d * d);
    default: return (d * d * d - d) / 12.0;
    }
}

/// Closed-form Gtilde_j^{+/-}(n, m) for j in {-1, 0}.
inline complex coeff_sixteen(int j, Sign sign, int n, int m)
{
    detail::require(j == -1 || j == 0, "coeff_sixteen: order outside {-1, 0}; use coeff_numeric");
    const int d = std::abs(n - m);
    const double parity = (d % 2 == 0) ? 1.0 : -1.0;
    if (j == -1)
        return complex(0.0, sign_value(sign) * parity / 32.0);
    const double r2 = std::numbers::sqrt2;
    return parity / (32.0 * r2) * (2.0 * r2 * d - std::pow(2.0 * r2 - 3.0, d));
}

struct CoefficientEstimate
{
    complex value;
    double error_estimate;
    bool available;
    int achieved_order; // highest order this extractor certifies
};

namespace detail {

inline constexpr int max_certified_order = 16;

inline double contour_radius(int d) { return std::min(0.5, 2.0 / (std::abs(d) + 1.0)); }

inline complex expansion_kernel(Threshold th, Sign sign, complex zeta, int d)
{
    return th == Threshold::zero ? free_biresolvent_analytic<double>(zeta, sign, d)
                                 : free_biresolvent_analytic_sixteen<double>(zeta, sign, d);
}

/// Laurent coefficients jmin..jmax of zeta -> kernel(zeta, d) by the trapezoid rule
/// on |zeta| = r with `points` nodes.
inline std::vector<complex> contour_coefficients(Threshold th, Sign sign, int d, int jmin, int jmax, int points,
                                                 double* max_abs = nullptr)
{
    const double r = contour_radius(d);
    std::vector<complex> samples(static_cast<std::size_t>(points));
    double peak = 0.0;
    for (int k = 0; k < points; ++k)
    {
        const complex zeta = std::polar(r, 2.0 * std::numbers::pi * (k + 0.5) / points);
        samples[static_cast<std::size_t>(k)] = expansion_kernel(th, sign, zeta, d);
        peak = std::max(peak, std::abs(samples[static_cast<std::size_t>(k)]));
    }
    if (max_abs)
        *max_abs = peak;
    std::vector<complex> out;
    for (int j = jmin; j <= jmax; ++j)
    {
        complex acc = 0.0;
        for (int k = 0; k < points; ++k)
        {
            const double phase = -2.0 * std::numbers::pi * (k + 0.5) / points * j;
            acc += samples[static_cast<std::size_t>(k)] * std::polar(1.0, phase);
        }
        out.push_back(acc / static_cast<double>(points) * std::pow(r, -j));
    }
    return out;
}

} // namespace detail

/// Expansion coefficient of any order, extracted numerically from the kernel.
inline CoefficientEstimate coeff_numeric(Threshold th, Sign sign, int j, int n, int m)
{
    const int jmin = th == Threshold::zero ? -3 : -1;
    detail::require(j >= jmin, "coeff_numeric: order below the leading singular term");
    const int d = std::abs(n - m);
    double peak = 0.0;
    const complex coarse = detail::contour_coefficients(th, sign, d, j, j, 64)[0];
    const complex fine = detail::contour_coefficients(th, sign, d, j, j, 128, &peak)[0];
    const double floor = 8.0 * std::numeric_limits<double>::epsilon() * peak * std::pow(detail::contour_radius(d), -j);
    const double err = std::abs(fine - coarse) + floor;
    const bool ok = j <= detail::max_certified_order && err <= 1e-6 * std::max(1.0, std::abs(fine));
    return {fine, err, ok, detail::max_certified_order};
}

/// Table of G_j(d) (or Gtilde_j(d)) for d = 0..dmax and j = jmin..jmax. Orders
/// with closed forms use them; the rest come from coeff_numeric's extractor.
class ExpansionTable
{
public:
    ExpansionTable(Threshold th, Sign sign, int jmax, int dmax)
        : threshold_(th), sign_(sign), jmin_(th == Threshold::zero ? -3 : -1), jmax_(jmax), dmax_(dmax)
    {
        detail::require(jmax >= jmin_, "ExpansionTable: jmax below the leading order");
        detail::require(jmax <= detail::max_certified_order, "ExpansionTable: order beyond certified range");
        const int orders = jmax_ - jmin_ + 1;
        table_.resize(static_cast<std::size_t>(orders) * (dmax + 1));
        for (int d = 0; d <= dmax; ++d)
        {
            std::vector<complex> numeric;
            const int closed_max = 0;
            if (jmax_ > closed_max)
                numeric = detail::contour_coefficients(th, sign, d, closed_max + 1, jmax_, 128);
            for (int j = jmin_; j <= jmax_; ++j)
            {
                complex value;
                if (j <= closed_max)
                    value = th == Threshold::zero ? coeff_zero(j, sign, d, 0) : coeff_sixteen(j, sign, d, 0);
                else
                    value = numeric[static_cast<std::size_t>(j - closed_max - 1)];
                at(j, d) = value;
            }
        }
    }

    Threshold threshold() const { return threshold_; }
    Sign sign() const { return sign_; }
    int min_order() const { return jmin_; }
    int max_order() const { return jmax_; }

    complex operator()(int j, int d) const { return table_[index(j, std::abs(d))]; }

    /// Truncated series through order `order` at distance d, for threshold distance mu.
    complex partial_sum(double mu, int d, int order) const
    {
        detail::require(order <= jmax_, "ExpansionTable::partial_sum: order beyond table");
        const double zeta = threshold_ == Threshold::zero ? mu : std::sqrt(mu);
        complex acc = 0.0;
        for (int j = jmin_; j <= order; ++j)
            acc += std::pow(zeta, j) * (*this)(j, d);
        return acc;
    }

private:
    std::size_t index(int j, int d) const
    {
        return static_cast<std::size_t>(j - jmin_) * (dmax_ + 1) + static_cast<std::size_t>(d);
    }
    complex& at(int j, int d) { return table_[index(j, d)]; }

    Threshold threshold_;
    Sign sign_;
    int jmin_, jmax_, dmax_;
    std::vector<complex> table_;
};

/// The free boundary kernel at threshold distance mu: R_0(mu^4) or R_0((2-mu)^4).
inline complex threshold_kernel(Threshold th, Sign sign, double mu, int d)
{
    return th == Threshold::zero ? free_biresolvent_boundary(mu, sign, d)
                                 : free_biresolvent_boundary(2.0 - mu, sign, d);
}

/// Remainder exponent claimed for the order-N truncation.
inline double remainder_exponent(Threshold th, int order)
{
    return th == Threshold::zero ? order + 1.0 : 0.5 * (order + 1.0);
}

/// Smallest weight s admitted for the order-N truncation (strict lower bound).
inline double minimal_weight(Threshold th, int order)
{
    return th == Threshold::zero ? 0.5 + order + 4.0 : 0.5 + order + 2.0;
}

/// Exponent of the first nonvanishing remainder term at threshold zero; G_j
/// vanishes identically for j = 2 mod 4.
inline int leading_remainder_power(int order)
{
    int p = order + 1;
    while (p >= 2 && (p - 2) % 4 == 0)
        ++p;
    return p;
}

/// Geometric grid of ratio 2^{1/4} ending at 1e-1. At threshold zero the lower
/// end sits above the cancellation floor eps * mu^{-3} of the remainder.
inline std::vector<double> default_mu_grid(Threshold th, int order)
{
    double lo = 1e-3;
    if (th == Threshold::zero)
        lo = std::max(lo, std::pow(1e4 * std::numeric_limits<double>::epsilon(),
                                   1.0 / (leading_remainder_power(order) + 3.0)));
    std::vector<double> grid;
    const double ratio = std::pow(2.0, 0.25);
    for (double mu = lo; mu <= 0.1 * (1.0 + 1e-12); mu *= ratio)
        grid.push_back(mu);
    return grid;
}

struct RemainderReport
{
    Threshold threshold;
    int order;
    double s;
    std::vector<double> mu;
    std::vector<double> norm;
    double slope;
    double intercept;
};

namespace detail {

inline std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

} // namespace detail

/// Measures ||R_0 - sum_{j<=N} zeta^j G_j||_{B(s,-s)} on the window [-W, W]
/// over mu_grid and fits the log-log slope.
inline RemainderReport remainder_order_check(Threshold th, Sign sign, int order, double s,
                                             const std::vector<double>& mu_grid, int lattice_radius = 64)
{
    const int jmin = th == Threshold::zero ? -3 : -1;
    detail::require(order >= jmin, "remainder_order_check: order below the leading term");
    detail::require(s > minimal_weight(th, order), "remainder_order_check: weight s below the expansion's hypothesis");
    detail::require(lattice_radius >= 8 && std::pow(bracket(lattice_radius), -s) <= 1e-3,
                    "remainder_order_check: window too small for weight s");
    detail::require(mu_grid.size() >= 4, "remainder_order_check: need at least 4 grid points");
    const int W = lattice_radius;
    const int dmax = 2 * W;
    const ExpansionTable table(th, sign, std::max(order, 0), dmax);

    RemainderReport report{th, order, s, mu_grid, {}, 0.0, 0.0};
    std::vector<complex> remainder(static_cast<std::size_t>(dmax + 1));
    Eigen::MatrixXcd K(2 * W + 1, 2 * W + 1);
    for (double mu : mu_grid)
    {
        detail::require(mu > 0.0 && mu < 2.0, "remainder_order_check: grid point outside (0, 2)");
        for (int d = 0; d <= dmax; ++d)
            remainder[static_cast<std::size_t>(d)] = threshold_kernel(th, sign, mu, d) - table.partial_sum(mu, d, order);
        for (int i = 0; i < 2 * W + 1; ++i)
            for (int k = 0; k < 2 * W + 1; ++k)
                K(i, k) = remainder[static_cast<std::size_t>(std::abs(i - k))];
        report.norm.push_back(weighted_operator_norm(K, W, s));
    }
    std::tie(report.slope, report.intercept) = detail::loglog_fit(report.mu, report.norm);
    return report;
}

/// Same measurement for the first mu-derivative of the remainder (central
/// differences); the derivative of an O(mu^k) remainder is O(mu^{k-1}).
inline RemainderReport remainder_derivative_check(Threshold th, Sign sign, int order, double s,
                                                  const std::vector<double>& mu_grid, int lattice_radius = 64)
{
    detail::require(s > minimal_weight(th, order), "remainder_derivative_check: weight s below hypothesis");
    const int W = lattice_radius;
    const int dmax = 2 * W;
    const ExpansionTable table(th, sign, std::max(order, 0), dmax);
    RemainderReport report{th, order, s, mu_grid, {}, 0.0, 0.0};
    Eigen::MatrixXcd K(2 * W + 1, 2 * W + 1);
    std::vector<complex> deriv(static_cast<std::size_t>(dmax + 1));
    for (double mu : mu_grid)
    {
        const double h = 1e-3 * mu;
        for (int d = 0; d <= dmax; ++d)
        {
            auto rem = [&](double x) { return threshold_kernel(th, sign, x, d) - table.partial_sum(x, d, order); };
            deriv[static_cast<std::size_t>(d)] = (rem(mu + h) - rem(mu - h)) / (2.0 * h);
        }
        for (int i = 0; i < 2 * W + 1; ++i)
            for (int k = 0; k < 2 * W + 1; ++k)
                K(i, k) = deriv[static_cast<std::size_t>(std::abs(i - k))];
        report.norm.push_back(weighted_operator_norm(K, W, s));
    }
    std::tie(report.slope, report.intercept) = detail::loglog_fit(report.mu, report.norm);
    return report;
}

} // namespace bischrod
