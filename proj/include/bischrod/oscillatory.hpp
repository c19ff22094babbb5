#pragma once
//
// Lattice phases Phi_s(x) = (2 -/+ 2cos x)^2 - s x on [a, b] within [-pi, 0]:
// derivatives, stationary points and their orders, the resulting decay rate,
// and an adaptive Gauss-Kronrod panel integrator for e^{-it Phi} phi.
//

#include <bischrod/error.hpp>
#include <bischrod/lattice.hpp>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <vector>

namespace bischrod {

enum class PhaseBranch { minus_cos, plus_cos };

struct PhaseSpec
{
    PhaseBranch branch = PhaseBranch::minus_cos;
    double s = 0.0;
    double a = -std::numbers::pi;
    double b = 0.0;

    void validate() const
    {
        detail::require(std::isfinite(s), "PhaseSpec: slope must be finite");
        detail::require(a < b && a >= -std::numbers::pi - 1e-15 && b <= 1e-15,
                        "PhaseSpec: interval must satisfy -pi <= a < b <= 0");
    }
};

namespace detail {

inline double branch_sign(PhaseBranch b) { return b == PhaseBranch::minus_cos ? 1.0 : -1.0; }

/// k-th derivative of cos at y.
inline double cos_derivative(int k, double y) { return std::cos(y + 0.5 * std::numbers::pi * k); }

} // namespace detail

/// Phi, Phi', ..., Phi^{(up_to)} at x. With M(x) = 6 - 8 sigma cos x + 2 cos 2x.
inline std::vector<double> phase_derivatives(const PhaseSpec& spec, double x, int up_to)
{
    detail::require(up_to >= 0, "phase_derivatives: order must be nonnegative");
    const double sigma = detail::branch_sign(spec.branch);
    std::vector<double> out(static_cast<std::size_t>(up_to + 1));
    for (int k = 0; k <= up_to; ++k)
    {
        double m = -8.0 * sigma * detail::cos_derivative(k, x) + 2.0 * std::ldexp(1.0, k) * detail::cos_derivative(k, 2.0 * x);
        if (k == 0)
            m += 6.0 - spec.s * x;
        if (k == 1)
            m -= spec.s;
        out[static_cast<std::size_t>(k)] = m;
    }
    return out;
}

inline double phase_value(const PhaseSpec& spec, double x) { return phase_derivatives(spec, x, 0)[0]; }
inline double phase_slope(const PhaseSpec& spec, double x) { return phase_derivatives(spec, x, 1)[1]; }

/// Largest |M'| over the band: 6 sqrt 3, attained at x = -2pi/3 (minus branch).
inline constexpr double max_group_speed = 10.392304845413264;

struct StationaryPoint
{
    double x;
    int order;
    double derivative_value; // Phi^{(order)}(x)
};

inline constexpr double degenerate_threshold = 1e-8;
inline constexpr double stationary_tolerance = 1e-10;

/// Order of a stationary point: first k >= 2 with |Phi^{(k)}(x)| > 1e-8.
inline StationaryPoint classify_stationary_point(const PhaseSpec& spec, double x)
{
    const auto d = phase_derivatives(spec, x, 8);
    for (int k = 2; k <= 8; ++k)
        if (std::abs(d[static_cast<std::size_t>(k)]) > degenerate_threshold)
            return {x, k, d[static_cast<std::size_t>(k)]};
    throw NumericalFailure("classify_stationary_point: all derivatives through order 8 vanish");
}

/// Zeros of Phi'' in [a, b]: cos x = sigma and cos x = -sigma / 2.
inline std::vector<double> inflection_points(const PhaseSpec& spec)
{
    const double pi = std::numbers::pi;
    const std::vector<double> cand = spec.branch == PhaseBranch::minus_cos ? std::vector<double>{-2.0 * pi / 3.0, 0.0}
                                                                            : std::vector<double>{-pi, -pi / 3.0};
    std::vector<double> out;
    for (double x : cand)
        if (x >= spec.a && x <= spec.b)
            out.push_back(x);
    return out;
}

/// Roots of Phi'_s on [a, b] by bisection on the monotone pieces between zeros of Phi''.
inline std::vector<StationaryPoint> stationary_points(const PhaseSpec& spec)
{
    spec.validate();
    std::vector<double> cuts{spec.a};
    for (double x : inflection_points(spec))
        if (x > spec.a && x < spec.b)
            cuts.push_back(x);
    cuts.push_back(spec.b);

    std::vector<double> roots;
    auto add = [&](double x) {
        for (double r : roots)
            if (std::abs(r - x) < 1e-9)
                return;
        roots.push_back(x);
    };
    for (double c : cuts)
        if (std::abs(phase_slope(spec, c)) <= stationary_tolerance)
            add(c);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    {
        double lo = cuts[i], hi = cuts[i + 1];
        double flo = phase_slope(spec, lo), fhi = phase_slope(spec, hi);
        if (std::abs(flo) <= stationary_tolerance || std::abs(fhi) <= stationary_tolerance || flo * fhi > 0.0)
            continue;
        for (int it = 0; it < 200 && hi - lo > 4e-16 * std::max(1.0, std::abs(lo)); ++it)
        {
            const double mid = 0.5 * (lo + hi);
            const double fm = phase_slope(spec, mid);
            if ((fm < 0.0) == (flo < 0.0))
            {
                lo = mid;
                flo = fm;
            }
            else
                hi = mid;
        }
        add(std::abs(flo) < std::abs(phase_slope(spec, hi)) ? lo : hi);
    }
    std::sort(roots.begin(), roots.end());
    std::vector<StationaryPoint> out;
    for (double x : roots)
        out.push_back(classify_stationary_point(spec, x));
    return out;
}

struct Rational
{
    int num = 1;
    int den = 1;
    double value() const { return static_cast<double>(num) / den; }
    bool operator==(const Rational&) const = default;
};

/// 1/k for the highest stationary order k; 1 when Phi' has no zero.
inline Rational decay_order_prediction(const PhaseSpec& spec)
{
    int k = 1;
    for (const auto& p : stationary_points(spec))
        k = std::max(k, p.order);
    return {1, k};
}

struct PanelOptions
{
    double tol = 1e-9;           // absolute, for the whole integral
    double phase_budget = 0.5;   // max |t| * |Phi'| * width per panel
    std::size_t max_panels = 8'000'000;
};

struct PanelResult
{
    Eigen::VectorXcd value;
    double error = 0.0;          // sum of |K15 - G7| over accepted panels, max over components
    bool converged = true;
    std::size_t panels = 0;
};

/// Adaptive G7/K15 panels on [a, b] split at `breakpoints`. `f(x)` returns the full
/// integrand (all components); `rate(x0, x1)` bounds the oscillation frequency on a panel.
template <class F, class Rate>
PanelResult adaptive_panel_integral(F&& f, Rate&& rate, std::vector<double> breakpoints, Eigen::Index components,
                                    const PanelOptions& opt = {})
{
    using kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
    using gauss = boost::math::quadrature::gauss<double, 7>;
    const auto& xk = kronrod::abscissa();
    const auto& wk = kronrod::weights();
    const auto& wg = gauss::weights();

    std::sort(breakpoints.begin(), breakpoints.end());
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
    detail::require(breakpoints.size() >= 2, "adaptive_panel_integral: need an interval");
    const double total = breakpoints.back() - breakpoints.front();

    PanelResult res;
    res.value = Eigen::VectorXcd::Zero(components);
    Eigen::VectorXd err = Eigen::VectorXd::Zero(components);

    std::vector<std::pair<double, double>> stack;
    for (std::size_t i = breakpoints.size() - 1; i > 0; --i)
        if (breakpoints[i] > breakpoints[i - 1])
            stack.emplace_back(breakpoints[i - 1], breakpoints[i]);

    std::size_t budget_left = opt.max_panels;
    while (!stack.empty())
    {
        auto [x0, x1] = stack.back();
        stack.pop_back();
        const double h = x1 - x0;
        const bool can_split = h > 1e-14 * std::max(1.0, std::abs(x0)) && budget_left > 0;
        if (can_split && rate(x0, x1) * h > opt.phase_budget)
        {
            stack.emplace_back(0.5 * (x0 + x1), x1);
            stack.emplace_back(x0, 0.5 * (x0 + x1));
            --budget_left;
            continue;
        }
        const double c = 0.5 * (x0 + x1), r = 0.5 * h;
        Eigen::VectorXcd K = wk[0] * f(c), G = wg[0] * f(c);
        for (std::size_t i = 1; i < xk.size(); ++i)
        {
            const Eigen::VectorXcd sum = f(c - r * xk[i]) + f(c + r * xk[i]);
            K += wk[i] * sum;
            if (i % 2 == 0)
                G += wg[i / 2] * sum;
        }
        K *= r;
        G *= r;
        const Eigen::VectorXd e = (K - G).cwiseAbs();
        const double allowed = opt.tol * h / total;
        if (can_split && e.maxCoeff() > allowed && e.maxCoeff() > 1e-15 * K.cwiseAbs().maxCoeff())
        {
            stack.emplace_back(c, x1);
            stack.emplace_back(x0, c);
            --budget_left;
            continue;
        }
        if (e.maxCoeff() > allowed && e.maxCoeff() > 1e-15 * K.cwiseAbs().maxCoeff())
            res.converged = false;
        res.value += K;
        err += e;
        ++res.panels;
    }
    res.error = err.maxCoeff();
    return res;
}

struct OscillatoryResult
{
    complex value;
    double error;
    bool converged;
    std::size_t panels;
};

/// int_a^b e^{-it Phi_s(x)} phi(x) dx.
template <class Weight>
OscillatoryResult oscillatory_integral(const PhaseSpec& spec, double t, Weight&& phi, const PanelOptions& opt = {})
{
    spec.validate();
    detail::require(std::isfinite(t), "oscillatory_integral: t must be finite");
    std::vector<double> cuts{spec.a, spec.b};
    for (const auto& p : stationary_points(spec))
    {
        const double radius = 3.0 * std::pow(opt.tol / std::max(std::abs(t), 1e-300), 1.0 / p.order);
        cuts.push_back(p.x);
        for (double y : {p.x - radius, p.x + radius})
            if (y > spec.a && y < spec.b)
                cuts.push_back(y);
    }
    const double curvature = 32.0; // bound on |Phi''| for both branches
    auto rate = [&](double x0, double x1) {
        const double m = std::max({std::abs(phase_slope(spec, x0)), std::abs(phase_slope(spec, x1)),
                                   std::abs(phase_slope(spec, 0.5 * (x0 + x1)))});
        return std::abs(t) * (m + 0.5 * curvature * (x1 - x0));
    };
    auto f = [&](double x) {
        Eigen::VectorXcd v(1);
        v(0) = std::exp(complex(0.0, -t * phase_value(spec, x))) * complex(phi(x));
        return v;
    };
    const auto r = adaptive_panel_integral(f, rate, cuts, 1, opt);
    return {r.value(0), r.error, r.converged, r.panels};
}

} // namespace bischrod
