#pragma once
//
// Decay exponents from sup-norm series, Strichartz norms of the free Delta^2 flow,
// and the Knapp example behind the sharpness of the admissible range.
//

#include <bischrod/propagators.hpp>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/zeta.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace bischrod {

struct DecaySeries
{
    std::vector<double> times;
    std::vector<double> sup_norms;
    std::string source;

    void validate() const
    {
        detail::require(times.size() == sup_norms.size(), "DecaySeries: times and norms differ in length");
        for (std::size_t i = 0; i < times.size(); ++i)
        {
            detail::require(times[i] > 0.0 && std::isfinite(times[i]), "DecaySeries: times must be positive");
            detail::require(sup_norms[i] > 0.0 && std::isfinite(sup_norms[i]), "DecaySeries: norms must be positive");
            if (i > 0)
                detail::require(times[i] > times[i - 1], "DecaySeries: times must increase strictly");
        }
    }
};

struct DecayFit
{
    double alpha = 0.0;       // norm ~ C t^{-alpha}
    double intercept = 0.0;   // log C
    double r_squared = 0.0;
    double alpha_stderr = 0.0;
    double t_min = 0.0, t_max = 0.0;
    std::size_t points = 0;
};

/// Least-squares slope of log norm against log t over times in [t_min, t_max].
inline DecayFit fit_decay_exponent(const DecaySeries& s, double t_min = 0.0,
                                   double t_max = std::numeric_limits<double>::infinity())
{
    s.validate();
    std::vector<double> x, y;
    for (std::size_t i = 0; i < s.times.size(); ++i)
        if (s.times[i] >= t_min && s.times[i] <= t_max)
        {
            x.push_back(std::log(s.times[i]));
            y.push_back(std::log(s.sup_norms[i]));
        }
    detail::require(x.size() >= 8, "fit_decay_exponent: need at least 8 points in the window");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    detail::require(sxx > 0.0, "fit_decay_exponent: degenerate time window");
    DecayFit f;
    const double slope = sxy / sxx;
    f.alpha = -slope;
    f.intercept = my - slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        const double r = y[i] - (f.intercept + slope * x[i]);
        sse += r * r;
    }
    f.r_squared = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
    f.alpha_stderr = x.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
    f.t_min = std::exp(x.front());
    f.t_max = std::exp(x.back());
    f.points = x.size();
    return f;
}

/// Largest change of alpha when one point is dropped.
inline double leave_one_out_spread(const DecaySeries& s)
{
    const double base = fit_decay_exponent(s).alpha;
    double worst = 0.0;
    for (std::size_t k = 0; k < s.times.size(); ++k)
    {
        DecaySeries r;
        for (std::size_t i = 0; i < s.times.size(); ++i)
            if (i != k)
            {
                r.times.push_back(s.times[i]);
                r.sup_norms.push_back(s.sup_norms[i]);
            }
        worst = std::max(worst, std::abs(fit_decay_exponent(r).alpha - base));
    }
    return worst;
}

/// Log-spaced times from t0 to t1 inclusive, `per_decade` points per decade.
inline std::vector<double> log_time_grid(double t0, double t1, int per_decade = 16)
{
    detail::require(t0 > 0.0 && t1 > t0 && per_decade > 0, "log_time_grid: need 0 < t0 < t1");
    const double decades = std::log10(t1 / t0);
    const int steps = static_cast<int>(std::ceil(decades * per_decade - 1e-9));
    std::vector<double> out;
    for (int i = 0; i <= steps; ++i)
        out.push_back(t0 * std::pow(t1 / t0, static_cast<double>(i) / steps));
    return out;
}

/// Free series: sup over |n - m| <= 2 N_obs of the FFT kernel, or over all displacements when
/// observe_radius < 0.
inline DecaySeries free_decay_series(FreeKind kind, const std::vector<double>& times, int observe_radius = 200)
{
    DecaySeries s;
    s.source = "free FFT kernel";
    for (double t : times)
    {
        double sup = 0.0;
        if (observe_radius < 0)
            sup = free_kernel_sup(kind, t);
        else
        {
            const int L = free_ring_length(t, std::max(256, 8 * observe_radius));
            const auto K = free_kernel_fft(kind, t, L);
            for (int d = -2 * observe_radius; d <= 2 * observe_radius; ++d)
                sup = std::max(sup, std::abs(K[static_cast<std::size_t>(((d % L) + L) % L)]));
        }
        s.times.push_back(t);
        s.sup_norms.push_back(sup);
    }
    return s;
}

/// Perturbed series: global sup of the Stone kernel of e^{-itH} P_ac(H).
inline DecaySeries perturbed_decay_series(const Potential& V, const std::vector<double>& times,
                                          const GlobalSupOptions& opt = {})
{
    DecaySeries s;
    s.source = "Stone global sup";
    for (double t : times)
    {
        const auto g = stone_global_sup(&V, t, opt);
        if (!g.converged)
            throw NumericalFailure("perturbed_decay_series: Stone quadrature did not converge at t = " + std::to_string(t));
        s.times.push_back(t);
        s.sup_norms.push_back(g.sup);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Strichartz

inline constexpr double r_infinity = std::numeric_limits<double>::infinity();

/// 1/q + 1/(4r) <= 1/8 with q, r >= 2 and (q, r) != (2, inf).
inline bool strichartz_admissible(double q, double r)
{
    if (q < 2.0 || r < 2.0 || (q == 2.0 && std::isinf(r)))
        return false;
    return 1.0 / q + (std::isinf(r) ? 0.0 : 1.0 / (4.0 * r)) <= 0.125 + 1e-15;
}

struct StrichartzOptions
{
    double tol = 1e-6;  // absolute error of the time integral of ||u||_r^q
};

struct StrichartzResult
{
    double q = 0.0, r = 0.0;
    std::vector<double> T;
    std::vector<double> norms;  // (int_0^T ||u(t)||_r^q dt)^{1/q}
    double error = 0.0;
    std::size_t evaluations = 0;
    bool bounded = false;       // last / first within 10%
    double growth_ratio = 1.0;
};

/// Strichartz norms of u = e^{-it Delta^2} psi0 for each T in T_ladder (increasing). psi0 is
/// given on [-R, R]; u(t) by FFT on a ring wide enough for the largest T.
inline StrichartzResult strichartz_norm(double q, double r, const std::vector<double>& T_ladder, const LatticeVector& psi0,
                                        const StrichartzOptions& opt = {})
{
    detail::require(q >= 2.0 && r >= 2.0 && !(q == 2.0 && std::isinf(r)), "strichartz_norm: need q, r >= 2 and (q, r) != (2, inf)");
    detail::require(!T_ladder.empty() && T_ladder.front() > 0.0, "strichartz_norm: need positive times");
    for (std::size_t i = 1; i < T_ladder.size(); ++i)
        detail::require(T_ladder[i] > T_ladder[i - 1], "strichartz_norm: times must increase");
    StrichartzResult res;
    res.q = q;
    res.r = r;
    res.T = T_ladder;
    const int R = psi0.radius();
    const int L = free_ring_length(T_ladder.back(), 4 * (2 * R + 1));

    std::vector<complex> hat(static_cast<std::size_t>(L)), buf(static_cast<std::size_t>(L));
    for (int n = -R; n <= R; ++n)
        hat[static_cast<std::size_t>(((n % L) + L) % L)] = psi0[n];
    detail::FftwPlan fwd(L, hat.data(), FFTW_FORWARD);
    detail::FftwPlan bwd(L, buf.data(), FFTW_BACKWARD);
    fwd.execute();
    std::vector<double> symbol(static_cast<std::size_t>(L));
    for (int k = 0; k < L; ++k)
    {
        const double w = 2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * k / L);
        symbol[static_cast<std::size_t>(k)] = w * w;
    }

    auto g = [&](double t) {
        // symbol(k) = symbol(L - k)
        for (int k = 0; k <= L / 2; ++k)
        {
            const complex ph = std::polar(1.0 / L, -t * symbol[static_cast<std::size_t>(k)]);
            buf[static_cast<std::size_t>(k)] = hat[static_cast<std::size_t>(k)] * ph;
            if (k > 0 && k < L - k)
                buf[static_cast<std::size_t>(L - k)] = hat[static_cast<std::size_t>(L - k)] * ph;
        }
        bwd.execute();
        double acc = 0.0;
        if (std::isinf(r))
        {
            for (const auto& z : buf)
                acc = std::max(acc, std::abs(z));
            return std::pow(acc, q);
        }
        if (r == std::floor(r) && r <= 256.0)
        {
            const int e = static_cast<int>(r);
            for (const auto& z : buf)
            {
                const double a2 = std::norm(z);
                double p = (e % 2) ? std::sqrt(a2) : 1.0, b = a2;
                for (int k = e / 2; k > 0; k >>= 1, b *= b)
                    if (k & 1)
                        p *= b;
                acc += p;
            }
        }
        else
            for (const auto& z : buf)
                acc += std::pow(std::abs(z), r);
        return std::pow(acc, q / r);
    };

    // panels: [0, 1/8] then doubling, split at every requested T; adaptive on the K15 - G7 error
    std::vector<double> cuts{0.0};
    for (double x = 0.125; x < T_ladder.back(); x *= 2.0)
        cuts.push_back(x);
    for (double T : T_ladder)
        cuts.push_back(T);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    PanelOptions popt;
    popt.tol = opt.tol;
    popt.phase_budget = 4.0;
    auto integrand = [&](double t) {
        ++res.evaluations;
        Eigen::VectorXcd v(1);
        v(0) = g(t);
        return v;
    };
    // |d/dt| of the phases is at most 16
    auto rate = [](double, double) { return 16.0; };
    double acc = 0.0, err = 0.0;
    std::size_t next = 0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    {
        popt.tol = opt.tol * (cuts[i + 1] - cuts[i]) / T_ladder.back();
        const auto pr = adaptive_panel_integral(integrand, rate, {cuts[i], cuts[i + 1]}, 1, popt);
        acc += pr.value(0).real();
        err += pr.error;
        while (next < T_ladder.size() && cuts[i + 1] >= T_ladder[next])
        {
            res.norms.push_back(std::pow(acc, 1.0 / q));
            ++next;
        }
    }
    res.error = err;
    res.growth_ratio = res.norms.front() > 0.0 ? res.norms.back() / res.norms.front() : 1.0;
    res.bounded = std::abs(res.growth_ratio - 1.0) <= 0.1;
    return res;
}

// ---------------------------------------------------------------------------
// Knapp example

struct KnappPoint
{
    double epsilon = 0.0;
    double lhs = 0.0;  // (int |f^(-M(x), x)| dx)^{1/2}
    double rhs = 0.0;  // || sin(eps^4 t)/t * sin(eps n)/n ||_{L^{q'}_t l^{r'}_n}
};

namespace detail {

/// mean of |sin|^p over a period
inline double mean_abs_sin_power(double p)
{
    return std::tgamma(0.5 * (p + 1.0)) / (std::sqrt(std::numbers::pi) * std::tgamma(0.5 * p + 1.0));
}

/// sum over n in Z of |sin(eps n)/n|^p (n = 0 term eps^p): explicit to n_cut, then the mean of
/// |sin|^p against the zeta tail.
inline double knapp_lattice_sum(double eps, double p, long n_cut = 2'000'000)
{
    double s = 0.0, partial = 0.0;
    for (long n = n_cut; n >= 1; --n)
    {
        const double x = static_cast<double>(n);
        s += std::pow(std::abs(std::sin(eps * x)) / x, p);
        partial += std::pow(x, -p);
    }
    const double tail = mean_abs_sin_power(p) * (boost::math::zeta(p) - partial);
    return std::pow(eps, p) + 2.0 * (s + tail);
}

/// int_R |sin(a t)/t|^p dt, by Gauss panels on half-periods out to K periods plus the mean tail.
inline double knapp_time_integral(double a, double p, int periods = 200'000)
{
    using G = boost::math::quadrature::gauss<double, 20>;
    const double h = std::numbers::pi / a;
    double s = 0.0;
    for (int k = periods - 1; k >= 0; --k)
        s += G::integrate([&](double t) { return t == 0.0 ? std::pow(a, p) : std::pow(std::abs(std::sin(a * t) / t), p); },
                          k * h, (k + 1) * h);
    const double S = periods * h;
    const double tail = mean_abs_sin_power(p) * std::pow(S, 1.0 - p) / (p - 1.0);
    return 2.0 * (s + tail);
}

} // namespace detail

/// lhs and rhs of the dual Knapp inequality at one eps for the pair (q, r); q, r finite, > 1 conjugates.
inline KnappPoint knapp_experiment(double epsilon, double q, double r)
{
    detail::require(epsilon > 0.0 && epsilon <= 0.1, "knapp_experiment: need 0 < eps <= 0.1");
    detail::require(q > 2.0 - 1e-15 && r > 2.0 - 1e-15 && std::isfinite(q) && std::isfinite(r),
                    "knapp_experiment: need finite q, r >= 2 (the l^1 side diverges at r = inf)");
    KnappPoint out;
    out.epsilon = epsilon;
    // {|x| < eps, M(x) < eps^4}: M increasing on (0, pi), root by bisection
    const double level = std::pow(epsilon, 4);
    double lo = 0.0, hi = std::numbers::pi;
    for (int it = 0; it < 200; ++it)
    {
        const double mid = 0.5 * (lo + hi);
        const double w = 2.0 - 2.0 * std::cos(mid);
        (w * w < level ? lo : hi) = mid;
    }
    out.lhs = std::sqrt(2.0 * std::min(lo, epsilon));

    const double qp = q / (q - 1.0), rp = r / (r - 1.0);
    const double time_part = std::pow(detail::knapp_time_integral(level, qp), 1.0 / qp);
    const double lattice_part = std::pow(detail::knapp_lattice_sum(epsilon, rp), 1.0 / rp);
    out.rhs = time_part * lattice_part;
    return out;
}

struct KnappLadder
{
    std::vector<KnappPoint> points;
    double lhs_exponent = 0.0;  // slope of log lhs against log eps
    double rhs_exponent = 0.0;
    double predicted_rhs = 0.0; // 1/r + 4/q
    bool consistent = false;    // 1/2 >= 1/r + 4/q, as the inequality requires
};

inline KnappLadder knapp_ladder(const std::vector<double>& eps, double q, double r)
{
    detail::require(eps.size() >= 2, "knapp_ladder: need at least two eps values");
    KnappLadder out;
    for (double e : eps)
        out.points.push_back(knapp_experiment(e, q, r));
    auto slope = [&](auto get) {
        double mx = 0.0, my = 0.0;
        for (const auto& p : out.points)
        {
            mx += std::log(p.epsilon);
            my += std::log(get(p));
        }
        mx /= out.points.size();
        my /= out.points.size();
        double sxx = 0.0, sxy = 0.0;
        for (const auto& p : out.points)
        {
            sxx += (std::log(p.epsilon) - mx) * (std::log(p.epsilon) - mx);
            sxy += (std::log(p.epsilon) - mx) * (std::log(get(p)) - my);
        }
        return sxy / sxx;
    };
    out.lhs_exponent = slope([](const KnappPoint& p) { return p.lhs; });
    out.rhs_exponent = slope([](const KnappPoint& p) { return p.rhs; });
    out.predicted_rhs = 1.0 / r + 4.0 / q;
    out.consistent = 0.5 >= out.predicted_rhs - 1e-12;
    return out;
}

} // namespace bischrod
