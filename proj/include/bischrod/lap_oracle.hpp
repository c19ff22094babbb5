#pragma once
//
// Limiting-absorption oracle: boundary values of (Delta^2 + V - mu^4 -/+ i eps)^{-1}
// recovered from truncated banded solves on a geometric eps ladder followed by
// Richardson extrapolation to eps = 0.
//

#include <bischrod/free_resolvent.hpp>
#include <bischrod/potential.hpp>

#include <complex>
#ifndef lapack_complex_double
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <utility>
#include <vector>

namespace bischrod {

struct LapOracleOptions
{
    /// phase shift |d theta| induced by the largest eps of the ladder
    double theta_shift = 1e-3;
    /// ladder eps_0, eps_0/2, eps_0/4, ...
    int levels = 4;
    /// window sized so that exp(-|Im theta| * distance) <= exp(-absorption)
    double absorption = 36.0;
    int max_radius = 4'000'000;
};

struct LapOracleResult
{
    std::vector<complex> values;               // extrapolated, one per requested site pair
    std::vector<std::vector<complex>> ladder;  // raw truncated values per eps level
    std::vector<double> eps;
    std::vector<int> radius;
};

namespace detail {

/// Solve (Delta^2 + V - z) x = e_m on [-N, N] (zero padding) for every m in `columns`.
inline std::vector<std::vector<complex>> banded_resolvent_columns(const Potential* V, complex z, int N,
                                                                  const std::vector<int>& columns)
{
    const lapack_int n = 2 * N + 1;
    const lapack_int kl = 2, ku = 2, ldab = 2 * kl + ku + 1;
    std::vector<lapack_complex_double> ab(static_cast<std::size_t>(ldab) * n, lapack_complex_double(0.0, 0.0));
    auto at = [&](lapack_int i, lapack_int j) -> lapack_complex_double& {
        return ab[static_cast<std::size_t>(kl + ku + i - j) + static_cast<std::size_t>(j) * ldab];
    };
    constexpr double stencil[5] = {1.0, -4.0, 6.0, -4.0, 1.0};
    for (lapack_int j = 0; j < n; ++j)
    {
        for (int k = -2; k <= 2; ++k)
        {
            const lapack_int i = j + k;
            if (i < 0 || i >= n)
                continue;
            double value = stencil[k + 2];
            lapack_complex_double entry(value, 0.0);
            if (k == 0)
            {
                const double pot = V ? (*V)(static_cast<int>(j) - N) : 0.0;
                entry = lapack_complex_double(value + pot - z.real(), -z.imag());
            }
            at(i, j) = entry;
        }
    }
    const lapack_int nrhs = static_cast<lapack_int>(columns.size());
    std::vector<lapack_complex_double> rhs(static_cast<std::size_t>(n) * nrhs, lapack_complex_double(0.0, 0.0));
    for (lapack_int c = 0; c < nrhs; ++c)
        rhs[static_cast<std::size_t>(columns[c] + N) + static_cast<std::size_t>(c) * n] = lapack_complex_double(1.0, 0.0);
    std::vector<lapack_int> ipiv(static_cast<std::size_t>(n));
    const lapack_int info = LAPACKE_zgbsv(LAPACK_COL_MAJOR, n, kl, ku, nrhs, ab.data(), ldab, ipiv.data(),
                                          rhs.data(), n);
    if (info != 0)
        throw NumericalFailure("banded_resolvent_columns: zgbsv failed with info " + std::to_string(info));
    std::vector<std::vector<complex>> out(static_cast<std::size_t>(nrhs));
    for (lapack_int c = 0; c < nrhs; ++c)
    {
        auto& col = out[static_cast<std::size_t>(c)];
        col.resize(static_cast<std::size_t>(n));
        for (lapack_int i = 0; i < n; ++i)
        {
            const auto& v = rhs[static_cast<std::size_t>(i) + static_cast<std::size_t>(c) * n];
            col[static_cast<std::size_t>(i)] = complex(v.real(), v.imag());
        }
    }
    return out;
}

/// Neville table at eps = 0 for samples f(eps_k).
inline complex richardson_to_zero(const std::vector<double>& eps, std::vector<complex> f)
{
    const std::size_t n = f.size();
    for (std::size_t level = 1; level < n; ++level)
        for (std::size_t i = n - 1; i >= level; --i)
            f[i] = (eps[i - level] * f[i] - eps[i] * f[i - 1]) / (eps[i - level] - eps[i]);
    return f[n - 1];
}

} // namespace detail

/// Extrapolated boundary kernel of (Delta^2 + V - mu^4 -/+ i0)^{-1} at the given
/// site pairs. A null V gives the free operator.
inline LapOracleResult lap_oracle(const Potential* V, double mu, Sign sign,
                                  const std::vector<std::pair<int, int>>& sites,
                                  const LapOracleOptions& opt = {})
{
    detail::require(mu > 0.0 && mu < 2.0, "lap_oracle: mu must lie in (0, 2)");
    detail::require(!sites.empty(), "lap_oracle: no sites requested");
    const double s = sign_value(sign);
    const double mu2 = mu * mu;
    // |d theta / d z| = 1 / (4 mu^2 |sin theta_+|)
    const double sin_tp = mu * std::sqrt(1.0 - 0.25 * mu2);
    const double eps0 = opt.theta_shift * 4.0 * mu2 * sin_tp;

    int far = 0;
    std::vector<int> columns;
    for (const auto& [n, m] : sites)
    {
        far = std::max({far, std::abs(n), std::abs(m)});
        if (std::find(columns.begin(), columns.end(), m) == columns.end())
            columns.push_back(m);
    }
    if (V)
        far = std::max(far, V->support_radius());

    LapOracleResult out;
    out.ladder.assign(sites.size(), {});
    for (int level = 0; level < opt.levels; ++level)
    {
        const double eps = eps0 / std::pow(2.0, level);
        const complex z(mu2 * mu2, s * eps);
        const complex theta = theta_of_omega(std::sqrt(z));
        const double decay = std::abs(theta.imag());
        const double needed = opt.absorption / decay + 2.0 * far + 64.0;
        if (needed > opt.max_radius)
            throw NumericalFailure("lap_oracle: required window exceeds max_radius");
        const int N = static_cast<int>(needed);
        const auto cols = detail::banded_resolvent_columns(V, z, N, columns);
        for (std::size_t k = 0; k < sites.size(); ++k)
        {
            const auto [n, m] = sites[k];
            const auto c = static_cast<std::size_t>(std::find(columns.begin(), columns.end(), m) - columns.begin());
            out.ladder[k].push_back(cols[c][static_cast<std::size_t>(n + N)]);
        }
        out.eps.push_back(eps);
        out.radius.push_back(N);
    }
    for (const auto& samples : out.ladder)
        out.values.push_back(detail::richardson_to_zero(out.eps, samples));
    return out;
}

} // namespace bischrod
