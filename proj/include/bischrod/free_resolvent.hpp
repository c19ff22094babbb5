#pragma once
//
// Closed-form kernels of the free resolvents of -Delta and Delta^2 on Z.
//
// For mu in (0,2) the boundary values R_0^{+/-}(mu^4) are
//
//   R_0^{+/-}(mu^4, n, m) = 1/(4 mu^3) * ( +/- i e^{-i theta_{+/-} d} / sqrt(1 - mu^2/4)
//                                        - e^{b(mu) d} / sqrt(1 + mu^2/4) ),   d = |n - m|,
//
// with cos(theta_+) = 1 - mu^2/2, theta_+ in (-pi, 0), theta_- = -theta_+ and
// b(mu) = ln(1 + mu^2/2 - mu (1 + mu^2/4)^{1/2}) = -2 asinh(mu/2).
//

#include <bischrod/lattice.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace bischrod {

enum class Sign { plus, minus };

inline double sign_value(Sign s) { return s == Sign::plus ? 1.0 : -1.0; }

struct SpectralParam
{
    double mu;
    Sign sign = Sign::plus;

    SpectralParam(double mu_, Sign sign_ = Sign::plus) : mu(mu_), sign(sign_)
    {
        detail::require(mu > 0.0 && mu < 2.0, "SpectralParam: mu must lie in (0, 2)");
    }
};

/// Root of 2 - 2cos(theta) = lambda in (-pi, 0).
inline double theta_plus(double lambda)
{
    detail::require(lambda > 0.0 && lambda < 4.0, "theta_plus: lambda must lie in (0, 4)");
    return -2.0 * std::asin(0.5 * std::sqrt(lambda));
}

/// b(mu) = ln(1 + mu^2/2 - mu sqrt(1 + mu^2/4)), evaluated as -2 asinh(mu/2).
inline double b_of_mu(double mu)
{
    detail::require(mu > 0.0 && mu <= 2.0, "b_of_mu: mu must lie in (0, 2]");
    return -2.0 * std::asinh(0.5 * mu);
}

inline double g_of_mu(double mu)
{
    return -b_of_mu(mu) / (mu * std::sqrt(1.0 + 0.25 * mu * mu));
}

struct ThetaValues
{
    double theta_plus;
    double theta_minus;
    complex theta_neg; // theta(-mu^2), on the negative imaginary axis
    double b;
    double g;
};

inline ThetaValues theta_values(double mu)
{
    SpectralParam check(mu);
    const double tp = theta_plus(mu * mu);
    return {tp, -tp, complex(0.0, -std::acosh(1.0 + 0.5 * mu * mu)), b_of_mu(mu), g_of_mu(mu)};
}

/// Solution of 2 - 2cos(theta) = omega with Re theta in [-pi, pi], Im theta < 0.
inline complex theta_of_omega(complex omega)
{
    detail::require(!(omega.imag() == 0.0 && omega.real() >= 0.0 && omega.real() <= 4.0),
                    "theta_of_omega: omega lies on the spectrum [0, 4]");
    const complex c = 1.0 - 0.5 * omega;
    complex theta = std::acos(c);
    if (theta.imag() > 0.0)
        theta = -theta;
    if (!(theta.imag() < 0.0))
        throw InvalidInput("theta_of_omega: omega too close to [0, 4] to resolve the branch");
    return theta;
}

/// Kernel of (-Delta - omega)^{-1}: -i e^{-i theta |n-m|} / (2 sin theta).
inline complex resolvent_neg_laplacian_kernel(complex omega, int n, int m)
{
    const complex theta = theta_of_omega(omega);
    const complex I(0.0, 1.0);
    return -I * std::exp(-I * theta * static_cast<double>(std::abs(n - m))) / (2.0 * std::sin(theta));
}

/// Boundary value R_0^{+/-}(mu^4) as a function of the distance d = |n - m|.
inline complex free_biresolvent_boundary(double mu, Sign sign, int d)
{
    detail::require(mu > 0.0 && mu < 2.0, "free_biresolvent_boundary: mu must lie in (0, 2)");
    d = std::abs(d);
    const double s = sign_value(sign);
    const double tp = -2.0 * std::asin(0.5 * mu);
    const double b = -2.0 * std::asinh(0.5 * mu);
    const double mu3 = mu * mu * mu;
    const complex I(0.0, 1.0);
    const complex osc = s * I * std::exp(-I * (s * tp) * static_cast<double>(d)) / std::sqrt(1.0 - 0.25 * mu * mu);
    const double evan = std::exp(b * d) / std::sqrt(1.0 + 0.25 * mu * mu);
    return (osc - evan) / (4.0 * mu3);
}

inline complex free_biresolvent_boundary(const SpectralParam& p, int n, int m)
{
    return free_biresolvent_boundary(p.mu, p.sign, n - m);
}

/// R_0^{+/-}(mu^4, d) for d = 0..dmax, by recurrence in d.
inline std::vector<complex> free_biresolvent_row(double mu, Sign sign, int dmax)
{
    detail::require(mu > 0.0 && mu < 2.0, "free_biresolvent_row: mu must lie in (0, 2)");
    const double s = sign_value(sign);
    const double tp = -2.0 * std::asin(0.5 * mu);
    const double b = -2.0 * std::asinh(0.5 * mu);
    const complex I(0.0, 1.0);
    const double scale = 1.0 / (4.0 * mu * mu * mu);
    const complex a = scale * s * I / std::sqrt(1.0 - 0.25 * mu * mu);
    const double e = scale / std::sqrt(1.0 + 0.25 * mu * mu);
    const complex step = std::exp(-I * (s * tp));
    const double decay = std::exp(b);
    std::vector<complex> row(static_cast<std::size_t>(dmax + 1));
    complex wave = 1.0;
    double ev = 1.0;
    for (int d = 0; d <= dmax; ++d)
    {
        // re-anchor periodically so the recurrence does not drift
        if (d % 64 == 0)
        {
            wave = std::exp(-I * (s * tp) * static_cast<double>(d));
            ev = std::exp(b * d);
        }
        row[static_cast<std::size_t>(d)] = a * wave - e * ev;
        wave *= step;
        ev *= decay;
    }
    return row;
}

/// Jump R_0^+ - R_0^- = (i / (2 mu^3)) cos(theta_+ d) / sqrt(1 - mu^2/4).
inline complex free_jump(double mu, int d)
{
    const double tp = -2.0 * std::asin(0.5 * mu);
    return complex(0.0, 1.0) * std::cos(tp * std::abs(d)) / (2.0 * mu * mu * mu * std::sqrt(1.0 - 0.25 * mu * mu));
}

/// Analytic continuation in mu of the boundary kernel (used for contour
/// extraction of expansion coefficients). Agrees with free_biresolvent_boundary
/// for real mu in (0, 2).
template <class T>
std::complex<T> free_biresolvent_analytic(std::complex<T> mu, Sign sign, int d)
{
    const T s = static_cast<T>(sign_value(sign));
    const std::complex<T> I(0, 1);
    const std::complex<T> half_mu = mu / T(2);
    const std::complex<T> alpha = T(2) * std::asin(half_mu);   // = -theta_+
    const std::complex<T> beta = -T(2) * std::asinh(half_mu);  // = b(mu)
    const T dd = static_cast<T>(std::abs(d));
    const std::complex<T> osc = s * I * std::exp(s * I * alpha * dd) / std::sqrt(T(1) - half_mu * half_mu);
    const std::complex<T> evan = std::exp(beta * dd) / std::sqrt(T(1) + half_mu * half_mu);
    return (osc - evan) / (T(4) * mu * mu * mu);
}

/// R_0^{+/-}((2 - nu^2)^4, d) continued analytically in nu = sqrt(2 - mu).
template <class T>
std::complex<T> free_biresolvent_analytic_sixteen(std::complex<T> nu, Sign sign, int d)
{
    const T s = static_cast<T>(sign_value(sign));
    const std::complex<T> I(0, 1);
    const std::complex<T> mu = T(2) - nu * nu;
    // theta_+ = -pi + 4 asin(nu/2); e^{-i theta_+ d} = (-1)^d e^{-4 i asin(nu/2) d}
    const std::complex<T> phi = T(4) * std::asin(nu / T(2));
    const T parity = (std::abs(d) % 2 == 0) ? T(1) : T(-1);
    const T dd = static_cast<T>(std::abs(d));
    const std::complex<T> root = nu * std::sqrt(T(4) - nu * nu) / T(2); // sqrt(1 - mu^2/4)
    const std::complex<T> osc = s * I * parity * std::exp(-s * I * phi * dd) / root;
    const std::complex<T> beta = -T(2) * std::asinh(mu / T(2));
    const std::complex<T> evan = std::exp(beta * dd) / std::sqrt(T(1) + mu * mu / T(4));
    return (osc - evan) / (T(4) * mu * mu * mu);
}

/// Split formula R_0(z) = (R_{-Delta}(sqrt z) - R_{-Delta}(-sqrt z)) / (2 sqrt z),
/// for z off [0, 16].
inline complex free_biresolvent_complex(complex z, int n, int m)
{
    detail::require(!(z.imag() == 0.0 && z.real() >= 0.0 && z.real() <= 16.0),
                    "free_biresolvent_complex: z lies on the spectrum [0, 16]");
    double arg = std::arg(z);
    if (arg <= 0.0)
        arg += 2.0 * std::numbers::pi;
    const complex root = std::sqrt(std::abs(z)) * std::exp(complex(0.0, 0.5 * arg));
    return (resolvent_neg_laplacian_kernel(root, n, m) - resolvent_neg_laplacian_kernel(-root, n, m)) / (2.0 * root);
}

} // namespace bischrod
