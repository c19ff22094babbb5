#pragma once

#include <bischrod/lattice.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace bischrod {

/// Real potential supported on the integer interval [lo, hi].
/// `beta` is the declared decay exponent |V(n)| <~ <n>^{-beta}; informational.
struct Potential
{
    int lo = 0;
    int hi = 0;
    std::vector<double> values;
    double beta = 0.0;

    Potential() = default;

    Potential(int lo_, int hi_, std::vector<double> values_, double beta_ = 0.0)
        : lo(lo_), hi(hi_), values(std::move(values_)), beta(beta_)
    {
        validate();
    }

    /// c * delta_0.
    static Potential delta(double c, double beta = 1e9) { return Potential(0, 0, {c}, beta); }

    void validate() const
    {
        detail::require(hi >= lo, "Potential: support must satisfy lo <= hi");
        detail::require(values.size() == static_cast<std::size_t>(hi - lo + 1),
                        "Potential: values length must match the support interval");
        bool any_nonzero = false;
        for (double x : values)
        {
            detail::require(std::isfinite(x), "Potential: values must be finite");
            any_nonzero = any_nonzero || x != 0.0;
        }
        detail::require(any_nonzero, "Potential: at least one entry must be nonzero");
    }

    int support_radius() const { return std::max(std::abs(lo), std::abs(hi)); }

    double operator()(int n) const
    {
        if (n < lo || n > hi)
            return 0.0;
        return values[static_cast<std::size_t>(n - lo)];
    }

    double l1_norm() const
    {
        double s = 0.0;
        for (double x : values)
            s += std::abs(x);
        return s;
    }

    bool nonnegative() const
    {
        return std::all_of(values.begin(), values.end(), [](double x) { return x >= 0.0; });
    }
};

/// Potential on [-radius, radius] with entries uniform in [-amplitude, amplitude].
inline Potential random_potential(int radius, double amplitude, std::uint64_t seed, double beta = 1e9)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-amplitude, amplitude);
    std::vector<double> values(static_cast<std::size_t>(2 * radius + 1));
    for (auto& x : values)
        x = u(rng);
    return Potential(-radius, radius, std::move(values), beta);
}

/// Dense Delta^2 + diag(V) on [-N, N]. A null potential gives the free operator.
inline RealOperator build_hamiltonian(const Potential* V, int radius, Boundary mode = Boundary::dirichlet)
{
    if (V)
        detail::require(radius >= V->support_radius() + 2,
                        "build_hamiltonian: window smaller than potential support + 2");
    RealOperator H = bilaplacian_matrix(radius, mode);
    if (V)
        for (int n = V->lo; n <= V->hi; ++n)
            H.entries(n + radius, n + radius) += (*V)(n);
    return H;
}

inline RealOperator build_hamiltonian(const Potential& V, int radius, Boundary mode = Boundary::dirichlet)
{
    return build_hamiltonian(&V, radius, mode);
}

} // namespace bischrod
