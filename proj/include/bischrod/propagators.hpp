#pragma once
//
// Propagators of Delta^2 + V on Z by two independent routes:
//   * spectral calculus on the truncated Hamiltonian (one dense diagonalization);
//   * Stone's formula with the closed-form boundary resolvents,
//       e^{-itH} P_ac(H)(n, m) = (2 / pi i) int_0^2 e^{-it mu^4} mu^3 [R_V^+ - R_V^-](mu^4, n, m) dmu,
//     and the half-wave variant with e^{-it mu^2}.
// Free kernels on the whole lattice come from the periodic trapezoid rule (FFT).
//

#include <bischrod/lap_oracle.hpp>
#include <bischrod/oscillatory.hpp>
#include <bischrod/perturbed_spectral.hpp>

#include <Eigen/Dense>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace bischrod {

enum class PropagatorKind { schrodinger_H, schrodinger_free_laplacian, schrodinger_free_bilaplacian, beam_cos, beam_sinc };

/// Group-speed bound with the safety factor applied in window checks.
inline constexpr double window_speed = 1.2 * max_group_speed;

inline int required_window(int observe_radius, double t)
{
    return observe_radius + static_cast<int>(std::ceil(window_speed * std::abs(t))) + 2;
}

struct PropagatorRequest
{
    PropagatorKind kind = PropagatorKind::schrodinger_H;
    std::optional<Potential> V;
    double t = 0.0;
    int window_radius = 64;
    int observe_radius = 8;

    void validate() const
    {
        detail::require(std::isfinite(t), "PropagatorRequest: t must be finite");
        detail::require(observe_radius >= 0 && window_radius >= 2, "PropagatorRequest: radii must be nonnegative");
        detail::require(observe_radius + window_speed * std::abs(t) <= window_radius,
                        "PropagatorRequest: window too small for t (N_obs + 1.2 * 6 sqrt 3 |t| > N)");
        if (V)
            detail::require(window_radius >= V->support_radius() + 2, "PropagatorRequest: window smaller than potential support");
    }
};

/// f(lambda) for the requested propagator; sqrt(lambda) = i sqrt|lambda| for lambda < 0.
inline complex spectral_function(PropagatorKind kind, double t, double lambda)
{
    switch (kind)
    {
    case PropagatorKind::beam_cos:
        return lambda >= 0.0 ? std::cos(t * std::sqrt(lambda)) : std::cosh(t * std::sqrt(-lambda));
    case PropagatorKind::beam_sinc:
    {
        const double x = t * t * lambda;
        if (std::abs(x) < 1e-4)
            return 1.0 - x / 6.0 + x * x / 120.0;
        return lambda >= 0.0 ? std::sin(t * std::sqrt(lambda)) / (t * std::sqrt(lambda))
                             : std::sinh(t * std::sqrt(-lambda)) / (t * std::sqrt(-lambda));
    }
    default:
        return std::exp(complex(0.0, -t * lambda));
    }
}

/// Bound state of Delta^2 + V on Z, resolved on a banded Dirichlet window [-radius, radius]
/// wide enough that |phi| has decayed below the requested tail at the boundary.
struct LatticeBoundState
{
    double energy = 0.0;
    int radius = 0;
    Eigen::VectorXd phi;  // unit norm, sign fixed by the largest entry
    double tail = 0.0;    // max |phi| over the outermost four sites

    double operator()(int n) const { return std::abs(n) <= radius ? phi(n + radius) : 0.0; }
};

namespace detail {

/// Eigenvalues of the Dirichlet-truncated Delta^2 + V in (vl, vu], banded (kd = 2).
inline std::vector<double> banded_eigenvalues(const Potential& V, int R, double vl, double vu)
{
    const int n = 2 * R + 1;
    std::vector<double> ab(static_cast<std::size_t>(3 * n), 0.0);
    for (int j = 0; j < n; ++j)
    {
        ab[static_cast<std::size_t>(2 + 3 * j)] = 6.0 + V(j - R);
        if (j >= 1)
            ab[static_cast<std::size_t>(1 + 3 * j)] = -4.0;
        if (j >= 2)
            ab[static_cast<std::size_t>(3 * j)] = 1.0;
    }
    std::vector<double> w(static_cast<std::size_t>(n)), q(1), z(1);
    std::vector<lapack_int> ifail(static_cast<std::size_t>(n));
    lapack_int m = 0;
    const lapack_int info = LAPACKE_dsbevx(LAPACK_COL_MAJOR, 'N', 'V', 'U', n, 2, ab.data(), 3, q.data(), 1, vl, vu, 0, 0,
                                           2.0 * LAPACKE_dlamch('S'), &m, w.data(), z.data(), 1, ifail.data());
    if (info != 0)
        throw NumericalFailure("banded_eigenvalues: dsbevx failed with info " + std::to_string(info));
    w.resize(static_cast<std::size_t>(m));
    return w;
}

/// Inverse iteration for the eigenvector of the truncated Delta^2 + V nearest to E.
inline Eigen::VectorXd banded_inverse_iteration(const Potential& V, int R, double& E)
{
    const int n = 2 * R + 1, kl = 2, ku = 2, ld = 2 * kl + ku + 1;
    constexpr double stencil[5] = {1.0, -4.0, 6.0, -4.0, 1.0};
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i)
        x(i) = 1.0 + 0.25 * std::sin(1.7 * i);
    x.normalize();
    auto apply = [&](const Eigen::VectorXd& y) {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i)
        {
            for (int k = -2; k <= 2; ++k)
                if (i + k >= 0 && i + k < n)
                    out(i) += stencil[k + 2] * y(i + k);
            out(i) += V(i - R) * y(i);
        }
        return out;
    };
    for (int pass = 0; pass < 2; ++pass)
    {
        const double shift = E * (1.0 + 4.0 * std::numeric_limits<double>::epsilon()) + 1e-300;
        std::vector<double> ab(static_cast<std::size_t>(ld * n), 0.0);
        for (int j = 0; j < n; ++j)
            for (int i = std::max(0, j - ku); i <= std::min(n - 1, j + kl); ++i)
            {
                double a = stencil[i - j + 2];
                if (i == j)
                    a += V(j - R) - shift;
                ab[static_cast<std::size_t>(kl + ku + i - j + ld * j)] = a;
            }
        std::vector<lapack_int> ipiv(static_cast<std::size_t>(n));
        if (LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n, n, kl, ku, ab.data(), ld, ipiv.data()) < 0)
            throw NumericalFailure("banded_inverse_iteration: dgbtrf failed");
        for (int it = 0; it < 3; ++it)
        {
            LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n, kl, ku, 1, ab.data(), ld, ipiv.data(), x.data(), n);
            x.normalize();
        }
        E = x.dot(apply(x));
    }
    Eigen::Index imax = 0;
    x.cwiseAbs().maxCoeff(&imax);
    if (x(imax) < 0.0)
        x = -x;
    return x;
}

} // namespace detail

/// Bound states of Delta^2 + V (energies outside [0, 16]). The Dirichlet window is doubled
/// until every state has decayed below `tail` at its edge and the count is stable; truncated
/// eigenvalues outside the band are genuine by interlacing.
inline std::vector<LatticeBoundState> lattice_bound_states(const Potential* V, double tail = 1e-12, int start_radius = 512,
                                                           int max_radius = 1 << 19)
{
    if (!V)
        return {};
    double vmax = 0.0;
    for (double x : V->values)
        vmax = std::max(vmax, std::abs(x));
    int R = std::max(start_radius, 4 * V->support_radius() + 8);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (;;)
    {
        auto below = detail::banded_eigenvalues(*V, R, -vmax - 1.0, 0.0);
        const auto above = detail::banded_eigenvalues(*V, R, 16.0, 16.0 + vmax + 1.0);
        below.insert(below.end(), above.begin(), above.end());
        std::vector<LatticeBoundState> out;
        double worst = 0.0;
        for (double E : below)
        {
            LatticeBoundState b;
            b.energy = E;
            b.radius = R;
            b.phi = detail::banded_inverse_iteration(*V, R, b.energy);
            for (int r = 0; r < 4; ++r)
                b.tail = std::max({b.tail, std::abs(b.phi(r)), std::abs(b.phi(2 * R - r))});
            worst = std::max(worst, b.tail);
            out.push_back(std::move(b));
        }
        if ((worst <= tail && out.size() == prev) || 2 * R > max_radius)
            return out;
        prev = out.size();
        R *= 2;
    }
}

/// Truncated Hamiltonian diagonalized once; kernels and evolutions for any t.
/// The ac part subtracts the bound states of the infinite lattice, which may be far wider than the window.
class SpectralPropagator
{
public:
    /// `laplacian` selects -Delta instead of Delta^2 + V.
    SpectralPropagator(const Potential* V, int radius, bool laplacian = false)
        : radius_(radius)
    {
        detail::require(!(laplacian && V), "SpectralPropagator: the Laplacian path is free only");
        const RealOperator H = laplacian ? neg_laplacian_matrix(radius) : build_hamiltonian(V, radius);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.entries);
        values_ = es.eigenvalues();
        vectors_ = es.eigenvectors();
        const double top = laplacian ? 4.0 : 16.0;
        for (Eigen::Index i = 0; i < values_.size(); ++i)
        {
            const double e = values_(i);
            if (e > band_margin && e < top - band_margin &&
                detail::localization_ratio(vectors_.col(i), radius) >= localization_threshold)
                embedded_.push_back(i);
        }
        bound_ = lattice_bound_states(V);
        bound_rows_.resize(2 * radius + 1, static_cast<Eigen::Index>(bound_.size()));
        for (std::size_t k = 0; k < bound_.size(); ++k)
            for (int n = -radius; n <= radius; ++n)
                bound_rows_(n + radius, static_cast<Eigen::Index>(k)) = bound_[k](n);
    }

    int radius() const { return radius_; }
    const Eigen::VectorXd& eigenvalues() const { return values_; }
    const Eigen::MatrixXd& eigenvectors() const { return vectors_; }
    const std::vector<LatticeBoundState>& bound_states() const { return bound_; }
    /// interior eigenvalues with localized eigenvectors at this N
    const std::vector<Eigen::Index>& embedded_candidates() const { return embedded_; }

    /// Kernel f(H)(n, m) for n, m in [-N_obs, N_obs]; ac_only removes bound states.
    Eigen::MatrixXcd kernel(PropagatorKind kind, double t, int observe_radius, bool ac_only = true) const
    {
        detail::require(observe_radius + window_speed * std::abs(t) <= radius_,
                        "SpectralPropagator::kernel: window too small for t");
        const Eigen::Index w = 2 * observe_radius + 1;
        const Eigen::MatrixXd rows = vectors_.middleRows(radius_ - observe_radius, w);
        Eigen::VectorXcd f(values_.size());
        for (Eigen::Index i = 0; i < values_.size(); ++i)
            f(i) = spectral_function(kind, t, values_(i));
        Eigen::MatrixXcd K = rows.cast<complex>() * f.asDiagonal() * rows.transpose().cast<complex>();
        if (ac_only)
        {
            const Eigen::MatrixXd B = bound_rows_.middleRows(radius_ - observe_radius, w);
            for (std::size_t k = 0; k < bound_.size(); ++k)
            {
                const auto col = B.col(static_cast<Eigen::Index>(k));
                K -= spectral_function(kind, t, bound_[k].energy) * (col * col.transpose()).cast<complex>();
            }
        }
        return K;
    }

    /// f(H) psi0 on the whole window.
    LatticeVector evolve(PropagatorKind kind, double t, const LatticeVector& psi0, bool ac_only = false) const
    {
        detail::require(psi0.radius() == radius_, "SpectralPropagator::evolve: window mismatch");
        const Eigen::VectorXcd x = psi0.to_eigen();
        Eigen::VectorXcd c = vectors_.transpose().cast<complex>() * x;
        for (Eigen::Index i = 0; i < c.size(); ++i)
            c(i) *= spectral_function(kind, t, values_(i));
        Eigen::VectorXcd out = vectors_.cast<complex>() * c;
        if (ac_only)
            for (std::size_t k = 0; k < bound_.size(); ++k)
            {
                const Eigen::VectorXcd col = bound_rows_.col(static_cast<Eigen::Index>(k)).cast<complex>();
                out -= spectral_function(kind, t, bound_[k].energy) * col.dot(x) * col;
            }
        return LatticeVector::from_eigen(radius_, out);
    }

    struct BeamState
    {
        Eigen::VectorXd v, v_t;
    };

    /// v(t) = cos(t sqrt H) v0 + sin(t sqrt H)/sqrt H v1 and its time derivative.
    BeamState evolve_beam(const Eigen::VectorXd& v0, const Eigen::VectorXd& v1, double t) const
    {
        const Eigen::VectorXd a = vectors_.transpose() * v0, b = vectors_.transpose() * v1;
        Eigen::VectorXd c(a.size()), ct(a.size());
        for (Eigen::Index i = 0; i < a.size(); ++i)
        {
            const double lam = values_(i);
            const double co = spectral_function(PropagatorKind::beam_cos, t, lam).real();
            const double si = spectral_function(PropagatorKind::beam_sinc, t, lam).real();
            c(i) = co * a(i) + t * si * b(i);
            ct(i) = -t * lam * si * a(i) + co * b(i);
        }
        return {vectors_ * c, vectors_ * ct};
    }

    double energy(const BeamState& s) const
    {
        const Eigen::VectorXd a = vectors_.transpose() * s.v;
        return s.v_t.squaredNorm() + (values_.array() * a.array().square()).sum();
    }

private:
    int radius_;
    Eigen::VectorXd values_;
    Eigen::MatrixXd vectors_;
    std::vector<LatticeBoundState> bound_;
    Eigen::MatrixXd bound_rows_;
    std::vector<Eigen::Index> embedded_;
};

struct PacSplit
{
    std::vector<LatticeBoundState> bound;
    Eigen::MatrixXd pac;  // I - sum_j phi_j phi_j^T restricted to [-N, N]
    bool embedded_warning = false;
    std::string warning;
};

/// P_ac(H) on [-N, N] as the complement of the bound states.
inline PacSplit pac_split(const Potential* V, int N)
{
    SpectralPropagator sp(V, N);
    PacSplit out;
    out.bound = sp.bound_states();
    const Eigen::Index dim = 2 * N + 1;
    out.pac = Eigen::MatrixXd::Identity(dim, dim);
    for (const auto& b : out.bound)
    {
        Eigen::VectorXd col(dim);
        for (int n = -N; n <= N; ++n)
            col(n + N) = b(n);
        out.pac -= col * col.transpose();
    }
    if (!sp.embedded_candidates().empty())
    {
        out.embedded_warning = true;
        out.warning = "localized interior eigenstates found; the no-embedded-eigenvalue hypothesis may fail";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Free kernels on the whole lattice

namespace detail {

// the FFTW planner is not thread safe
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

struct FftwPlan
{
    fftw_plan plan = nullptr;
    FftwPlan(int L, complex* data, int direction)
    {
        std::lock_guard lock(fftw_planner_mutex());
        auto* p = reinterpret_cast<fftw_complex*>(data);
        plan = fftw_plan_dft_1d(L, p, p, direction, FFTW_ESTIMATE);
    }
    FftwPlan(const FftwPlan&) = delete;
    FftwPlan& operator=(const FftwPlan&) = delete;
    ~FftwPlan()
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    void execute() const { fftw_execute(plan); }
};

} // namespace detail

enum class FreeKind { laplacian, bilaplacian, beam_cos, beam_sinc };

inline double free_symbol_value(FreeKind kind, double t, double x, complex& out)
{
    const double w = 2.0 - 2.0 * std::cos(x);
    switch (kind)
    {
    case FreeKind::laplacian: out = std::exp(complex(0.0, -t * w)); break;
    case FreeKind::bilaplacian: out = std::exp(complex(0.0, -t * w * w)); break;
    case FreeKind::beam_cos: out = std::cos(t * w); break;
    case FreeKind::beam_sinc:
    {
        const double y = t * w;
        out = std::abs(y) < 1e-3 ? 1.0 - y * y / 6.0 + y * y * y * y / 120.0 : std::sin(y) / y;
        break;
    }
    }
    return w;
}

/// Ring length for which the periodic trapezoid rule is exact up to super-exponentially
/// small aliasing: 2.6 * 6 sqrt 3 |t| plus margin, rounded up to a power of two.
inline int free_ring_length(double t, int min_length = 256)
{
    const double need = 2.6 * max_group_speed * std::abs(t) + 256.0;
    int L = min_length;
    while (L < need)
        L *= 2;
    return L;
}

/// K(d) = (1/2pi) int_{-pi}^{pi} f(t, x) e^{i d x} dx for d = 0..L-1 (negative d wrapped),
/// by the L-point periodic trapezoid rule.
inline std::vector<complex> free_kernel_fft(FreeKind kind, double t, int L)
{
    detail::require(L >= 8, "free_kernel_fft: ring too short");
    std::vector<complex> data(static_cast<std::size_t>(L));
    for (int k = 0; k < L; ++k)
    {
        complex v;
        free_symbol_value(kind, t, 2.0 * std::numbers::pi * k / L, v);
        data[static_cast<std::size_t>(k)] = v / static_cast<double>(L);
    }
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        plan = fftw_plan_dft_1d(L, ptr, ptr, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
    return data;
}

/// sup over all displacements of the free kernel at time t.
inline double free_kernel_sup(FreeKind kind, double t)
{
    const auto K = free_kernel_fft(kind, t, free_ring_length(t));
    double m = 0.0;
    for (const auto& z : K)
        m = std::max(m, std::abs(z));
    return m;
}

/// Free kernel value at displacement d (|d| small against the ring).
inline complex free_kernel_value(FreeKind kind, double t, int d)
{
    const int L = free_ring_length(t, std::max(256, 4 * std::abs(d)));
    const auto K = free_kernel_fft(kind, t, L);
    return K[static_cast<std::size_t>(((d % L) + L) % L)];
}

// ---------------------------------------------------------------------------
// Stone's formula

enum class StoneKind { schrodinger, halfwave, beam_cos, beam_sinc };

struct StoneOptions
{
    double tol = 1e-9;
    double phase_budget = 2.0;
    double endpoint_cutoff = 1e-4;  // used only when a threshold is not regular
    std::size_t max_panels = 8'000'000;
};

struct StoneResult
{
    Eigen::MatrixXcd kernel;  // rows x cols
    double error = 0.0;
    bool converged = true;
    bool truncated = false;   // endpoint cutoff applied
    std::size_t panels = 0;
};

namespace detail {

/// mu^3 R_0^+(mu^4, d) for d = 0..dmax at theta = theta_+(mu^2) in (-pi, 0), written
/// in theta so that neither endpoint loses precision.
inline void scaled_free_values(double theta, const std::vector<int>& dist, std::vector<complex>& out)
{
    const double mu = -2.0 * std::sin(0.5 * theta);
    const double c = std::cos(0.5 * theta);
    const double b = -2.0 * std::asinh(0.5 * mu);
    const double e = std::sqrt(1.0 + 0.25 * mu * mu);
    const complex I(0.0, 1.0);
    const complex step = std::exp(-I * theta);
    const double decay = std::exp(b);
    out.resize(dist.size());
    complex wave = 1.0;
    double ev = 1.0;
    int run = 0;
    for (std::size_t i = 0; i < dist.size(); ++i)
    {
        const int d = dist[i];
        if (i == 0 || d != dist[i - 1] + 1 || ++run % 64 == 0)
        {
            wave = std::exp(-I * theta * static_cast<double>(d));
            ev = std::exp(b * d);
            run = 0;
        }
        else
        {
            wave *= step;
            ev *= decay;
        }
        out[i] = 0.25 * (I * wave / c - ev / e);
    }
}

/// Sorted distinct |d| with a lookup for the Stone integrand.
struct DistanceTable
{
    std::vector<int> dist;

    void add(int d) { dist.push_back(std::abs(d)); }
    void finalize()
    {
        std::sort(dist.begin(), dist.end());
        dist.erase(std::unique(dist.begin(), dist.end()), dist.end());
    }
    std::size_t index(int d) const
    {
        return static_cast<std::size_t>(std::lower_bound(dist.begin(), dist.end(), std::abs(d)) - dist.begin());
    }
};

} // namespace detail

/// Stone-formula kernel block for real V (null for the free operator).
inline StoneResult stone_kernel_block(const Potential* V, StoneKind kind, double t, const std::vector<int>& rows,
                                      const std::vector<int>& cols, const StoneOptions& opt = {})
{
    detail::require(std::isfinite(t), "stone_kernel_block: t must be finite");
    detail::require(!rows.empty() && !cols.empty(), "stone_kernel_block: empty site lists");
    const double pi = std::numbers::pi;
    BirmanSchwingerSystem sys;
    bool regular = true;
    if (V)
    {
        sys = decompose_potential(*V);
        regular = regular_point_check(sys, Threshold::zero).is_regular && regular_point_check(sys, Threshold::sixteen).is_regular;
    }
    const Eigen::Index k = sys.dim();

    detail::DistanceTable table;
    for (int n : rows)
        for (int m : cols)
            table.add(n - m);
    for (int a : sys.sites)
    {
        for (int b : sys.sites)
            table.add(a - b);
        for (int n : rows)
            table.add(n - a);
        for (int m : cols)
            table.add(m - a);
    }
    table.finalize();
    const int dmax = table.dist.back();

    double th_lo = -pi, th_hi = 0.0;
    StoneResult res;
    if (!regular)
    {
        th_lo = -2.0 * std::asin(0.5 * (2.0 - opt.endpoint_cutoff));
        th_hi = -2.0 * std::asin(0.5 * opt.endpoint_cutoff);
        res.truncated = true;
    }

    const Eigen::Index nr = static_cast<Eigen::Index>(rows.size()), nc = static_cast<Eigen::Index>(cols.size());
    std::vector<complex> vals;
    Eigen::MatrixXcd L(nr, k), Rt(k, nc), Ms(k, k);
    std::vector<std::size_t> ix(static_cast<std::size_t>(nr * nc)), il(static_cast<std::size_t>(nr * k)),
        ir(static_cast<std::size_t>(k * nc)), im(static_cast<std::size_t>(k * k));
    for (Eigen::Index j = 0; j < nc; ++j)
        for (Eigen::Index i = 0; i < nr; ++i)
            ix[static_cast<std::size_t>(i + j * nr)] = table.index(rows[i] - cols[j]);
    for (Eigen::Index a = 0; a < k; ++a)
    {
        for (Eigen::Index b = 0; b < k; ++b)
            im[static_cast<std::size_t>(a + b * k)] = table.index(sys.sites[a] - sys.sites[b]);
        for (Eigen::Index i = 0; i < nr; ++i)
            il[static_cast<std::size_t>(i + a * nr)] = table.index(rows[i] - sys.sites[a]);
        for (Eigen::Index j = 0; j < nc; ++j)
            ir[static_cast<std::size_t>(a + j * k)] = table.index(sys.sites[a] - cols[j]);
    }

    auto phase_weight = [&](double theta) -> complex {
        const double lam = 2.0 - 2.0 * std::cos(theta); // mu^2
        switch (kind)
        {
        case StoneKind::schrodinger: return std::exp(complex(0.0, -t * lam * lam));
        case StoneKind::halfwave: return std::exp(complex(0.0, -t * lam));
        case StoneKind::beam_cos: return std::cos(t * lam);
        case StoneKind::beam_sinc:
        {
            const double x = t * lam;
            return std::abs(x) < 1e-3 ? 1.0 - x * x / 6.0 + x * x * x * x / 120.0 : std::sin(x) / x;
        }
        }
        return 0.0;
    };

    auto integrand = [&](double theta) {
        detail::scaled_free_values(theta, table.dist, vals);
        Eigen::MatrixXcd X(nr, nc);
        for (Eigen::Index j = 0; j < nc; ++j)
            for (Eigen::Index i = 0; i < nr; ++i)
                X(i, j) = vals[ix[static_cast<std::size_t>(i + j * nr)]];
        if (k > 0)
        {
            const double mu = -2.0 * std::sin(0.5 * theta);
            const double mu3 = mu * mu * mu;
            for (Eigen::Index a = 0; a < k; ++a)
            {
                for (Eigen::Index b = 0; b < k; ++b)
                    Ms(a, b) = sys.v(a) * sys.v(b) * vals[im[static_cast<std::size_t>(a + b * k)]];
                Ms(a, a) += mu3 * sys.U(a);
                for (Eigen::Index i = 0; i < nr; ++i)
                    L(i, a) = vals[il[static_cast<std::size_t>(i + a * nr)]] * sys.v(a);
                for (Eigen::Index j = 0; j < nc; ++j)
                    Rt(a, j) = sys.v(a) * vals[ir[static_cast<std::size_t>(a + j * k)]];
            }
            Eigen::PartialPivLU<Eigen::MatrixXcd> lu(Ms);
            if (!(lu.rcond() > 1e-15))
                throw NumericalFailure("stone_kernel_block: M(mu) singular at mu = " + std::to_string(mu));
            X -= L * lu.solve(Rt);
        }
        // (2 / pi i) * 2i Im(mu^3 R_V^+) * dmu/dtheta, dmu = cos(theta/2) |dtheta|
        const double jac = 4.0 / pi * std::cos(0.5 * theta);
        const complex w = phase_weight(theta) * jac;
        Eigen::VectorXcd out(nr * nc);
        for (Eigen::Index j = 0; j < nc; ++j)
            for (Eigen::Index i = 0; i < nr; ++i)
                out(i + j * nr) = w * X(i, j).imag();
        return out;
    };

    const double abs_t = std::abs(t);
    auto rate = [&](double x0, double x1) {
        const double h = x1 - x0;
        double slope = 0.0, curv = 0.0;
        for (double x : {x0, x1, 0.5 * (x0 + x1)})
        {
            if (kind == StoneKind::schrodinger)
                slope = std::max(slope, std::abs(8.0 * (1.0 - std::cos(x)) * std::sin(x)));
            else
                slope = std::max(slope, std::abs(2.0 * std::sin(x)));
        }
        curv = kind == StoneKind::schrodinger ? 32.0 : 2.0;
        return abs_t * (slope + 0.5 * curv * h) + dmax;
    };

    PanelOptions popt;
    popt.tol = opt.tol;
    popt.phase_budget = opt.phase_budget;
    popt.max_panels = opt.max_panels;
    std::vector<double> cuts{th_lo, th_hi};
    if (kind == StoneKind::schrodinger)
        cuts.push_back(-2.0 * pi / 3.0);
    const auto pr = adaptive_panel_integral(integrand, rate, cuts, nr * nc, popt);
    res.kernel.resize(nr, nc);
    for (Eigen::Index j = 0; j < nc; ++j)
        for (Eigen::Index i = 0; i < nr; ++i)
            res.kernel(i, j) = pr.value(i + j * nr);
    res.error = pr.error;
    res.converged = pr.converged;
    res.panels = pr.panels;
    return res;
}

inline std::vector<int> window_sites(int observe_radius)
{
    std::vector<int> s;
    for (int n = -observe_radius; n <= observe_radius; ++n)
        s.push_back(n);
    return s;
}

struct GlobalSupOptions
{
    int observe_radius = 4;
    double scale_factor = 3.0;  // search half-width around the support in units of t^{1/4}
    StoneOptions stone{};
};

struct GlobalSupResult
{
    double sup = 0.0;
    int n = 0, m = 0;
    int search_radius = 0;
    double error = 0.0;
    bool converged = true;
    bool truncated = false;
};

/// sup over (n, m) of |e^{-itH} P_ac(H)(n, m)| by Stone's formula on a search set. The free
/// maximum sits near the diagonal with low-frequency width ~ t^{1/4}; the set is the square of
/// half-width scale_factor * t^{1/4} around the support (direct plus reflected waves) and a
/// diagonal block far enough away that the potential is not yet felt.
inline GlobalSupResult stone_global_sup(const Potential* V, double t, const GlobalSupOptions& opt = {})
{
    detail::require(t > 0.0 && std::isfinite(t), "stone_global_sup: t must be positive");
    const int lo = V ? V->lo : 0, hi = V ? V->hi : 0;
    const int W = std::max(opt.observe_radius, static_cast<int>(std::ceil(opt.scale_factor * std::pow(t, 0.25))) + 4);

    GlobalSupResult out;
    out.search_radius = W;
    auto scan = [&](const std::vector<int>& rows, const std::vector<int>& cols) {
        const auto r = stone_kernel_block(V, StoneKind::schrodinger, t, rows, cols, opt.stone);
        out.error = std::max(out.error, r.error);
        out.converged = out.converged && r.converged;
        out.truncated = out.truncated || r.truncated;
        for (Eigen::Index j = 0; j < r.kernel.cols(); ++j)
            for (Eigen::Index i = 0; i < r.kernel.rows(); ++i)
                if (std::abs(r.kernel(i, j)) > out.sup)
                {
                    out.sup = std::abs(r.kernel(i, j));
                    out.n = rows[static_cast<std::size_t>(i)];
                    out.m = cols[static_cast<std::size_t>(j)];
                }
    };

    std::vector<int> square;
    for (int x = lo - W; x <= hi + W; ++x)
        square.push_back(x);
    scan(square, square);

    const int far = lo - 4 * W - 64;
    std::vector<int> far_rows;
    for (int d = -W; d <= W; ++d)
        far_rows.push_back(far + d);
    scan(far_rows, {far});
    return out;
}

inline complex stone_kernel_schrodinger(double t, const Potential* V, int n, int m, const StoneOptions& opt = {})
{
    return stone_kernel_block(V, StoneKind::schrodinger, t, {n}, {m}, opt).kernel(0, 0);
}

inline complex stone_kernel_halfwave(double t, const Potential* V, int n, int m, const StoneOptions& opt = {})
{
    return stone_kernel_block(V, StoneKind::halfwave, t, {n}, {m}, opt).kernel(0, 0);
}

/// cos(t sqrt H) P_ac from half-wave kernels at +t and -t.
inline complex stone_kernel_beam_cos(double t, const Potential* V, int n, int m, const StoneOptions& opt = {})
{
    return 0.5 * (stone_kernel_halfwave(t, V, n, m, opt) + stone_kernel_halfwave(-t, V, n, m, opt));
}

/// max |kernel(t, n, m)| over (n, m) in the observation window.
inline double sup_norm_kernel(const PropagatorRequest& req)
{
    req.validate();
    const int W = req.observe_radius;
    if (!req.V && req.kind != PropagatorKind::schrodinger_H)
    {
        FreeKind fk = FreeKind::bilaplacian;
        if (req.kind == PropagatorKind::schrodinger_free_laplacian)
            fk = FreeKind::laplacian;
        else if (req.kind == PropagatorKind::beam_cos)
            fk = FreeKind::beam_cos;
        else if (req.kind == PropagatorKind::beam_sinc)
            fk = FreeKind::beam_sinc;
        const int L = free_ring_length(req.t, std::max(256, 8 * W));
        const auto K = free_kernel_fft(fk, req.t, L);
        double m = 0.0;
        for (int d = -2 * W; d <= 2 * W; ++d)
            m = std::max(m, std::abs(K[static_cast<std::size_t>(((d % L) + L) % L)]));
        return m;
    }
    const Potential* V = req.V ? &*req.V : nullptr;
    const bool lap = req.kind == PropagatorKind::schrodinger_free_laplacian;
    SpectralPropagator sp(lap ? nullptr : V, req.window_radius, lap);
    PropagatorKind kind = req.kind;
    if (kind == PropagatorKind::schrodinger_free_bilaplacian || kind == PropagatorKind::schrodinger_free_laplacian)
        kind = PropagatorKind::schrodinger_H;
    return sp.kernel(kind, req.t, W).cwiseAbs().maxCoeff();
}

/// evolve_spectral for a single request.
inline LatticeVector evolve_spectral(const PropagatorRequest& req, const LatticeVector& psi0)
{
    req.validate();
    detail::require(psi0.radius() == req.window_radius, "evolve_spectral: psi0 must live on the request window");
    const bool lap = req.kind == PropagatorKind::schrodinger_free_laplacian;
    const bool free_kind = lap || req.kind == PropagatorKind::schrodinger_free_bilaplacian;
    const Potential* V = (req.V && !free_kind) ? &*req.V : nullptr;
    SpectralPropagator sp(V, req.window_radius, lap);
    PropagatorKind kind = free_kind ? PropagatorKind::schrodinger_H : req.kind;
    return sp.evolve(kind, req.t, psi0);
}

} // namespace bischrod
