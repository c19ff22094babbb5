#pragma once
//
// Birman-Schwinger system of H = Delta^2 + V on the support of V:
//
//   M^{+/-}(mu) = U + v R_0^{+/-}(mu^4) v,   v = |V|^{1/2},  U = sign V,
//   R_V^{+/-}(mu^4) = R_0 - R_0 v (M^{+/-}(mu))^{-1} v R_0,
//
// threshold projections, regularity tests at 0 and 16, and eigenvalue scans of
// the truncated Hamiltonian.
//

#include <bischrod/free_resolvent.hpp>
#include <bischrod/potential.hpp>
#include <bischrod/threshold_expansion.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace bischrod {

struct BirmanSchwingerSystem
{
    std::vector<int> sites;   // lattice sites with V(n) != 0
    Eigen::VectorXd v;        // |V(n)|^{1/2}
    Eigen::VectorXd U;        // sign V(n)

    Eigen::Index dim() const { return v.size(); }
};

/// Sites where V vanishes are dropped: they carry v = 0 and do not enter any v X v product.
inline BirmanSchwingerSystem decompose_potential(const Potential& V)
{
    V.validate();
    BirmanSchwingerSystem sys;
    std::vector<double> v, u;
    for (int n = V.lo; n <= V.hi; ++n)
    {
        const double x = V(n);
        if (x == 0.0)
            continue;
        sys.sites.push_back(n);
        v.push_back(std::sqrt(std::abs(x)));
        u.push_back(x > 0.0 ? 1.0 : -1.0);
    }
    sys.v = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    sys.U = Eigen::Map<Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
    return sys;
}

namespace detail {

template <class Kernel>
Eigen::MatrixXd support_kernel_matrix(const BirmanSchwingerSystem& sys, Kernel&& k)
{
    const Eigen::Index n = sys.dim();
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b)
            out(a, b) = sys.v(a) * sys.v(b) * k(std::abs(sys.sites[a] - sys.sites[b]));
    return out;
}

} // namespace detail

inline Eigen::MatrixXcd build_M(double mu, Sign sign, const BirmanSchwingerSystem& sys)
{
    detail::require(mu > 0.0 && mu < 2.0, "build_M: mu must lie in (0, 2)");
    const Eigen::Index n = sys.dim();
    Eigen::MatrixXcd M(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b)
            M(a, b) = sys.v(a) * free_biresolvent_boundary(mu, sign, sys.sites[a] - sys.sites[b]) * sys.v(b);
    M.diagonal() += sys.U.cast<complex>();
    return M;
}

/// M^{+/-}(2 - delta) evaluated through nu = delta^{1/2}, free of the cancellation in 1 - mu^2/4.
inline Eigen::MatrixXcd build_M_near_sixteen(double delta, Sign sign, const BirmanSchwingerSystem& sys)
{
    detail::require(delta > 0.0 && delta < 2.0, "build_M_near_sixteen: distance must lie in (0, 2)");
    const complex nu(std::sqrt(delta), 0.0);
    const Eigen::Index n = sys.dim();
    Eigen::MatrixXcd M(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b)
            M(a, b) = sys.v(a) * sys.v(b) * free_biresolvent_analytic_sixteen<double>(nu, sign, sys.sites[a] - sys.sites[b]);
    M.diagonal() += sys.U.cast<complex>();
    return M;
}

inline Eigen::MatrixXcd build_M(const SpectralParam& p, const BirmanSchwingerSystem& sys)
{
    return build_M(p.mu, p.sign, sys);
}

struct ProjectionSet
{
    Eigen::MatrixXd P, Q, S0, Ptilde, Qtilde;
    /// v_1 = n v is parallel to v (single-site support): S0 projects onto {v}^perp only
    bool s0_degenerate = false;
};

namespace detail {

/// Orthonormal basis of span(cols)^perp in R^n.
inline Eigen::MatrixXd orthogonal_complement(const Eigen::MatrixXd& cols, int* rank_out = nullptr)
{
    const Eigen::Index n = cols.rows();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(cols, Eigen::ComputeFullU);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        rank += sv(i) > 1e-12 * sv(0);
    if (rank_out)
        *rank_out = rank;
    return svd.matrixU().rightCols(n - rank);
}

inline Eigen::MatrixXd projector_from_basis(const Eigen::MatrixXd& B, Eigen::Index n)
{
    if (B.cols() == 0)
        return Eigen::MatrixXd::Zero(n, n);
    return B * B.transpose();
}

inline Eigen::VectorXd moment_vector(const BirmanSchwingerSystem& sys)
{
    Eigen::VectorXd v1(sys.dim());
    for (Eigen::Index a = 0; a < sys.dim(); ++a)
        v1(a) = sys.sites[a] * sys.v(a);
    return v1;
}

inline Eigen::VectorXd twisted_vector(const BirmanSchwingerSystem& sys)
{
    Eigen::VectorXd vt(sys.dim());
    for (Eigen::Index a = 0; a < sys.dim(); ++a)
        vt(a) = (sys.sites[a] % 2 == 0 ? 1.0 : -1.0) * sys.v(a);
    return vt;
}

/// Orthonormal basis of ran S0 = {v, n v}^perp.
inline Eigen::MatrixXd s0_basis(const BirmanSchwingerSystem& sys, bool* degenerate = nullptr)
{
    Eigen::MatrixXd cols(sys.dim(), 2);
    cols.col(0) = sys.v;
    cols.col(1) = moment_vector(sys);
    int rank = 0;
    Eigen::MatrixXd B = orthogonal_complement(cols, &rank);
    if (degenerate)
        *degenerate = rank < 2;
    return B;
}

/// Orthonormal basis of ran Qtilde = {J v}^perp.
inline Eigen::MatrixXd qtilde_basis(const BirmanSchwingerSystem& sys)
{
    return orthogonal_complement(twisted_vector(sys));
}

} // namespace detail

inline ProjectionSet build_projections(const BirmanSchwingerSystem& sys)
{
    detail::require(sys.dim() > 0 && sys.v.norm() > 0.0, "build_projections: v must be nonzero");
    const Eigen::Index n = sys.dim();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    ProjectionSet out;
    const double vv = sys.v.squaredNorm();
    out.P = sys.v * sys.v.transpose() / vv;
    out.Q = I - out.P;
    out.S0 = detail::projector_from_basis(detail::s0_basis(sys, &out.s0_degenerate), n);
    const Eigen::VectorXd vt = detail::twisted_vector(sys);
    out.Ptilde = vt * vt.transpose() / vv;
    out.Qtilde = I - out.Ptilde;
    return out;
}

/// T0 = U + v G_0 v with G_0(n, m) = (|n-m|^3 - |n-m|) / 12.
inline Eigen::MatrixXd build_T0(const BirmanSchwingerSystem& sys)
{
    Eigen::MatrixXd T = detail::support_kernel_matrix(sys, [](int d) { return coeff_zero(0, Sign::plus, d, 0).real(); });
    T.diagonal() += sys.U;
    return T;
}

/// Ttilde0 = U + v Gtilde_0 v.
inline Eigen::MatrixXd build_T0_tilde(const BirmanSchwingerSystem& sys)
{
    Eigen::MatrixXd T = detail::support_kernel_matrix(sys, [](int d) { return coeff_sixteen(0, Sign::plus, d, 0).real(); });
    T.diagonal() += sys.U;
    return T;
}

struct RegularPointReport
{
    Threshold threshold;
    double smallest_singular_value; // +inf when the constraint space is empty
    bool is_regular;
    double tolerance_used;
    int range_dimension;
};

/// Invertibility of S0 T0 S0 on ran S0 (threshold zero) or Qt Tt0 Qt on ran Qt
/// (threshold sixteen). tol < 0 selects 1e-8 * ||T||.
inline RegularPointReport regular_point_check(const BirmanSchwingerSystem& sys, Threshold th, double tol = -1.0)
{
    const Eigen::MatrixXd T = th == Threshold::zero ? build_T0(sys) : build_T0_tilde(sys);
    const Eigen::MatrixXd B = th == Threshold::zero ? detail::s0_basis(sys) : detail::qtilde_basis(sys);
    if (tol < 0.0)
        tol = 1e-8 * Eigen::JacobiSVD<Eigen::MatrixXd>(T).singularValues()(0);
    RegularPointReport rep{th, std::numeric_limits<double>::infinity(), true, tol, static_cast<int>(B.cols())};
    if (B.cols() == 0)
        return rep;
    const Eigen::MatrixXd restricted = B.transpose() * T * B;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(restricted);
    rep.smallest_singular_value = svd.singularValues()(svd.singularValues().size() - 1);
    rep.is_regular = rep.smallest_singular_value > tol;
    return rep;
}

inline double smallest_singular_value(const Eigen::MatrixXcd& A)
{
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

/// R_V^{+/-}(mu^4) at a fixed spectral parameter, with M^{-1} factored once.
class PerturbedResolvent
{
public:
    /// A null potential gives the free resolvent.
    PerturbedResolvent(const Potential* V, double mu, Sign sign, double singular_tol = 1e-12)
        : mu_(mu), sign_(sign)
    {
        detail::require(mu > 0.0 && mu < 2.0, "PerturbedResolvent: mu must lie in (0, 2)");
        if (!V)
            return;
        sys_ = decompose_potential(*V);
        const Eigen::MatrixXcd M = build_M(mu, sign, sys_);
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
        const auto& sv = svd.singularValues();
        if (sv(sv.size() - 1) <= singular_tol * sv(0))
            throw NumericalFailure("PerturbedResolvent: M(mu) singular at mu = " + std::to_string(mu) +
                                   "; possible embedded eigenvalue at mu^4");
        Minv_ = M.inverse();
    }

    complex operator()(int n, int m) const
    {
        complex out = free_biresolvent_boundary(mu_, sign_, n - m);
        const Eigen::Index k = sys_.dim();
        if (k == 0)
            return out;
        Eigen::VectorXcd left(k), right(k);
        for (Eigen::Index a = 0; a < k; ++a)
        {
            left(a) = free_biresolvent_boundary(mu_, sign_, n - sys_.sites[a]) * sys_.v(a);
            right(a) = sys_.v(a) * free_biresolvent_boundary(mu_, sign_, sys_.sites[a] - m);
        }
        out -= (left.transpose() * Minv_ * right).value();
        return out;
    }

    /// Kernel block over rows and columns given by site lists.
    Eigen::MatrixXcd block(const std::vector<int>& rows, const std::vector<int>& cols) const
    {
        const Eigen::Index k = sys_.dim();
        Eigen::MatrixXcd out(rows.size(), cols.size());
        Eigen::MatrixXcd L(rows.size(), k), Rt(k, cols.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
        {
            for (std::size_t j = 0; j < cols.size(); ++j)
                out(i, j) = free_biresolvent_boundary(mu_, sign_, rows[i] - cols[j]);
            for (Eigen::Index a = 0; a < k; ++a)
                L(i, a) = free_biresolvent_boundary(mu_, sign_, rows[i] - sys_.sites[a]) * sys_.v(a);
        }
        if (k == 0)
            return out;
        for (Eigen::Index a = 0; a < k; ++a)
            for (std::size_t j = 0; j < cols.size(); ++j)
                Rt(a, j) = sys_.v(a) * free_biresolvent_boundary(mu_, sign_, sys_.sites[a] - cols[j]);
        out -= L * Minv_ * Rt;
        return out;
    }

    const Eigen::MatrixXcd& minv() const { return Minv_; }

private:
    double mu_;
    Sign sign_;
    BirmanSchwingerSystem sys_;
    Eigen::MatrixXcd Minv_;
};

inline complex perturbed_resolvent_boundary(const SpectralParam& p, const Potential& V, int n, int m)
{
    return PerturbedResolvent(&V, p.mu, p.sign)(n, m);
}

struct MinvProbeReport
{
    Threshold threshold;
    bool skipped = false;
    std::string diagnostic;
    std::vector<double> mu;
    std::vector<double> minv_norm;
    std::vector<double> leakage;
    double sup_norm = 0.0;
    double leakage_slope = 0.0;
    double required_slope = 0.0;
};

/// Geometric grid of ratio 2^{1/4}: [1e-3, 1e-1] at zero; [1e-9, 1e-7] at sixteen, where
/// the mu^{-1/2} singular term of M dominates T~0 for potentials of moderate l^1 norm.
inline std::vector<double> default_probe_grid(Threshold th)
{
    const double lo = th == Threshold::zero ? 1e-3 : 1e-9;
    std::vector<double> grid;
    for (double mu = lo; mu <= 100.0 * lo * (1.0 + 1e-12); mu *= std::pow(2.0, 0.25))
        grid.push_back(mu);
    return grid;
}

/// Threshold behavior of (M^+)^{-1}: bounded as mu -> 0 (resp. 2 - mu -> 0), with
/// ||(I - S0) M^{-1}|| = O(mu) at zero and ||(I - Qt) M^{-1}|| = O(mu^{1/2}) at sixteen.
inline MinvProbeReport minv_expansion_probe(const BirmanSchwingerSystem& sys, Threshold th, const std::vector<double>& mu_grid)
{
    MinvProbeReport rep;
    rep.threshold = th;
    rep.required_slope = th == Threshold::zero ? 0.85 : 0.4;
    const auto reg = regular_point_check(sys, th);
    if (!reg.is_regular)
    {
        rep.skipped = true;
        rep.diagnostic = "threshold not regular (smallest singular value " + std::to_string(reg.smallest_singular_value) + ")";
        return rep;
    }
    detail::require(mu_grid.size() >= 4, "minv_expansion_probe: need at least 4 grid points");
    const auto proj = build_projections(sys);
    const Eigen::Index n = sys.dim();
    const Eigen::MatrixXd off = Eigen::MatrixXd::Identity(n, n) - (th == Threshold::zero ? proj.S0 : proj.Qtilde);
    for (double mu : mu_grid)
    {
        detail::require(mu > 0.0 && mu < 2.0, "minv_expansion_probe: grid point outside (0, 2)");
        const Eigen::MatrixXcd Minv = (th == Threshold::zero ? build_M(mu, Sign::plus, sys)
                                                             : build_M_near_sixteen(mu, Sign::plus, sys)).inverse();
        rep.mu.push_back(mu);
        rep.minv_norm.push_back(Eigen::JacobiSVD<Eigen::MatrixXcd>(Minv).singularValues()(0));
        const Eigen::MatrixXcd leak = off.cast<complex>() * Minv;
        rep.leakage.push_back(Eigen::JacobiSVD<Eigen::MatrixXcd>(leak).singularValues()(0));
        rep.sup_norm = std::max(rep.sup_norm, rep.minv_norm.back());
    }
    rep.leakage_slope = detail::loglog_fit(rep.mu, rep.leakage).first;
    return rep;
}

struct BoundState
{
    double eigenvalue;
    Eigen::VectorXd vector; // over [-N, N]
    double localization;    // fraction of mass in |n| <= N/2
};

inline constexpr double band_margin = 1e-6;
inline constexpr double localization_threshold = 0.999;

namespace detail {

inline double localization_ratio(const Eigen::VectorXd& psi, int N)
{
    double inner = 0.0;
    for (int n = -N / 2; n <= N / 2; ++n)
        inner += psi(n + N) * psi(n + N);
    return inner / psi.squaredNorm();
}

} // namespace detail

/// Eigenpairs of the truncated H outside [-band_margin, 16 + band_margin] with
/// localized eigenvectors. A null potential gives none.
inline std::vector<BoundState> discrete_eigs(const Potential* V, int N, Boundary mode = Boundary::dirichlet)
{
    if (!V)
        return {};
    detail::require(N >= 4 * V->support_radius() && N >= V->support_radius() + 2,
                    "discrete_eigs: window must be at least 4x the potential support radius");
    const auto H = build_hamiltonian(V, N, mode);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.entries);
    std::vector<BoundState> out;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    {
        const double e = es.eigenvalues()(i);
        if (e >= -band_margin && e <= 16.0 + band_margin)
            continue;
        Eigen::VectorXd psi = es.eigenvectors().col(i);
        const double loc = detail::localization_ratio(psi, N);
        if (loc >= localization_threshold)
            out.push_back({e, psi, loc});
    }
    return out;
}

struct EmbeddedScanReport
{
    struct Level
    {
        int N;
        int interior_count;                // eigenvalues in (band_margin, 16 - band_margin)
        std::vector<double> localized;     // interior eigenvalues passing the localization test
        double max_localization;
    };
    std::vector<Level> levels;
    std::vector<double> candidates;        // localized at every N, eigenvalue stable to 1e-6
    bool none_detected() const { return candidates.empty(); }
};

/// Interior eigenvalues whose eigenvectors stay localized as N grows. Discretized
/// continuum states spread over the window and fail the test.
inline EmbeddedScanReport embedded_eig_scan(const Potential* V, const std::vector<int>& N_list)
{
    detail::require(!N_list.empty(), "embedded_eig_scan: empty window list");
    EmbeddedScanReport rep;
    for (int N : N_list)
    {
        const auto H = build_hamiltonian(V, N);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.entries);
        EmbeddedScanReport::Level level{N, 0, {}, 0.0};
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        {
            const double e = es.eigenvalues()(i);
            if (e <= band_margin || e >= 16.0 - band_margin)
                continue;
            ++level.interior_count;
            const double loc = detail::localization_ratio(es.eigenvectors().col(i), N);
            level.max_localization = std::max(level.max_localization, loc);
            if (loc >= localization_threshold)
                level.localized.push_back(e);
        }
        rep.levels.push_back(level);
    }
    for (double e : rep.levels.front().localized)
    {
        bool stable = true;
        for (const auto& level : rep.levels)
        {
            bool found = false;
            for (double f : level.localized)
                found = found || std::abs(f - e) <= 1e-6;
            stable = stable && found;
        }
        if (stable)
            rep.candidates.push_back(e);
    }
    return rep;
}

} // namespace bischrod
