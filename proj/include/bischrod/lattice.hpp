#pragma once
//
// Lattice sequences on a finite window [-N, N] of Z, the discrete Laplacian
// and bi-Laplacian, weighted norms and the truncated Hamiltonian.
//

#include <bischrod/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

namespace bischrod {

using complex = std::complex<double>;

enum class Boundary { dirichlet, periodic };

/// Japanese bracket <n> = (1 + n^2)^{1/2}.
inline double bracket(double n) { return std::sqrt(1.0 + n * n); }

/// Finite sample of a complex sequence on [-N, N].
class LatticeVector
{
public:
    explicit LatticeVector(int radius)
        : radius_(radius), values_(static_cast<std::size_t>(2 * radius + 1))
    {
        detail::require(radius >= 1, "LatticeVector: window radius must be >= 1");
    }

    LatticeVector(int radius, std::vector<complex> values)
        : radius_(radius), values_(std::move(values))
    {
        detail::require(radius >= 1, "LatticeVector: window radius must be >= 1");
        detail::require(values_.size() == static_cast<std::size_t>(2 * radius + 1),
                        "LatticeVector: array length must equal 2N+1");
        for (const auto& z : values_)
            detail::require(std::isfinite(z.real()) && std::isfinite(z.imag()),
                            "LatticeVector: entries must be finite");
    }

    static LatticeVector delta(int radius, int site = 0)
    {
        LatticeVector out(radius);
        detail::require(std::abs(site) <= radius, "LatticeVector::delta: site outside window");
        out[site] = 1.0;
        return out;
    }

    template <class F>
    static LatticeVector from_function(int radius, F&& f)
    {
        LatticeVector out(radius);
        for (int n = -radius; n <= radius; ++n)
            out[n] = complex(f(n));
        return out;
    }

    static LatticeVector from_eigen(int radius, const Eigen::VectorXcd& v)
    {
        return LatticeVector(radius, std::vector<complex>(v.data(), v.data() + v.size()));
    }

    int radius() const { return radius_; }
    std::size_t size() const { return values_.size(); }

    complex& operator[](int n) { return values_[static_cast<std::size_t>(n + radius_)]; }
    const complex& operator[](int n) const { return values_[static_cast<std::size_t>(n + radius_)]; }

    std::span<const complex> values() const { return values_; }

    Eigen::VectorXcd to_eigen() const
    {
        return Eigen::Map<const Eigen::VectorXcd>(values_.data(), static_cast<Eigen::Index>(values_.size()));
    }

    double l2_norm() const
    {
        double s = 0.0;
        for (const auto& z : values_)
            s += std::norm(z);
        return std::sqrt(s);
    }

private:
    int radius_;
    std::vector<complex> values_;
};

/// Weight exponent s of the space l^{2,s}.
struct WeightedNormSpec
{
    double s = 0.0;
};

/// Dense square array over [-N, N]^2.
template <class Scalar>
struct TruncatedOperator
{
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    int radius = 0;
    Matrix entries;
    Boundary boundary = Boundary::dirichlet;

    Eigen::Index dim() const { return entries.rows(); }
    Scalar operator()(int n, int m) const { return entries(n + radius, m + radius); }
};

using RealOperator = TruncatedOperator<double>;
using ComplexOperator = TruncatedOperator<complex>;

namespace detail {

inline complex neighbour(const LatticeVector& psi, int n, Boundary mode)
{
    const int N = psi.radius();
    if (n >= -N && n <= N)
        return psi[n];
    if (mode == Boundary::dirichlet)
        return 0.0;
    const int len = 2 * N + 1;
    int k = ((n + N) % len + len) % len;
    return psi[k - N];
}

} // namespace detail

/// ((-Delta) psi)(n) = -psi(n+1) - psi(n-1) + 2 psi(n).
inline LatticeVector apply_neg_laplacian(const LatticeVector& psi, Boundary mode = Boundary::dirichlet)
{
    const int N = psi.radius();
    LatticeVector out(N);
    for (int n = -N; n <= N; ++n)
        out[n] = 2.0 * psi[n] - detail::neighbour(psi, n + 1, mode) - detail::neighbour(psi, n - 1, mode);
    return out;
}

/// Five-point stencil (1, -4, 6, -4, 1).
inline LatticeVector apply_bilaplacian(const LatticeVector& psi, Boundary mode = Boundary::dirichlet)
{
    const int N = psi.radius();
    LatticeVector out(N);
    for (int n = -N; n <= N; ++n)
    {
        out[n] = 6.0 * psi[n]
               - 4.0 * (detail::neighbour(psi, n + 1, mode) + detail::neighbour(psi, n - 1, mode))
               + detail::neighbour(psi, n + 2, mode) + detail::neighbour(psi, n - 2, mode);
    }
    return out;
}

/// Pointwise (-1)^n.
inline LatticeVector sign_flip(const LatticeVector& psi)
{
    LatticeVector out(psi.radius());
    for (int n = -psi.radius(); n <= psi.radius(); ++n)
        out[n] = (n % 2 == 0) ? psi[n] : -psi[n];
    return out;
}

/// Symbol of the bi-Laplacian, (2 - 2 cos x)^2.
inline double fourier_symbol(double x)
{
    const double w = 2.0 - 2.0 * std::cos(x);
    return w * w;
}

inline double weighted_norm(const LatticeVector& psi, WeightedNormSpec spec)
{
    double acc = 0.0;
    for (int n = -psi.radius(); n <= psi.radius(); ++n)
        acc += std::pow(bracket(n), 2.0 * spec.s) * std::norm(psi[n]);
    return std::sqrt(acc);
}

/// Norm in B(s,-s): largest singular value of D^{-s} K D^{-s}, D = diag(<n>),
/// for a dense kernel indexed over [-radius, radius]^2.
template <class Derived>
double weighted_operator_norm(const Eigen::MatrixBase<Derived>& K, int radius, double s)
{
    using Scalar = typename Derived::Scalar;
    const Eigen::Index dim = K.rows();
    detail::require(K.cols() == dim && dim == 2 * radius + 1,
                    "weighted_operator_norm: kernel must be square of side 2N+1");
    Eigen::VectorXd w(dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        w(i) = std::pow(bracket(static_cast<double>(i - radius)), -s);
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> scaled = w.asDiagonal() * K.derived() * w.asDiagonal();
    Eigen::BDCSVD<decltype(scaled)> svd(scaled);
    return svd.singularValues()(0);
}

template <class Scalar>
double weighted_operator_norm(const TruncatedOperator<Scalar>& K, double s)
{
    return weighted_operator_norm(K.entries, K.radius, s);
}

/// Matrix of (-Delta) on the window.
inline RealOperator neg_laplacian_matrix(int radius, Boundary mode = Boundary::dirichlet)
{
    detail::require(radius >= 1, "neg_laplacian_matrix: radius must be >= 1");
    const int dim = 2 * radius + 1;
    RealOperator op{radius, Eigen::MatrixXd::Zero(dim, dim), mode};
    for (int i = 0; i < dim; ++i)
    {
        op.entries(i, i) += 2.0;
        for (int step : {-1, 1})
        {
            int j = i + step;
            if (j < 0 || j >= dim)
            {
                if (mode == Boundary::dirichlet)
                    continue;
                j = (j + dim) % dim;
            }
            op.entries(i, j) -= 1.0;
        }
    }
    return op;
}

/// Matrix of the five-point bi-Laplacian stencil on the window.
inline RealOperator bilaplacian_matrix(int radius, Boundary mode = Boundary::dirichlet)
{
    detail::require(radius >= 2, "bilaplacian_matrix: radius must be >= 2");
    const int dim = 2 * radius + 1;
    RealOperator op{radius, Eigen::MatrixXd::Zero(dim, dim), mode};
    constexpr double stencil[5] = {1.0, -4.0, 6.0, -4.0, 1.0};
    for (int i = 0; i < dim; ++i)
    {
        for (int k = -2; k <= 2; ++k)
        {
            int j = i + k;
            if (j < 0 || j >= dim)
            {
                if (mode == Boundary::dirichlet)
                    continue;
                j = (j + dim) % dim;
            }
            op.entries(i, j) += stencil[k + 2];
        }
    }
    return op;
}

template <class Scalar>
bool is_hermitian(const TruncatedOperator<Scalar>& A, double rel_tol = 1e-12)
{
    const double scale = A.entries.cwiseAbs().maxCoeff();
    const double defect = (A.entries - A.entries.adjoint()).cwiseAbs().maxCoeff();
    return defect <= rel_tol * std::max(scale, 1e-300);
}

} // namespace bischrod
