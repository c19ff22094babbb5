#include <bischrod/free_resolvent.hpp>
#include <bischrod/lap_oracle.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace bischrod;
using std::numbers::pi;

namespace {

Eigen::MatrixXcd dense_inverse(const Eigen::MatrixXd& A, complex z)
{
    Eigen::MatrixXcd B = A.cast<complex>();
    B.diagonal().array() -= z;
    return B.partialPivLu().inverse();
}

} // namespace

TEST(FreeResolvent, ThetaPlus)
{
    EXPECT_NEAR(theta_plus(2.0), -pi / 2, 1e-15);
    EXPECT_NEAR(theta_plus(1.0), -pi / 3, 1e-15);
    for (double lam : {1e-4, 1e-6, 1e-8})
        EXPECT_NEAR(theta_plus(lam), -std::sqrt(lam) - std::pow(lam, 1.5) / 24.0, 1e-3 * std::pow(lam, 1.5));
    EXPECT_THROW(theta_plus(0.0), InvalidInput);
    EXPECT_THROW(theta_plus(4.5), InvalidInput);
}

TEST(FreeResolvent, BOfMu)
{
    EXPECT_NEAR(b_of_mu(2.0), std::log(3.0 - 2.0 * std::sqrt(2.0)), 1e-14);
    EXPECT_NEAR(b_of_mu(2.0), -1.76275, 1e-5);
    for (double mu : {1e-2, 1e-3})
        EXPECT_NEAR(b_of_mu(mu), -mu, mu * mu * mu);
    EXPECT_LT(b_of_mu(1.5), b_of_mu(0.5));
    EXPECT_LT(b_of_mu(0.5), 0.0);
    for (double mu = 0.1; mu < 1.95; mu += 0.1)
    {
        const double direct = std::log(1.0 + mu * mu / 2 - mu * std::sqrt(1.0 + mu * mu / 4));
        EXPECT_NEAR(b_of_mu(mu), direct, 1e-13);
    }
}

TEST(FreeResolvent, ThetaValuesInvariants)
{
    for (double mu = 0.1; mu < 1.95; mu += 0.1)
    {
        auto tv = theta_values(mu);
        EXPECT_EQ(tv.theta_minus, -tv.theta_plus);
        EXPECT_NEAR(2.0 - 2.0 * std::cos(tv.theta_plus), mu * mu, 1e-12);
        EXPECT_LT(tv.b, 0.0);
        EXPECT_NEAR(std::abs(std::sin(tv.theta_neg) - complex(0.0, -mu * std::sqrt(1.0 + mu * mu / 4))), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(2.0 - 2.0 * std::cos(tv.theta_neg) + mu * mu), 0.0, 1e-12);
    }
}

TEST(FreeResolvent, NegLaplacianKernelMatchesDenseInverse)
{
    const int N = 256;
    auto inv = dense_inverse(neg_laplacian_matrix(N).entries, -1.0);
    for (auto [n, m] : {std::pair{0, 0}, std::pair{3, -2}, std::pair{-5, 7}})
    {
        const complex exact = inv(n + N, m + N);
        EXPECT_LE(std::abs(resolvent_neg_laplacian_kernel(-1.0, n, m) - exact), 1e-8 * std::abs(exact));
    }
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int k = 0; k < 10; ++k)
    {
        const complex w(u(rng), u(rng));
        EXPECT_EQ(resolvent_neg_laplacian_kernel(w, 2, 5), resolvent_neg_laplacian_kernel(w, 5, 2));
        const complex th = theta_of_omega(w);
        EXPECT_LT(th.imag(), 0.0);
        EXPECT_NEAR(std::abs(2.0 - 2.0 * std::cos(th) - w), 0.0, 1e-12);
    }
    const double r0 = std::abs(resolvent_neg_laplacian_kernel(-1.0, 0, 1) / resolvent_neg_laplacian_kernel(-1.0, 0, 0));
    for (int k = 1; k < 10; ++k)
        EXPECT_NEAR(std::abs(resolvent_neg_laplacian_kernel(-1.0, 0, k + 1) / resolvent_neg_laplacian_kernel(-1.0, 0, k)),
                    r0, 1e-12);
    EXPECT_THROW(resolvent_neg_laplacian_kernel(2.0, 0, 0), InvalidInput);
}

TEST(FreeResolvent, BoundaryClosedFormValue)
{
    const complex expect = complex(0.0, 0.5 / std::sqrt(3.0)) - 0.5 / std::sqrt(5.0);
    EXPECT_NEAR(std::abs(free_biresolvent_boundary(SpectralParam(1.0), 0, 0) - expect), 0.0, 1e-15);
}

TEST(FreeResolvent, ConjugateSymmetryAndTranslation)
{
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(0.01, 1.99);
    std::uniform_int_distribution<int> site(-40, 40);
    for (int k = 0; k < 50; ++k)
    {
        const double mu = u(rng);
        const int n = site(rng), m = site(rng), shift = site(rng);
        const complex p = free_biresolvent_boundary(SpectralParam(mu, Sign::plus), n, m);
        const complex q = free_biresolvent_boundary(SpectralParam(mu, Sign::minus), n, m);
        EXPECT_EQ(q, std::conj(p));
        EXPECT_EQ(p, free_biresolvent_boundary(SpectralParam(mu), n + shift, m + shift));
        EXPECT_EQ(p, free_biresolvent_boundary(SpectralParam(mu), m, n));
    }
}

TEST(FreeResolvent, JumpIsCosineMultiple)
{
    for (double mu = 0.1; mu < 1.95; mu += 0.1)
    {
        const double tp = theta_plus(mu * mu);
        for (int d = 0; d < 30; d += 3)
        {
            const complex jump = free_biresolvent_boundary(mu, Sign::plus, d) - free_biresolvent_boundary(mu, Sign::minus, d);
            const complex F = std::exp(complex(0.0, -tp * d)) + std::exp(complex(0.0, tp * d));
            const complex expect = F * complex(0.0, -1.0) / (4.0 * mu * mu * std::sin(tp));
            EXPECT_NEAR(std::abs(jump - expect), 0.0, 1e-12 * std::max(1.0, std::abs(expect)));
            EXPECT_NEAR(std::abs(jump - free_jump(mu, d)), 0.0, 1e-12 * std::max(1.0, std::abs(expect)));
        }
    }
}

TEST(FreeResolvent, RowRecurrenceMatchesClosedForm)
{
    for (double mu : {0.05, 0.7, 1.9})
    {
        auto row = free_biresolvent_row(mu, Sign::plus, 500);
        for (int d = 0; d <= 500; d += 7)
            EXPECT_NEAR(std::abs(row[d] - free_biresolvent_boundary(mu, Sign::plus, d)), 0.0,
                        1e-11 * std::abs(free_biresolvent_boundary(mu, Sign::plus, 0)));
    }
}

TEST(FreeResolvent, AnalyticContinuationsAgreeOnRealAxis)
{
    for (double mu : {0.1, 0.8, 1.5})
        for (int d : {0, 1, 4, 9})
        {
            const complex ref = free_biresolvent_boundary(mu, Sign::plus, d);
            EXPECT_NEAR(std::abs(free_biresolvent_analytic<double>(mu, Sign::plus, d) - ref), 0.0, 1e-12 * std::abs(ref));
            EXPECT_NEAR(std::abs(free_biresolvent_analytic_sixteen<double>(std::sqrt(2.0 - mu), Sign::plus, d) - ref), 0.0,
                        1e-11 * std::abs(ref));
        }
}

TEST(FreeResolvent, ComplexSplitFormulaMatchesDenseInverse)
{
    const int N = 256;
    const auto H = bilaplacian_matrix(N).entries;
    for (complex z : {complex(-1.0), complex(24.0), complex(3.0, 2.0)})
    {
        auto inv = dense_inverse(H, z);
        for (auto [n, m] : {std::pair{0, 0}, std::pair{2, -3}})
        {
            const complex exact = inv(n + N, m + N);
            EXPECT_LE(std::abs(free_biresolvent_complex(z, n, m) - exact), 1e-8 * std::abs(exact));
        }
    }
    EXPECT_THROW(free_biresolvent_complex(5.0, 0, 0), InvalidInput);
}

TEST(FreeResolvent, LimitFromAboveIsPlusBoundary)
{
    const double mu = 0.9;
    const double lam = std::pow(mu, 4);
    std::vector<double> eps{1e-4, 5e-5, 2.5e-5};
    for (int d : {0, 3})
    {
        std::vector<complex> f;
        for (double e : eps)
            f.push_back(free_biresolvent_complex(complex(lam, e), d, 0));
        const complex lim = detail::richardson_to_zero(eps, f);
        const complex ref = free_biresolvent_boundary(mu, Sign::plus, d);
        EXPECT_LE(std::abs(lim - ref), 1e-6 * std::abs(ref));
        std::vector<complex> g;
        for (double e : eps)
            g.push_back(free_biresolvent_complex(complex(lam, -e), d, 0));
        EXPECT_LE(std::abs(detail::richardson_to_zero(eps, g) - std::conj(ref)), 1e-6 * std::abs(ref));
    }
}

TEST(FreeResolvent, SpectralParamValidation)
{
    EXPECT_THROW(SpectralParam(0.0), InvalidInput);
    EXPECT_THROW(SpectralParam(2.0), InvalidInput);
    EXPECT_NO_THROW(SpectralParam(1.999));
}
