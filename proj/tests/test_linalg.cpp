#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "netobs/linalg.hpp"

using namespace netobs;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double s = 1.0) {
    std::normal_distribution<double> nd(0.0, s);
    Matrix m(r, c);
    for (auto& v : m.data()) v = nd(rng);
    return m;
}

Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
    return e;
}

bool cplx_less(const cplx& a, const cplx& b) {
    if (std::abs(a.real() - b.real()) > 1e-9) return a.real() < b.real();
    return a.imag() < b.imag();
}

// Classical RK4 on X' = A X, X(0) = I; used as the independent expm oracle.
Matrix rk4_expm(const Matrix& a, double t, int steps) {
    Matrix x = Matrix::identity(a.rows());
    double h = t / steps;
    for (int k = 0; k < steps; ++k) {
        Matrix k1 = a * x;
        Matrix k2 = a * (x + (h / 2) * k1);
        Matrix k3 = a * (x + (h / 2) * k2);
        Matrix k4 = a * (x + h * k3);
        x += (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return x;
}

// A random matrix with eigenvalues shifted into the open left half-plane.
Matrix random_stable(std::mt19937_64& rng, std::size_t n) {
    Matrix a = random_matrix(rng, n, n);
    double al = spectral_abscissa(a);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    return a - (al + u(rng)) * Matrix::identity(n);
}

}  // namespace

TEST_CASE("matrix construction rejects degenerate input") {
    CHECK_THROWS_AS(Matrix(0, 0), InvalidArgument);
    CHECK_THROWS_AS(Matrix(2, 0), InvalidArgument);
    CHECK_THROWS_AS(Matrix(1, 1, std::vector<double>{NAN}), InvalidArgument);
    CHECK_THROWS_AS(Matrix(1, 1, INFINITY), InvalidArgument);
    Matrix s(1, 1, 3.0);
    CHECK(s(0, 0) == 3.0);
}

TEST_CASE("kron") {
    Matrix a{{1, 2}, {3, 4}};
    CHECK(kron(Matrix::identity(1), a) == a);
    Matrix bd = kron(Matrix::identity(2), a);
    CHECK(bd == block_diag({a, a}));
    Matrix k = kron(Matrix{{1, 2}}, Matrix{{0, 1}, {1, 0}});
    CHECK(k == Matrix{{0, 1, 0, 2}, {1, 0, 2, 0}});

    std::mt19937_64 rng(7);
    for (int t = 0; t < 20; ++t) {
        Matrix A = random_matrix(rng, 2, 3), B = random_matrix(rng, 3, 2);
        Matrix C = random_matrix(rng, 3, 2), D = random_matrix(rng, 2, 4);
        Matrix lhs = kron(A, B) * kron(C, D);
        Matrix rhs = kron(A * C, B * D);
        CHECK((lhs - rhs).max_abs() <= 1e-10);
    }
}

TEST_CASE("khatri_rao masks blocks") {
    std::vector<Matrix> blocks{Matrix{{1}}, Matrix{{2}}, Matrix{{3}}, Matrix{{4}}};
    CHECK(khatri_rao(blocks, 2, Matrix::identity(2)) == Matrix{{1, 0}, {0, 4}});
    CHECK(khatri_rao(blocks, 2, Matrix{{1, 1}, {1, 1}}) == Matrix{{1, 2}, {3, 4}});
    // agent 1 sends to agent 2: G = [[1,1],[0,1]], mask G^T
    Matrix G{{1, 1}, {0, 1}};
    CHECK(khatri_rao(blocks, 2, G.transpose()) == Matrix{{1, 0}, {3, 4}});
    CHECK_THROWS_AS(khatri_rao(blocks, 3, Matrix::identity(3)), InvalidArgument);
    CHECK_THROWS_AS(khatri_rao(blocks, 2, Matrix::identity(3)), InvalidArgument);
}

TEST_CASE("eig small cases") {
    auto r = eig(Matrix{{0, -1}, {1, 0}});
    std::sort(r.begin(), r.end(), cplx_less);
    CHECK(std::abs(r[0] - cplx(0, -1)) < 1e-12);
    CHECK(std::abs(r[1] - cplx(0, 1)) < 1e-12);

    auto d = eig(Matrix::diag({3, -1, 2}));
    std::sort(d.begin(), d.end(), cplx_less);
    CHECK(std::abs(d[0] - cplx(-1)) < 1e-14);
    CHECK(std::abs(d[1] - cplx(2)) < 1e-14);
    CHECK(std::abs(d[2] - cplx(3)) < 1e-14);

    auto s = eig(Matrix{{-4.0}});
    CHECK(s.size() == 1);
    CHECK(s[0] == cplx(-4.0));
}

TEST_CASE("eig of the two-agent coupled error matrix") {
    const double a = -0.5;
    Matrix K{{1.7896, 0.0538}, {-1.1633, 2.2278}};
    Matrix A = a * Matrix::identity(2) - K;
    auto l = eig(A);
    std::sort(l.begin(), l.end(), cplx_less);
    CHECK(std::abs(l[0].real() + 2.5087) < 1e-3);
    CHECK(std::abs(std::abs(l[0].imag()) - 0.1208) < 1e-3);
    CHECK(std::abs(spectral_abscissa(A) + 2.5087) < 1e-3);
    CHECK(std::abs(log_norm(A) + 1.9123) < 1e-3);
}

TEST_CASE("eig agrees with an independent solver and has small residuals") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 40; ++t) {
        std::size_t n = 1 + t % 14;
        Matrix A = random_matrix(rng, n, n);
        auto mine = eig(A);
        Eigen::EigenSolver<Eigen::MatrixXd> es(to_eigen(A));
        std::vector<cplx> ref(es.eigenvalues().data(), es.eigenvalues().data() + n);
        std::sort(mine.begin(), mine.end(), cplx_less);
        std::sort(ref.begin(), ref.end(), cplx_less);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(mine[i] - ref[i]) < 1e-8 * (1 + std::abs(ref[i])));

        auto vecs = eigenvectors(A, mine);
        double an = spectral_norm(A);
        for (std::size_t k = 0; k < n; ++k) {
            double res = 0;
            for (std::size_t i = 0; i < n; ++i) {
                cplx s = 0;
                for (std::size_t j = 0; j < n; ++j) s += A(i, j) * vecs[k][j];
                res += std::norm(s - mine[k] * vecs[k][i]);
            }
            CHECK(std::sqrt(res) <= 1e-8 * an);
        }
    }
}

TEST_CASE("real Schur factorization reconstructs the input") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 10; ++t) {
        std::size_t n = 2 + t;
        Matrix A = random_matrix(rng, n, n);
        RealSchur rs = real_schur(A);
        Matrix back = rs.Z * rs.T * rs.Z.transpose();
        CHECK((back - A).max_abs() < 1e-10 * (1 + A.max_abs()));
        CHECK((rs.Z.transpose() * rs.Z - Matrix::identity(n)).max_abs() < 1e-12);
    }
}

TEST_CASE("spectral abscissa and logarithmic norm") {
    CHECK(spectral_abscissa(Matrix{{-2.5}}) == doctest::Approx(-2.5));
    CHECK(spectral_abscissa(Matrix(3, 3)) == 0.0);
    CHECK(log_norm(-1.0 * Matrix::identity(3)) == doctest::Approx(-1.0));
    CHECK(std::abs(log_norm(Matrix{{0, -1}, {1, 0}})) < 1e-14);
}

TEST_CASE("sym_eig matches an independent solver") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
        std::size_t n = 1 + t % 12;
        Matrix X = random_matrix(rng, n, n);
        Matrix S = X + X.transpose();
        SymEig se = sym_eig(S);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(S));
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(se.values[i] - es.eigenvalues()(i)) < 1e-10 * (1 + S.max_abs()));
        CHECK(std::is_sorted(se.values.begin(), se.values.end()));
        Matrix back = se.vectors * Matrix::diag(se.values) * se.vectors.transpose();
        CHECK((back - S).max_abs() < 1e-10 * (1 + S.max_abs()));
    }
}

TEST_CASE("jordan condition number") {
    std::mt19937_64 rng(9);
    Matrix X = random_matrix(rng, 4, 4);
    CHECK(jordan_condition(X + X.transpose()) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(jordan_condition(Matrix::diag({1, 2})) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(jordan_condition(Matrix::identity(2)), InvalidArgument);

    Matrix A{{-1, 10}, {0, -2}};
    double kappa = jordan_condition(A);
    CHECK(kappa >= 1.0);
    double alpha = spectral_abscissa(A);
    double sup = 0;
    for (int k = 0; k <= 2000; ++k) {
        double t = 10.0 * k / 2000;
        sup = std::max(sup, spectral_norm(expm(A, t)) * std::exp(-alpha * t));
    }
    CHECK(sup <= kappa * (1 + 1e-12));
}

TEST_CASE("expm") {
    CHECK((expm(Matrix{{1, 2}, {3, 4}}, 0.0) - Matrix::identity(2)).max_abs() == 0.0);
    Matrix d = expm(Matrix::diag({-1, 0.5, 2}), 1.3);
    CHECK(d(0, 0) == doctest::Approx(std::exp(-1.3)).epsilon(1e-14));
    CHECK(d(1, 1) == doctest::Approx(std::exp(0.65)).epsilon(1e-14));
    CHECK(d(2, 2) == doctest::Approx(std::exp(2.6)).epsilon(1e-14));
    Matrix r = expm(Matrix{{0, -1}, {1, 0}}, M_PI / 2);
    CHECK((r - Matrix{{0, -1}, {1, 0}}).max_abs() < 1e-14);

    std::mt19937_64 rng(13);
    for (int t = 0; t < 10; ++t) {
        Matrix A = random_matrix(rng, 4, 4);
        Matrix E = expm(A, 1.5);
        Matrix O = rk4_expm(A, 1.5, 4000);
        CHECK((E - O).frobenius() <= 1e-9 * O.frobenius());
    }
}

TEST_CASE("norms, solve and inverse") {
    CHECK(spectral_norm(Matrix::identity(3)) == doctest::Approx(1.0));
    CHECK(spectral_norm(Matrix{{3, 0}, {4, 0}}) == doctest::Approx(5.0));
    CHECK((inverse(2.0 * Matrix::identity(3)) - 0.5 * Matrix::identity(3)).max_abs() == 0.0);
    CHECK_THROWS_AS(inverse(Matrix{{1, 2}, {2, 4}}), NumericalError);
    CHECK_THROWS_AS(inverse(Matrix{{1, 0}, {0, 1e-14}}), NumericalError);

    std::mt19937_64 rng(17);
    for (int t = 0; t < 20; ++t) {
        std::size_t n = 1 + t % 9;
        Matrix A = random_matrix(rng, n, n) + 3.0 * Matrix::identity(n);
        CHECK((inverse(A) * A - Matrix::identity(n)).max_abs() < 1e-9);
        Matrix B = random_matrix(rng, n, 2);
        CHECK((A * solve(A, B) - B).max_abs() < 1e-9);
    }
}

TEST_CASE("exponential envelopes on random stable matrices") {
    std::mt19937_64 rng(2024);
    int checked_dissipative = 0;
    for (int c = 0; c < 50; ++c) {
        std::size_t n = 2 + c % 5;
        Matrix A = random_stable(rng, n);
        double kappa = jordan_condition(A), alpha = spectral_abscissa(A), mu = log_norm(A);
        bool dissipative = mu < 0;
        checked_dissipative += dissipative;
        for (int k = 0; k < 100; ++k) {
            double t = 10.0 * k / 99;
            double nrm = spectral_norm(expm(A, t));
            CHECK(nrm <= kappa * std::exp(alpha * t) * (1 + 1e-9));
            if (dissipative) CHECK(nrm <= std::exp(mu * t) * (1 + 1e-9));
        }
    }
    CHECK(checked_dissipative > 0);
}
