#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "netobs/analysis.hpp"
#include "netobs/lmi.hpp"

using namespace netobs;

namespace {

// Lyapunov problem A^T P + P A < 0, P > 0.
LmiProblem lyapunov(const Matrix& A) {
    LmiProblem p;
    auto P = p.symmetric("P", A.rows());
    auto c = p.constraint("decay", {A.rows()});
    p.add(c, 0, 0, A.transpose(), P, Matrix::identity(A.rows()));
    p.add(c, 0, 0, Matrix::identity(A.rows()), P, A);
    auto pos = p.constraint("P>0", {A.rows()}, Sense::positive);
    p.add(pos, 0, P);
    return p;
}

double eigen_lambda_max(const Matrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(e).eigenvalues().maxCoeff();
}

}  // namespace

TEST_CASE("Lyapunov feasibility") {
    auto p = lyapunov(-1.0 * Matrix::identity(2));
    auto c = solve_feasibility(p);
    REQUIRE(c.feasible);
    CHECK(c.margin < -kFeasTol);
    // independent re-check of every block
    for (std::size_t k = 0; k < p.num_constraints(); ++k) CHECK(eigen_lambda_max(p.evaluate(k, c.x)) < -kFeasTol);

    auto q = lyapunov(Matrix::identity(2));
    auto d = solve_feasibility(q);
    CHECK_FALSE(d.feasible);
    CHECK(d.margin >= -kFeasTol);
}

TEST_CASE("Lyapunov on random matrices") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 10; ++k) {
        Matrix A(4, 4);
        for (auto& v : A.data()) v = nd(rng);
        double a = spectral_abscissa(A);
        auto c = solve_feasibility(lyapunov(A));
        CHECK(c.feasible == (a < 0));
    }
}

TEST_CASE("problem construction checks") {
    LmiProblem p;
    auto X = p.full("X", 2, 2);
    auto c = p.constraint("bad", {2});
    p.add(c, 0, 0, Matrix::identity(2), X, Matrix::identity(2));
    CHECK_THROWS_AS(p.check(), InvalidArgument);
    CHECK_THROWS_AS(p.add(c, 0, 0, Matrix::identity(3), X, Matrix::identity(2)), InvalidArgument);
}
