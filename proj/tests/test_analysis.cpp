#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "netobs/analysis.hpp"

using namespace netobs;

namespace {

Plant scalar(double a) { return Plant(Matrix{{a}}, Matrix{{1.0}}); }
Digraph one_way() { return Digraph(std::vector<std::vector<int>>{{1, 1}, {0, 1}}); }

ErrorSystem example1() {
    return assemble(scalar(-0.5), Digraph::all_to_all(2), GainSchedule::scalar2(1.7896, 0.0538, -1.1633, 2.2278));
}

Matrix rnd(std::mt19937_64& rng, std::size_t r, std::size_t c) {
    std::normal_distribution<double> nd;
    Matrix m(r, c);
    for (auto& v : m.data()) v = nd(rng);
    return m;
}

// sigma_max(C (jw - A)^{-1} B + D) through Eigen, independent of the library.
double eigen_sigma(const TransferRealization& t, double w) {
    const auto n = t.A.rows();
    Eigen::MatrixXcd M(n, n), B(n, t.B.cols()), C(t.C.rows(), n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) M(i, j) = (i == j ? std::complex<double>(0, w) : 0.0) - t.A(i, j);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < t.B.cols(); ++j) B(i, j) = t.B(i, j);
    for (std::size_t i = 0; i < t.C.rows(); ++i)
        for (std::size_t j = 0; j < n; ++j) C(i, j) = t.C(i, j);
    Eigen::MatrixXcd T = C * M.partialPivLu().solve(B);
    if (t.has_d())
        for (std::size_t i = 0; i < t.D.rows(); ++i)
            for (std::size_t j = 0; j < t.D.cols(); ++j) T(i, j) += t.D(i, j);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(T);
    return svd.singularValues()(0);
}

double eigen_sweep(const TransferRealization& t) {
    double best = eigen_sigma(t, 0.0);
    for (int k = 0; k < 10000; ++k) best = std::max(best, eigen_sigma(t, std::pow(10.0, -3.0 + 6.0 * k / 9999)));
    return best;
}

TransferRealization random_stable(std::mt19937_64& rng, std::size_t n, std::size_t m, std::size_t q, bool with_d) {
    Matrix A = rnd(rng, n, n);
    A -= (spectral_abscissa(A) + 0.2) * Matrix::identity(n);
    if (with_d) return TransferRealization(A, rnd(rng, n, m), rnd(rng, q, n), 0.3 * rnd(rng, q, m));
    return TransferRealization(A, rnd(rng, n, m), rnd(rng, q, n));
}

}  // namespace

TEST_CASE("H-infinity norm of the scalar Luenberger observer") {
    double g = hinf_norm(luenberger_transfer(scalar(-0.5), Matrix{{2.0}}));
    CHECK(std::abs(g - 0.8) < 1e-6);
}

TEST_CASE("H-infinity norm of the optimized two-agent design") {
    ErrorSystem es = assemble(scalar(-0.5), Digraph::all_to_all(2), GainSchedule::scalar2(3.5198, -8.0142, 0.2883, 0.4802));
    CHECK(std::abs(network_hinf(es, global_spec()) - 0.4953) < 5e-3);
}

TEST_CASE("H-infinity degenerate and error cases") {
    TransferRealization z(Matrix{{-1.0}}, Matrix{{0.0}}, Matrix{{1.0}});
    CHECK(hinf_norm(z) == 0.0);
    TransferRealization u(Matrix{{0.5}}, Matrix{{1.0}}, Matrix{{1.0}});
    CHECK_THROWS_AS(hinf_norm(u), PreconditionError);
}

TEST_CASE("H-infinity norm agrees with a dense frequency sweep") {
    std::mt19937_64 rng(42);
    for (int c = 0; c < 12; ++c) {
        auto t = random_stable(rng, 2 + c % 6, 1 + c % 3, 1 + (c / 2) % 3, c % 4 == 3);
        double g = hinf_norm(t);
        double s = eigen_sweep(t);
        // the sweep can only miss the peak from below
        CHECK(s <= g * (1 + 2e-6));
        CHECK(std::abs(g - s) <= 1e-3 * g);
        CHECK(std::abs(hinf_sweep(t) - s) <= 1e-9 * s);
    }
}

TEST_CASE("H-infinity norm of high-gain realizations") {
    std::mt19937_64 rng(11);
    for (int c = 0; c < 6; ++c) {
        // negative definite symmetric part keeps A - k B B^T Hurwitz
        Matrix R = rnd(rng, 4, 4), S = rnd(rng, 4, 4), B = rnd(rng, 4, 2);
        Matrix A = -1.0 * (R * R.transpose()) - 0.2 * Matrix::identity(4) + S - S.transpose();
        const double k = 1e5;
        TransferRealization h(A - k * B * B.transpose(), k * B, rnd(rng, 2, 4));
        REQUIRE(spectral_abscissa(h.A) < 0);
        double g = hinf_norm(h);
        CHECK(eigen_sweep(h) <= g * (1 + 2e-6));
        TransferRealization scaled(h.A, 1e-4 * h.B, 1e4 * h.C);
        CHECK(std::abs(hinf_norm(scaled) - g) <= 2e-6 * g);
    }
}

TEST_CASE("H-infinity norm is invariant under similarity") {
    std::mt19937_64 rng(4);
    for (int c = 0; c < 6; ++c) {
        auto t = random_stable(rng, 4, 2, 2, false);
        Matrix S = rnd(rng, 4, 4) + 3.0 * Matrix::identity(4);
        Matrix Si = inverse(S);
        TransferRealization t2(Si * t.A * S, Si * t.B, t.C * S);
        CHECK(std::abs(hinf_norm(t) - hinf_norm(t2)) <= 2e-6 * hinf_norm(t));
    }
}

TEST_CASE("KL bounds") {
    Plant p = scalar(-0.5);
    KLBound b2 = luenberger_kl_bound(p, Matrix{{2.0}}, KLCondition::dissipative);
    CHECK(b2.c == doctest::Approx(1.0));
    CHECK(b2.rate == doctest::Approx(2.5));
    CHECK(b2.gain == doctest::Approx(0.8));

    ErrorSystem es = example1();
    KLBound d = kl_bound(es, KLCondition::dissipative);
    CHECK(std::abs(d.rate - 1.9123) < 1e-3);
    KLBound l = kl_bound(es, KLCondition::lyapunov, Matrix::identity(2), d.rate);
    CHECK(l.c == doctest::Approx(d.c));
    CHECK(l.rate == doctest::Approx(d.rate));
    CHECK(l.gain == doctest::Approx(d.gain));
    KLBound k1 = kl_bound(es, KLCondition::distinct_eig);
    CHECK(std::abs(k1.rate - 2.5087) < 1e-3);
    CHECK(k1.c >= spectral_norm(es.C));

    ErrorSystem rot = assemble(Plant(Matrix{{0, -1}, {1, 0}}, Matrix{{1, 0}}), Digraph::self_only(1),
                               GainSchedule(1, {Matrix{{0.0}, {0.0}}}));
    CHECK_THROWS_AS(kl_bound(rot, KLCondition::dissipative), PreconditionError);
    ErrorSystem rep = assemble(scalar(-0.5), Digraph::self_only(2), GainSchedule::scalar2(2, 0, 0, 2));
    CHECK_THROWS_AS(kl_bound(rep, KLCondition::distinct_eig), PreconditionError);
    CHECK_THROWS_AS(kl_bound(es, KLCondition::lyapunov, Matrix::identity(2), 5.0), PreconditionError);
}

TEST_CASE("bound comparison") {
    KLBound a{1.0, 2.0, 0.5, KLCondition::dissipative};
    auto same = compare_bounds(a, a, 1.0, 1.0);
    REQUIRE(same.crossover_t_star);
    CHECK(*same.crossover_t_star == 0.0);
    CHECK_FALSE(same.rate_strictly_better);
    CHECK_FALSE(same.gain_strictly_better);
    KLBound b{3.0, 2.0, 0.4, KLCondition::dissipative};
    auto par = compare_bounds(b, a, 1.0, 1.0);
    CHECK_FALSE(par.crossover_t_star);
    CHECK(par.gain_strictly_better);
    KLBound fast{2.0, 3.0, 0.4, KLCondition::dissipative};
    auto cr = compare_bounds(fast, a, 1.0, 1.0);
    REQUIRE(cr.crossover_t_star);
    CHECK(*cr.crossover_t_star == doctest::Approx(std::log(2.0)));
    CHECK(fast.envelope(1.0, *cr.crossover_t_star) == doctest::Approx(a.envelope(1.0, *cr.crossover_t_star)));
}

TEST_CASE("steady-state errors") {
    const double a = -0.5, KL = 2.0, m0 = 0.7;
    ErrorSystem es = assemble(scalar(a), one_way(), GainSchedule::scalar2(KL, 0, 2 * KL * (KL - a) / a, KL));
    auto e = steady_state_error(es, {m0, m0});
    CHECK(std::abs(e[1]) < 1e-10);
    ErrorSystem es2 = assemble(scalar(a), one_way(), GainSchedule::scalar2(KL, 0, KL * (KL - a) / a, KL));
    auto e2 = steady_state_error(es2, {0.0, m0});
    CHECK(std::abs(e2[1] - 0.4 * m0) < 1e-9);

    auto e1 = steady_state_error(example1(), {0.3});
    CHECK(std::abs(e1[0] - 0.2272) < 1e-3);
    CHECK(std::abs(e1[1] - 0.2272) < 1e-3);
    ErrorSystem lu = assemble(scalar(a), Digraph::self_only(1), GainSchedule(1, {Matrix{{KL}}}));
    CHECK(std::abs(steady_state_error(lu, {0.3})[0] - 0.24) < 1e-12);
}

TEST_CASE("convergence rates") {
    Plant p1(Matrix{{-2.5, 0.1}, {0.04, -3}}, Matrix{{1, 2}});
    auto [g1, k1] = diagonal_design(p1, Matrix{{1.5}, {-0.16}}, 1);
    CHECK(std::abs(convergence_rate(assemble(p1, g1, k1)) - 3.34) < 1e-2);
    Plant osc(Matrix{{0, -1}, {1, 0}}, Matrix{{1, 0}});
    auto [g2, k2] = diagonal_design(osc, Matrix{{2.0}, {0.0}}, 1);
    CHECK(std::abs(convergence_rate(assemble(osc, g2, k2)) - 1.0) < 1e-9);
    auto [g3, k3] = diagonal_design(scalar(-0.5), Matrix{{2.0}}, 1);
    CHECK(convergence_rate(assemble(scalar(-0.5), g3, k3)) == doctest::Approx(2.5));
    auto [g4, k4] = diagonal_design(osc, Matrix{{0.0}, {0.0}}, 1);
    CHECK_THROWS_AS(convergence_rate(assemble(osc, g4, k4)), PreconditionError);
}

TEST_CASE("scalar two-agent closed form") {
    auto z = scalar_two_agent_hinf(-0.5, 2.0, 0.0, 0.0);
    CHECK(z.closed_form);
    CHECK(z.value == doctest::Approx(0.8).epsilon(1e-12));
    for (double k12 : {-0.5, -1.5, -3.0}) {
        auto r = scalar_two_agent_hinf(-0.5, 2.0, k12, 0.0);
        CHECK(r.closed_form);
        CHECK(r.value < 0.8);
        CHECK(std::abs(r.value - r.hamiltonian) < 1e-5);
    }
    auto out = scalar_two_agent_hinf(-0.5, 2.0, 1.0, 1.0);
    CHECK_FALSE(out.closed_form);
    CHECK(out.value == out.hamiltonian);
}

TEST_CASE("uncoupled average oracle") {
    auto eq = uncoupled_average_oracle(-0.5, 2, 2, 2, 1);
    CHECK(eq.avg_abs == doctest::Approx(eq.luenberger_abs));
    CHECK(uncoupled_average_oracle(-0.5, 2, 3, 4, 1).avg_abs == doctest::Approx(0.8730).epsilon(1e-4));
    CHECK(uncoupled_average_oracle(-0.5, 2, 2, 10, 1).avg_abs == doctest::Approx(0.8762).epsilon(1e-4));
    CHECK_THROWS_AS(uncoupled_average_oracle(-0.5, 2, 1, 4, 1), InvalidArgument);
}
