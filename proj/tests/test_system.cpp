#include <doctest.h>

#include <random>

#include "netobs/system.hpp"

using namespace netobs;

namespace {
Plant scalar(double a) { return Plant(Matrix{{a}}, Matrix{{1.0}}); }
Digraph one_way() { return Digraph(std::vector<std::vector<int>>{{1, 1}, {0, 1}}); }
}  // namespace

TEST_CASE("detectability") {
    CHECK(is_detectable(scalar(-0.5)));
    CHECK(is_detectable(Plant(Matrix{{0, -1}, {1, 0}}, Matrix{{1, 0}})));
    CHECK_FALSE(is_detectable(Plant(Matrix{{1, 0}, {0, -1}}, Matrix{{0, 1}})));
    CHECK(is_detectable(Plant(Matrix{{-1, 0}, {0, -2}}, Matrix{{0, 0}})));
}

TEST_CASE("single observer reduces to Luenberger") {
    Plant p(Matrix{{-2.5, 0.1}, {0.04, -3}}, Matrix{{1, 2}});
    Matrix KL{{1.5}, {-0.16}};
    auto [g, k] = diagonal_design(p, KL, 1);
    ErrorSystem es = assemble(p, g, k);
    CHECK((es.A - (p.A - KL * p.C)).max_abs() < 1e-15);
    CHECK(es.B == KL);
    CHECK(es.C == Matrix::identity(2));
}

TEST_CASE("scalar one-way graph assembly") {
    const double a = -0.5;
    GainSchedule k = GainSchedule::scalar2(2.0, 0.0, -3.0, 1.5);
    ErrorSystem es = assemble(scalar(a), one_way(), k);
    CHECK(es.A == Matrix{{a - 2.0, 0}, {3.0, a - 1.5}});
    CHECK(es.B == Matrix{{2.0, 0}, {-3.0, 1.5}});
    CHECK(local_output(es, 1) == Matrix{{1, 0}});
    CHECK(local_output(es, 2) == Matrix{{0.5, 0.5}});
    CHECK_THROWS_AS(local_output(es, 3), InvalidArgument);
    // gating: agent 1 cannot use agent 2's innovation
    CHECK_THROWS_AS(assemble(scalar(a), one_way(), GainSchedule::scalar2(2, 0.1, 0, 2)), InvalidArgument);
}

TEST_CASE("scalar all-to-all assembly") {
    const double a = -0.5;
    ErrorSystem es = assemble(scalar(a), Digraph::all_to_all(2), GainSchedule::scalar2(1, 2, 3, 4));
    CHECK(es.A == Matrix{{a - 1, -2}, {-3, a - 4}});
    CHECK(es.C == Matrix{{0.5, 0.5}, {0.5, 0.5}});
    CHECK(average_output(es) == Matrix{{0.5, 0.5}});
    CHECK(common_noise_input(es) == Matrix{{3}, {7}});
}

TEST_CASE("averaging rows and block-diagonal structure") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    Plant p(Matrix{{0, -1}, {1, 0}}, Matrix{{1, 0}});
    for (const auto& g : enumerate_digraphs(3, 9)) {
        GainSchedule k(3, 2, 1);
        for (std::size_t i = 1; i <= 3; ++i)
            for (std::size_t j : incoming_neighbors(g, i)) k.set(i, j, Matrix{{nd(rng)}, {nd(rng)}});
        ErrorSystem es = assemble(p, g, k);
        Matrix ones = kron(Matrix(3, 1, 1.0), Matrix::identity(2));
        CHECK((es.C * ones - ones).max_abs() < 1e-15);
        for (std::size_t i = 1; i <= 3; ++i) {
            Matrix row = local_output(es, i);
            double w = 1.0 / incoming_neighbors(g, i).size();
            for (std::size_t j = 1; j <= 3; ++j) {
                Matrix blk = row.block(0, 2 * (j - 1), 2, 2);
                double expect = g.edge(j, i) ? w : 0.0;
                CHECK((blk - expect * Matrix::identity(2)).max_abs() < 1e-15);
            }
        }
    }
    GainSchedule k(3, 2, 1);
    for (std::size_t i = 1; i <= 3; ++i) k.set(i, i, Matrix{{1.0 * i}, {0.5}});
    ErrorSystem es = assemble(p, Digraph::self_only(3), k);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            Matrix blk = es.A.block(2 * i, 2 * j, 2, 2);
            if (i == j)
                CHECK((blk - (p.A - k(i + 1, i + 1) * p.C)).max_abs() == 0.0);
            else
                CHECK(blk.max_abs() == 0.0);
        }
}

TEST_CASE("star design") {
    Plant p = scalar(-0.5);
    auto [g, k] = star_design(p, Matrix{{2.0}}, 2, -0.5);
    CHECK(k(1, 1)(0, 0) == 2.0);
    CHECK(k(2, 2)(0, 0) == 2.0);
    CHECK(k(2, 1)(0, 0) == -1.0);
    CHECK(k(1, 2)(0, 0) == 0.0);
    auto [g3, k3] = star_design(p, Matrix{{2.0}}, 3, 0.3);
    CHECK(g3.to_rows() == std::vector<std::vector<int>>{{1, 1, 1}, {0, 1, 0}, {0, 0, 1}});
    auto [g0, k0] = star_design(p, Matrix{{2.0}}, 3, 0.0);
    for (std::size_t i = 1; i <= 3; ++i)
        for (std::size_t j = 1; j <= 3; ++j) CHECK(k0(i, j)(0, 0) == (i == j ? 2.0 : 0.0));
    CHECK_THROWS_AS(star_design(p, Matrix{{2.0}}, 1, 0.5), InvalidArgument);
}
