#include <doctest.h>

#include <set>

#include "netobs/graphnet.hpp"

using namespace netobs;

namespace {
Digraph one_way() { return Digraph(std::vector<std::vector<int>>{{1, 1}, {0, 1}}); }
}  // namespace

TEST_CASE("digraph validation") {
    CHECK_THROWS_AS(Digraph(std::vector<std::vector<int>>{{0, 1}, {1, 1}}), InvalidArgument);
    CHECK_THROWS_AS(Digraph(std::vector<std::vector<int>>{{1, 2}, {0, 1}}), InvalidArgument);
    CHECK_THROWS_AS(Digraph(Matrix(2, 3, 1.0)), InvalidArgument);
    CHECK(one_way().edge(1, 2));
    CHECK_FALSE(one_way().edge(2, 1));
}

TEST_CASE("in-degree matrix") {
    CHECK(in_degree_matrix(Digraph::self_only(2)) == Matrix::identity(2));
    CHECK(in_degree_matrix(one_way()) == Matrix::diag({1, 2}));
    CHECK(in_degree_matrix(Digraph::all_to_all(3)) == 3.0 * Matrix::identity(3));
}

TEST_CASE("incoming neighbours") {
    CHECK(incoming_neighbors(one_way(), 1) == std::set<std::size_t>{1});
    CHECK(incoming_neighbors(one_way(), 2) == std::set<std::size_t>{1, 2});
    for (std::size_t i = 1; i <= 4; ++i) CHECK(incoming_neighbors(Digraph::self_only(4), i) == std::set<std::size_t>{i});
    CHECK_THROWS_AS(incoming_neighbors(one_way(), 0), InvalidArgument);
    CHECK_THROWS_AS(incoming_neighbors(one_way(), 3), InvalidArgument);
}

TEST_CASE("laplacian") {
    CHECK(laplacian(Digraph::self_only(3)).max_abs() == 0.0);
    CHECK(laplacian(Digraph::all_to_all(2)) == Matrix{{1, -1}, {-1, 1}});
    for (const auto& g : enumerate_digraphs(3, 9)) {
        Matrix l = laplacian(g, true);
        CHECK((l * Matrix(3, 1, 1.0)).max_abs() == 0.0);
        CHECK(l == laplacian(g, false));
    }
}

TEST_CASE("connectivity and balance") {
    CHECK(is_strongly_connected(Digraph::all_to_all(4)));
    CHECK(is_weight_balanced(Digraph::all_to_all(4)));
    CHECK_FALSE(is_strongly_connected(one_way()));
    CHECK_FALSE(is_weight_balanced(one_way()));
    CHECK(is_strongly_connected(Digraph::ring(5)));
    CHECK(is_weight_balanced(Digraph::ring(5)));
}

TEST_CASE("enumeration") {
    CHECK(enumerate_digraphs(1, 1).size() == 1);
    auto two = enumerate_digraphs(2, 4);
    REQUIRE(two.size() == 4);
    std::vector<std::size_t> traces;
    for (const auto& g : two) traces.push_back(static_cast<std::size_t>(in_degree_matrix(g).trace()));
    CHECK(traces == std::vector<std::size_t>{2, 3, 3, 4});
    // lexicographic on the flattened adjacency within a trace
    CHECK(two[1].to_rows() == std::vector<std::vector<int>>{{1, 0}, {1, 1}});
    CHECK(two[2].to_rows() == std::vector<std::vector<int>>{{1, 1}, {0, 1}});

    auto three = enumerate_digraphs(3, 9);
    CHECK(three.size() == 64);
    std::set<std::vector<std::vector<int>>> seen;
    std::size_t last = 0, total_in = 0;
    for (const auto& g : three) {
        seen.insert(g.to_rows());
        std::size_t t = static_cast<std::size_t>(in_degree_matrix(g).trace());
        CHECK(t >= last);
        last = t;
        std::size_t card = 0;
        for (std::size_t i = 1; i <= 3; ++i) card += incoming_neighbors(g, i).size();
        CHECK(card == t);
        total_in += t;
    }
    CHECK(seen.size() == 64);
    CHECK(enumerate_digraphs(3, 5).size() == 1 + 6 + 15);
    CHECK_THROWS_AS(enumerate_digraphs(6, 36), InvalidArgument);
}
