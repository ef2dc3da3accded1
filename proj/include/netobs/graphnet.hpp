#pragma once

#include <cstddef>
#include <functional>
#include <set>
#include <vector>

#include "netobs/linalg.hpp"

namespace netobs {

// Digraph with mandatory self-loops. adjacency(i,j) = 1 iff agent i sends to
// agent j. Node indices in the public interface are 1-based.
class Digraph {
public:
    Digraph() = default;
    explicit Digraph(const Matrix& adjacency);
    explicit Digraph(const std::vector<std::vector<int>>& adjacency);

    static Digraph all_to_all(std::size_t N);
    static Digraph self_only(std::size_t N);
    static Digraph ring(std::size_t N);

    std::size_t size() const { return N_; }
    const Matrix& adjacency() const { return G_; }
    bool edge(std::size_t from, std::size_t to) const { return G_(from - 1, to - 1) != 0.0; }
    std::size_t edge_count() const;  // includes self-loops, equals trace(D)
    std::vector<std::vector<int>> to_rows() const;

    bool operator==(const Digraph& o) const { return G_ == o.G_; }

private:
    std::size_t N_ = 0;
    Matrix G_;
};

Matrix in_degree_matrix(const Digraph& g);
Matrix out_degree_matrix(const Digraph& g);
std::set<std::size_t> incoming_neighbors(const Digraph& g, std::size_t i);
Matrix laplacian(const Digraph& g, bool include_self_loops = false);
bool is_strongly_connected(const Digraph& g);
bool is_weight_balanced(const Digraph& g);

constexpr std::size_t kMaxEnumerationNodes = 5;

// All digraphs on N nodes with self-loops and at most max_edges edges
// (self-loops included), ordered by trace(D) and then lexicographically on the
// row-major adjacency. The callback returns false to stop early.
void enumerate_digraphs(std::size_t N, std::size_t max_edges, const std::function<bool(const Digraph&)>& visit);
std::vector<Digraph> enumerate_digraphs(std::size_t N, std::size_t max_edges);

}  // namespace netobs
