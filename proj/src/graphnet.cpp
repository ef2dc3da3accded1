#include "netobs/graphnet.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>

namespace netobs {

Digraph::Digraph(const Matrix& adjacency) : N_(adjacency.rows()), G_(adjacency) {
    if (!adjacency.square()) throw InvalidArgument("adjacency must be square");
    for (std::size_t i = 0; i < N_; ++i)
        for (std::size_t j = 0; j < N_; ++j) {
            double v = G_(i, j);
            if (v != 0.0 && v != 1.0) throw InvalidArgument("adjacency entries must be 0 or 1");
        }
    for (std::size_t i = 0; i < N_; ++i)
        if (G_(i, i) != 1.0) throw InvalidArgument("every agent must be self-connected (g_ii = 1)");
}

Digraph::Digraph(const std::vector<std::vector<int>>& adjacency) {
    std::vector<std::vector<double>> rows;
    for (const auto& r : adjacency) rows.emplace_back(r.begin(), r.end());
    *this = Digraph(Matrix::from_rows(rows));
}

Digraph Digraph::all_to_all(std::size_t N) { return Digraph(Matrix(N, N, 1.0)); }
Digraph Digraph::self_only(std::size_t N) { return Digraph(Matrix::identity(N)); }

Digraph Digraph::ring(std::size_t N) {
    Matrix g = Matrix::identity(N);
    for (std::size_t i = 0; i < N; ++i) g(i, (i + 1) % N) = 1.0;
    return Digraph(g);
}

std::size_t Digraph::edge_count() const {
    std::size_t c = 0;
    for (double v : G_.data()) c += (v != 0.0);
    return c;
}

std::vector<std::vector<int>> Digraph::to_rows() const {
    std::vector<std::vector<int>> out(N_, std::vector<int>(N_));
    for (std::size_t i = 0; i < N_; ++i)
        for (std::size_t j = 0; j < N_; ++j) out[i][j] = static_cast<int>(G_(i, j));
    return out;
}

Matrix in_degree_matrix(const Digraph& g) {
    const std::size_t N = g.size();
    Matrix d(N, N);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) d(i, i) += g.adjacency()(j, i);
    return d;
}

Matrix out_degree_matrix(const Digraph& g) {
    const std::size_t N = g.size();
    Matrix d(N, N);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) d(i, i) += g.adjacency()(i, j);
    return d;
}

std::set<std::size_t> incoming_neighbors(const Digraph& g, std::size_t i) {
    if (i < 1 || i > g.size()) throw InvalidArgument("node index out of range");
    std::set<std::size_t> s;
    for (std::size_t j = 1; j <= g.size(); ++j)
        if (g.edge(j, i)) s.insert(j);
    return s;
}

// Self-loops add one to both D_ii and g_ii, so D - G is the same either way.
// Rows follow incoming neighbours, so L(i,j) = -1 when j sends to i and every row sums to zero.
Matrix laplacian(const Digraph& g, bool /*include_self_loops*/) {
    return in_degree_matrix(g) - g.adjacency().transpose();
}

bool is_strongly_connected(const Digraph& g) {
    const std::size_t N = g.size();
    std::vector<std::vector<bool>> reach(N, std::vector<bool>(N));
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) reach[i][j] = g.adjacency()(i, j) != 0.0;
    for (std::size_t k = 0; k < N; ++k)
        for (std::size_t i = 0; i < N; ++i)
            if (reach[i][k])
                for (std::size_t j = 0; j < N; ++j)
                    if (reach[k][j]) reach[i][j] = true;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
            if (!reach[i][j]) return false;
    return true;
}

bool is_weight_balanced(const Digraph& g) {
    Matrix din = in_degree_matrix(g), dout = out_degree_matrix(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (din(i, i) != dout(i, i)) return false;
    return true;
}

void enumerate_digraphs(std::size_t N, std::size_t max_edges, const std::function<bool(const Digraph&)>& visit) {
    if (N == 0) throw InvalidArgument("graph needs at least one node");
    if (N > kMaxEnumerationNodes) throw InvalidArgument("enumeration is capped at 5 nodes");
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
            if (i != j) slots.emplace_back(i, j);
    const std::size_t m = slots.size();
    // Bit b of the mask corresponds to slot b; slots are in row-major order,
    // so comparing the flattened adjacency lexicographically means comparing
    // the bit strings read from slot 0 onward.
    std::vector<std::vector<std::uint32_t>> by_count(m + 1);
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) by_count[std::popcount(mask)].push_back(mask);
    auto key = [&](std::uint32_t mask) {
        std::uint32_t r = 0;
        for (std::size_t b = 0; b < m; ++b)
            if (mask & (1u << b)) r |= 1u << (m - 1 - b);
        return r;
    };
    for (std::size_t c = 0; c <= m; ++c) {
        if (N + c > max_edges) break;
        auto& list = by_count[c];
        std::sort(list.begin(), list.end(), [&](std::uint32_t a, std::uint32_t b) { return key(a) < key(b); });
        for (std::uint32_t mask : list) {
            Matrix G = Matrix::identity(N);
            for (std::size_t b = 0; b < m; ++b)
                if (mask & (1u << b)) G(slots[b].first, slots[b].second) = 1.0;
            if (!visit(Digraph(G))) return;
        }
    }
}

std::vector<Digraph> enumerate_digraphs(std::size_t N, std::size_t max_edges) {
    std::vector<Digraph> out;
    enumerate_digraphs(N, max_edges, [&](const Digraph& g) {
        out.push_back(g);
        return true;
    });
    return out;
}

}  // namespace netobs
