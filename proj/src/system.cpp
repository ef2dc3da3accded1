#include "netobs/system.hpp"

#include <cmath>

namespace netobs {

Plant::Plant(Matrix a, Matrix c) : A(std::move(a)), C(std::move(c)) {
    if (!A.square()) throw InvalidArgument("plant A must be square");
    if (C.cols() != A.rows()) throw InvalidArgument("plant C must have n columns");
}

bool is_detectable(const Plant& plant) {
    const std::size_t n = plant.n(), p = plant.p();
    for (const cplx& lam : eig(plant.A)) {
        if (lam.real() < 0) continue;
        // rank of [lam I - A; C] over C, via the real embedding of the
        // Hermitian Gram matrix
        CMatrix m(n + p, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) m(i, j) = (i == j ? lam : cplx(0.0)) - plant.A(i, j);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < n; ++j) m(n + i, j) = plant.C(i, j);
        CMatrix h = m.adjoint() * m;
        Matrix e(2 * n, 2 * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                e(i, j) = e(n + i, n + j) = h(i, j).real();
                e(i, n + j) = -h(i, j).imag();
                e(n + i, j) = h(i, j).imag();
            }
        auto vals = sym_eig(e).values;
        double scale = std::max(1.0, vals.back());
        if (vals.front() <= 1e-12 * scale) return false;
    }
    return true;
}

Matrix luenberger_matrix(const Plant& plant, const Matrix& K_L, bool require_hurwitz) {
    if (K_L.rows() != plant.n() || K_L.cols() != plant.p()) throw InvalidArgument("K_L must be n x p");
    Matrix a = plant.A - K_L * plant.C;
    if (require_hurwitz && !is_hurwitz(a)) throw InvalidArgument("A - K_L C is not Hurwitz");
    return a;
}

GainSchedule::GainSchedule(std::size_t N, std::size_t n, std::size_t p)
    : N_(N), n_(n), p_(p), blocks_(N * N, Matrix(n, p)) {}

GainSchedule::GainSchedule(std::size_t N, std::vector<Matrix> blocks) : N_(N), blocks_(std::move(blocks)) {
    if (N == 0 || blocks_.size() != N * N) throw InvalidArgument("gain schedule needs N*N blocks");
    n_ = blocks_[0].rows();
    p_ = blocks_[0].cols();
    for (const auto& b : blocks_)
        if (b.rows() != n_ || b.cols() != p_) throw InvalidArgument("gain blocks must all be n x p");
}

void GainSchedule::set(std::size_t i, std::size_t j, const Matrix& k) {
    if (i < 1 || j < 1 || i > N_ || j > N_) throw InvalidArgument("gain index out of range");
    if (k.rows() != n_ || k.cols() != p_) throw InvalidArgument("gain block must be n x p");
    blocks_[(i - 1) * N_ + (j - 1)] = k;
}

Matrix GainSchedule::stacked() const {
    Matrix K(N_ * n_, N_ * p_);
    for (std::size_t i = 0; i < N_; ++i)
        for (std::size_t j = 0; j < N_; ++j) K.set_block(i * n_, j * p_, blocks_[i * N_ + j]);
    return K;
}

GainSchedule GainSchedule::from_stacked(const Matrix& K, std::size_t N, std::size_t n, std::size_t p) {
    if (K.rows() != N * n || K.cols() != N * p) throw InvalidArgument("stacked gain has wrong shape");
    GainSchedule g(N, n, p);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) g.blocks_[i * N + j] = K.block(i * n, j * p, n, p);
    return g;
}

GainSchedule GainSchedule::scalar2(double k11, double k12, double k21, double k22) {
    return GainSchedule(2, {Matrix{{k11}}, Matrix{{k12}}, Matrix{{k21}}, Matrix{{k22}}});
}

void check_gating(const Digraph& g, const GainSchedule& k) {
    if (g.size() != k.N()) throw InvalidArgument("graph and gain schedule disagree on N");
    for (std::size_t i = 1; i <= k.N(); ++i)
        for (std::size_t j = 1; j <= k.N(); ++j)
            if (!g.edge(j, i) && k(i, j).max_abs() != 0.0)
                throw InvalidArgument("nonzero gain K_" + std::to_string(i) + std::to_string(j) +
                                      " on a missing edge");
}

ErrorSystem assemble(const Plant& plant, const Digraph& g, const GainSchedule& gains) {
    const std::size_t N = g.size(), n = plant.n(), p = plant.p();
    if (gains.N() != N || gains.n() != n || gains.p() != p) throw InvalidArgument("gain schedule dimensions mismatch");
    check_gating(g, gains);
    const Matrix IN = Matrix::identity(N), In = Matrix::identity(n);
    const Matrix Gt = g.adjacency().transpose();
    ErrorSystem es;
    es.n = n;
    es.p = p;
    es.N = N;
    es.graph = g;
    es.B = khatri_rao(gains.blocks(), N, Gt);
    es.A = kron(IN, plant.A) - es.B * kron(IN, plant.C);
    Matrix Dinv = in_degree_matrix(g);
    for (std::size_t i = 0; i < N; ++i) Dinv(i, i) = 1.0 / Dinv(i, i);
    es.C = kron(Dinv, In) * kron(Gt, In);
    return es;
}

Matrix local_output(const ErrorSystem& es, std::size_t i) {
    if (i < 1 || i > es.N) throw InvalidArgument("node index out of range");
    return es.C.block((i - 1) * es.n, 0, es.n, es.n * es.N);
}

Matrix average_output(const ErrorSystem& es) {
    Matrix avg = kron(Matrix(1, es.N, 1.0 / static_cast<double>(es.N)), Matrix::identity(es.n));
    return avg * es.C;
}

Matrix common_noise_input(const ErrorSystem& es) {
    return es.B * kron(Matrix(es.N, 1, 1.0), Matrix::identity(es.p));
}

std::pair<Digraph, GainSchedule> star_design(const Plant& plant, const Matrix& K_L, std::size_t N, double alpha_tilde) {
    if (N < 2) throw InvalidArgument("star design needs N >= 2");
    if (K_L.rows() != plant.n() || K_L.cols() != plant.p()) throw InvalidArgument("K_L must be n x p");
    Matrix G = Matrix::identity(N);
    for (std::size_t j = 1; j < N; ++j) G(0, j) = 1.0;
    GainSchedule k(N, plant.n(), plant.p());
    for (std::size_t i = 1; i <= N; ++i) k.set(i, i, K_L);
    for (std::size_t i = 2; i <= N; ++i) k.set(i, 1, alpha_tilde * K_L);
    return {Digraph(G), k};
}

std::pair<Digraph, GainSchedule> diagonal_design(const Plant& plant, const Matrix& K_L, std::size_t N) {
    GainSchedule k(N, plant.n(), plant.p());
    for (std::size_t i = 1; i <= N; ++i) k.set(i, i, K_L);
    return {Digraph::self_only(N), k};
}

}  // namespace netobs
