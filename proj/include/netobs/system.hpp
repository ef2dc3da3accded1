#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "netobs/graphnet.hpp"
#include "netobs/linalg.hpp"

namespace netobs {

struct Plant {
    Matrix A;  // n x n
    Matrix C;  // p x n

    Plant() = default;
    Plant(Matrix a, Matrix c);
    std::size_t n() const { return A.rows(); }
    std::size_t p() const { return C.rows(); }
};

// PBH test on every eigenvalue with nonnegative real part.
bool is_detectable(const Plant& plant);

// A - K_L C, the Luenberger error matrix; throws unless Hurwitz when
// require_hurwitz is set.
Matrix luenberger_matrix(const Plant& plant, const Matrix& K_L, bool require_hurwitz = false);

// N x N grid of n x p blocks; K(i,j) is the gain agent i applies to the
// innovation of neighbour j. Indices are 1-based.
class GainSchedule {
public:
    GainSchedule() = default;
    GainSchedule(std::size_t N, std::size_t n, std::size_t p);
    GainSchedule(std::size_t N, std::vector<Matrix> blocks);

    std::size_t N() const { return N_; }
    std::size_t n() const { return n_; }
    std::size_t p() const { return p_; }
    const Matrix& operator()(std::size_t i, std::size_t j) const { return blocks_[(i - 1) * N_ + (j - 1)]; }
    void set(std::size_t i, std::size_t j, const Matrix& k);
    const std::vector<Matrix>& blocks() const { return blocks_; }

    // Stacked nN x pN matrix without masking.
    Matrix stacked() const;
    static GainSchedule from_stacked(const Matrix& K, std::size_t N, std::size_t n, std::size_t p);

    // Gains for the scalar two-agent case, K = [[K11, K12], [K21, K22]].
    static GainSchedule scalar2(double k11, double k12, double k21, double k22);

private:
    std::size_t N_ = 0, n_ = 0, p_ = 0;
    std::vector<Matrix> blocks_;
};

// Throws InvalidArgument if some K_ij is nonzero although j does not send to i.
void check_gating(const Digraph& g, const GainSchedule& k);

struct ErrorSystem {
    Matrix A;  // nN x nN
    Matrix B;  // nN x pN
    Matrix C;  // nN x nN
    Digraph graph;
    std::size_t n = 0, p = 0, N = 0;
};

ErrorSystem assemble(const Plant& plant, const Digraph& g, const GainSchedule& gains);

// n x nN block row of the averaging output for agent i (1-based).
Matrix local_output(const ErrorSystem& es, std::size_t i);

// (1/N)(1^T (x) I_n) C, the network average of the local estimates.
Matrix average_output(const ErrorSystem& es);

// Noise shared by every agent enters through B (1_N (x) I_p).
Matrix common_noise_input(const ErrorSystem& es);

// Star topology: agent 1 sends to everyone, K_ii = K_L, K_i1 = alpha K_L.
std::pair<Digraph, GainSchedule> star_design(const Plant& plant, const Matrix& K_L, std::size_t N, double alpha_tilde);

// Uncoupled observers over G = I_N with K_ii = K_L.
std::pair<Digraph, GainSchedule> diagonal_design(const Plant& plant, const Matrix& K_L, std::size_t N);

}  // namespace netobs
