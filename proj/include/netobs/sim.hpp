#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "netobs/analysis.hpp"
#include "netobs/system.hpp"

namespace netobs {

enum class NoiseKind { zero, constant, sinusoid, white };
const char* to_string(NoiseKind k);

// m(t) = offset + amplitude sin(omega t); white noise is uniform on
// [-amplitude, amplitude] plus offset, held constant over each grid interval.
struct NoiseChannel {
    double offset = 0, amplitude = 0, omega = 0;
};

struct NoiseSpec {
    NoiseKind kind = NoiseKind::zero;
    NoiseSharing sharing = NoiseSharing::common;
    // One entry shared by every agent, or one per agent.
    std::vector<NoiseChannel> agents{NoiseChannel{}};
    std::uint64_t seed = 0;
    double hold = 1e-3;  // white noise only

    static NoiseSpec none();
    static NoiseSpec constant(double b0);
    static NoiseSpec sinusoid(double b0, double b1, double omega);
    static NoiseSpec white(double b1, std::uint64_t seed, NoiseSharing sharing = NoiseSharing::independent,
                           double hold = 1e-3);
};

// Noise seen by agent (1-based) at time t, a vector of size p.
std::vector<double> noise_sample(const NoiseSpec& spec, double t, std::size_t agent, std::size_t p);

struct SimTrace {
    std::vector<double> t;
    Matrix x;     // samples x n
    Matrix xhat;  // samples x nN, agent-major
    Matrix ebar;  // samples x nN
    Matrix m;     // samples x pN
    std::size_t n = 0, p = 0, N = 0;
    double dt = 0;
    std::string integrator;

    double ebar_norm(std::size_t k) const;
    std::vector<double> ebar_at(std::size_t k) const;
};

// Exact discretization of the error dynamics e' = A_cal e + B_cal m with a
// four-point Gauss-Legendre rule for the noise integral (corrected so that
// constant noise is integrated exactly).
SimTrace simulate(const Plant& plant, const Digraph& g, const GainSchedule& gains, const NoiseSpec& noise,
                  const std::vector<double>& x0, const std::vector<std::vector<double>>& xhat0, double T,
                  double dt = 1e-3);

// Luenberger observer on the same plant, reported as a one-agent trace.
SimTrace simulate_luenberger(const Plant& plant, const Matrix& K_L, const NoiseSpec& noise,
                             const std::vector<double>& x0, const std::vector<double>& xhat0, double T,
                             double dt = 1e-3);

struct ErrorStats {
    std::vector<double> mean, std;  // one entry per agent coordinate (nN)
    std::size_t samples = 0;
};
ErrorStats error_stats(const SimTrace& trace, double transient_cut = 5.0);

// First time after which |ebar| of `ours` stays below |e| of `baseline`
// (euclidean norms over all coordinates).
std::optional<double> simulated_crossover(const SimTrace& ours, const SimTrace& baseline);

struct ConsensusTrace {
    SimTrace observers;
    Matrix xi;     // samples x nN
    Matrix v;      // samples x nN
    Matrix delta;  // samples x nN, xi_i - average of xhat
    double max_v_sum = 0;  // largest |sum_i v_i| over the run, per coordinate

    double max_delta(std::size_t k) const;
};

// Dynamic average consensus driven by zero-noise observers; requires a
// strongly connected, weight-balanced graph and sum_i v0_i = 0.
ConsensusTrace consensus_simulate(const Plant& plant, const Digraph& g, const GainSchedule& gains, double beta1,
                                  double beta2, const std::vector<double>& x0,
                                  const std::vector<std::vector<double>>& xhat0,
                                  const std::vector<std::vector<double>>& xi0,
                                  const std::vector<std::vector<double>>& v0, double T, double dt = 1e-3);

// Header t, x_1..x_n, xhat_i_k..., ebar_i_k..., m_j_k...; full precision.
void write_csv(std::ostream& os, const SimTrace& trace);

}  // namespace netobs
