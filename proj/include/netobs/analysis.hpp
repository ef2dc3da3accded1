#pragma once

#include <optional>
#include <string>
#include <vector>

#include "netobs/linalg.hpp"
#include "netobs/system.hpp"

namespace netobs {

struct TransferRealization {
    Matrix A, B, C, D;  // D may be left empty for a strictly proper map

    TransferRealization() = default;
    TransferRealization(Matrix a, Matrix b, Matrix c);
    TransferRealization(Matrix a, Matrix b, Matrix c, Matrix d);
    bool has_d() const { return !D.empty(); }
};

struct HinfResult {
    double gamma = 0;  // upper end of the final bracket
    double lower = 0;  // best attained sigma_max(T(j w))
    double omega = 0;  // frequency attaining `lower`
    int iterations = 0;
};

constexpr double kHinfRelTol = 1e-6;

HinfResult hinf_peak(const TransferRealization& t, double rel_tol = kHinfRelTol);
double hinf_norm(const TransferRealization& t, double rel_tol = kHinfRelTol);
// sigma_max(C (jw - A)^{-1} B + D)
double sigma_at(const TransferRealization& t, double omega);
// Dense log-spaced sweep over [1e-3, w_max] plus w = 0.
double hinf_sweep(const TransferRealization& t, std::size_t points = 10000, double w_max = 1e3);

// Which disturbance and output a norm refers to.
enum class NoiseSharing { independent, common };
enum class OutputKind { stacked, average, local };
struct NormSpec {
    NoiseSharing sharing = NoiseSharing::independent;
    OutputKind output = OutputKind::stacked;
    std::size_t agent = 1;  // for OutputKind::local
};
// Global gain: one noise signal shared by all agents, network
// average of the local estimates as output.
NormSpec global_spec();
// Local gain at agent i: independent noise per agent, agent i's averaged
// estimate as output.
NormSpec local_spec(std::size_t i);

TransferRealization error_transfer(const ErrorSystem& es, const NormSpec& spec);
double network_hinf(const ErrorSystem& es, const NormSpec& spec, double rel_tol = kHinfRelTol);

// Luenberger map m -> e_L = x - x_hat, realization (A - K_L C, K_L, I).
TransferRealization luenberger_transfer(const Plant& plant, const Matrix& K_L);

enum class KLCondition { distinct_eig, dissipative, lyapunov };
const char* to_string(KLCondition c);

// |ebar(t)| <= c e^{-rate t} |e(0)| + gain |m|_inf
struct KLBound {
    double c = 0, rate = 0, gain = 0;
    KLCondition condition = KLCondition::distinct_eig;
    double envelope(double e0_norm, double t) const;
    double bound(double e0_norm, double m_inf, double t) const;
};

// Generic version on a triple (A, B, Cout); the ErrorSystem overload uses
// (A_cal, B_cal, C_cal).
KLBound kl_bound(const Matrix& A, const Matrix& B, const Matrix& Cout, KLCondition condition,
                 const std::optional<Matrix>& P = std::nullopt, std::optional<double> alpha_bar = std::nullopt);
KLBound kl_bound(const ErrorSystem& es, KLCondition condition, const std::optional<Matrix>& P = std::nullopt,
                 std::optional<double> alpha_bar = std::nullopt);
KLBound luenberger_kl_bound(const Plant& plant, const Matrix& K_L, KLCondition condition,
                            const std::optional<Matrix>& P = std::nullopt,
                            std::optional<double> alpha_bar = std::nullopt);

struct BoundComparison {
    bool rate_strictly_better = false;
    bool gain_strictly_better = false;
    std::optional<double> crossover_t_star;
};
BoundComparison compare_bounds(const KLBound& ours, const KLBound& luenberger, double e0_norm, double eL0_norm);

std::vector<double> steady_state_error(const ErrorSystem& es, const std::vector<double>& m_const);
double convergence_rate(const ErrorSystem& es);

struct ScalarHinf {
    double value = 0;
    bool closed_form = false;  // false: parameters outside the closed-form domain, value from hinf_norm
    double hamiltonian = 0;    // hinf_norm of the assembled system, always computed
};
// Two agents, all-to-all, K11 = K22 = K_L, one noise shared by both agents,
// output the average of the two estimates.
ScalarHinf scalar_two_agent_hinf(double a, double K_L, double K12, double K21);
bool in_closed_form_domain(double a, double K_L, double K12, double K21);

struct UncoupledAverage {
    double avg_abs = 0;
    double luenberger_abs = 0;
};
UncoupledAverage uncoupled_average_oracle(double a, double K_L, double K1, double K2, double m);

}  // namespace netobs
