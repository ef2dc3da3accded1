#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "netobs/analysis.hpp"
#include "netobs/lmi.hpp"

namespace netobs {

// Bounded Real Lemma: feasible iff ||T||_inf < gamma.
Certificate brl_check(const TransferRealization& t, double gamma, const SolverOptions& opt = {});
// Smallest gamma accepted by brl_check, by bisection to rel_tol.
double brl_threshold(const TransferRealization& t, double rel_tol = 1e-6);

struct NamedMatrix {
    std::string name;
    Matrix value;
};

struct Design {
    Digraph graph;
    GainSchedule gains;
    double gamma = 0;      // hinf_norm of the realized design
    double lmi_bound = 0;  // gamma certified by the LMI that produced it, 0 if none
    double abscissa = 0;   // spectral abscissa of the error matrix
    std::string method;
    std::vector<NamedMatrix> certificate;
    double margin = 0;  // worst constraint margin of the certificate
    int iterations = 0;
};

// Recomputes abscissa and gamma from scratch; throws InfeasibleError when the
// eigenvalues are not left of -sigma.
void verify_design(const Plant& plant, Design& d, double sigma, const NormSpec& spec);

// Common Lyapunov matrix for rate and gain (block diagonal unless the graph is
// complete, so the gain inherits the graph's sparsity).
Design design_common_P(const Plant& plant, const Digraph& g, double sigma, const NormSpec& spec = global_spec(),
                       double rel_tol = 1e-6);

struct FixedGraphOptions {
    int starts = 8;
    std::uint64_t seed = 0x5EED;
    unsigned jobs = 1;
    int alternations = 2;
    int polish_iterations = 400;
    std::optional<double> gamma_target;    // stop once a verified design reaches it
    std::optional<Matrix> luenberger_gain;  // diagonal start; designed when absent
    std::vector<Matrix> warm_starts;        // stacked nN x pN gains, run after the regular starts
};

Design design_fixed_graph(const Plant& plant, const Digraph& g, double sigma, const NormSpec& spec = global_spec(),
                          const FixedGraphOptions& opt = {});

struct SeparatedDesign : Design {
    double h1 = 0, h2 = 0;
    std::vector<Matrix> P_i;
};
SeparatedDesign design_separated(const Plant& plant, std::size_t N, double sigma);

struct GraphVerdict {
    Digraph graph;
    std::size_t trace = 0;
    bool feasible = false;
    double gamma = 0;
};
struct EdgeSearch {
    Design design;
    std::vector<GraphVerdict> verdicts;
};
// Thrown by minimize_edges when no digraph qualifies; keeps every verdict.
class EdgeSearchInfeasible : public InfeasibleError {
public:
    EdgeSearchInfeasible(const std::string& what, std::vector<GraphVerdict> v)
        : InfeasibleError(what), verdicts(std::move(v)) {}
    std::vector<GraphVerdict> verdicts;
};
EdgeSearch minimize_edges(const Plant& plant, std::size_t N, double sigma, double gamma_star,
                          const NormSpec& spec = global_spec(), const FixedGraphOptions& opt = {});

// Largest eigenvalue of the 3n x 3n local-gain matrix at a given (P, alpha).
double local_gain_margin(const Plant& plant, const Matrix& K_L, const Matrix& P, double alpha_tilde);

struct LocalGainCertificate {
    bool feasible = false;
    double alpha_tilde = 0;
    Matrix P;
    double margin = 0;
    double gamma_L = 0;
    std::vector<double> local_gains;  // agents 2..N of the star design
    Design star;
};
LocalGainCertificate local_gain_certificate(const Plant& plant, const Matrix& K_L, std::size_t N = 3);

struct DilatedDesign : Design {
    Matrix P_S, P_H, Q_D, Q_H;
    double r_D = 0, r_H = 0;
};
std::vector<double> default_dilation_grid();
// Dilated certificate for a fixed design; r_D, r_H must be positive.
Certificate dilated_check(const ErrorSystem& es, double sigma, double gamma, double r_D, double r_H,
                          const NormSpec& spec = global_spec());
DilatedDesign design_dilated(const Plant& plant, const Digraph& g, double sigma, const NormSpec& spec = global_spec(),
                             const std::vector<double>& r_grid = default_dilation_grid());

struct AgentSweep {
    std::size_t best_N = 0;
    std::vector<std::pair<std::size_t, double>> per_N;
    std::vector<Design> designs;
};
AgentSweep sweep_agent_count(const Plant& plant, double sigma, double c1, double c2,
                             const std::vector<std::size_t>& N_set, const FixedGraphOptions& opt = {});

}  // namespace netobs
