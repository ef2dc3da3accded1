#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "netobs/linalg.hpp"

namespace netobs {

constexpr double kFeasTol = 1e-7;
constexpr double kVarBox = 1e6;

enum class Sense { negative, positive };

// Affine matrix inequalities in matrix-valued unknowns. Every unknown is a
// list of scalar decision variables; constraints are symmetric block
// matrices whose blocks are sums of constants and terms L * X * R.
class LmiProblem {
public:
    using VarId = std::size_t;
    using ConId = std::size_t;

    // Symmetric n x n unknown. A mask (n x n, symmetric) zeroes entries.
    VarId symmetric(std::string name, std::size_t n);
    VarId symmetric(std::string name, const Matrix& mask);
    VarId full(std::string name, std::size_t rows, std::size_t cols);
    VarId full(std::string name, const Matrix& mask);
    VarId scalar(std::string name) { return full(std::move(name), 1, 1); }

    ConId constraint(std::string name, std::vector<std::size_t> block_sizes, Sense sense = Sense::negative);

    // Adds M to block (bi, bj) and M^T to (bj, bi). A diagonal block takes M
    // as is, so M must be symmetric there.
    void add(ConId c, std::size_t bi, std::size_t bj, const Matrix& M);
    // Same for the term s * L X R (or s * L X^T R when transposed).
    void add(ConId c, std::size_t bi, std::size_t bj, const Matrix& L, VarId v, const Matrix& R, double s = 1.0,
             bool transposed = false);
    // s * X on a diagonal block (X square).
    void add(ConId c, std::size_t bi, VarId v, double s = 1.0);
    // x * M for a scalar unknown x.
    void add_scaled(ConId c, std::size_t bi, std::size_t bj, VarId scalar, const Matrix& M);

    std::size_t num_scalars() const { return nscalar_; }
    std::size_t num_constraints() const { return cons_.size(); }
    const std::string& variable_name(VarId v) const { return vars_.at(v).name; }
    const std::string& constraint_name(ConId c) const { return cons_.at(c).name; }
    std::size_t num_variables() const { return vars_.size(); }

    Matrix value(VarId v, const std::vector<double>& x) const;
    // Constraint matrix oriented so that feasibility means negative definite.
    Matrix evaluate(ConId c, const std::vector<double>& x) const;
    // Scalars encoding a given value of an unknown (entries outside the mask
    // are ignored).
    void assign(VarId v, const Matrix& value, std::vector<double>& x) const;

    // Throws InvalidArgument if some constraint is not symmetric in every
    // coefficient. Called by the solver.
    void check() const;

    struct Coeff {
        std::size_t k;
        Matrix F;
    };
    struct Con {
        std::string name;
        std::vector<std::size_t> sizes, offsets;
        std::size_t dim = 0;
        Sense sense = Sense::negative;
        Matrix F0;
        std::vector<Coeff> coeffs;  // one entry per scalar unknown that appears
        Matrix& coeff(std::size_t k);
    };
    const Con& con(ConId c) const { return cons_.at(c); }

private:
    struct Var {
        std::string name;
        std::size_t rows = 0, cols = 0;
        bool symmetric = false;
        std::vector<long> index;  // row-major, -1 for structural zeros
    };
    VarId add_var(Var v);
    std::vector<Var> vars_;
    std::vector<Con> cons_;
    std::size_t nscalar_ = 0;
};

struct SolverOptions {
    double feas_tol = kFeasTol;
    double box = kVarBox;
    // Stop once the margin is this negative; 0 runs to the analytic optimum.
    double target_margin = 1e-4;
    int max_newton = 600;
};

struct Certificate {
    bool feasible = false;
    bool inconclusive = false;  // box reached without a certificate
    double margin = 0;          // largest eigenvalue over all constraints (oriented)
    double lower_bound = 0;     // best-margin lower bound when infeasible
    int iterations = 0;
    std::vector<double> x;
    std::vector<double> constraint_margins;
    std::string message;
};

Certificate solve_feasibility(const LmiProblem& p, const SolverOptions& opt = {});
Certificate solve_feasibility(const LmiProblem& p, const std::vector<double>& x0, const SolverOptions& opt = {});

// Independent re-check of a point: largest eigenvalue of every oriented
// constraint matrix.
std::vector<double> constraint_margins(const LmiProblem& p, const std::vector<double>& x);

}  // namespace netobs
