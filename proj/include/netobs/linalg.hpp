#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include "netobs/errors.hpp"

namespace netobs {

using cplx = std::complex<double>;

// Dense row-major real matrix. Entries must be finite and both dimensions
// positive.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, c, 0.0); }
    static Matrix column(const std::vector<double>& v);
    static Matrix row(const std::vector<double>& v);
    static Matrix diag(const std::vector<double>& v);
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const { return r_; }
    std::size_t cols() const { return c_; }
    bool empty() const { return r_ == 0 || c_ == 0; }
    bool square() const { return r_ == c_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * c_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * c_ + j]; }
    const std::vector<double>& data() const { return a_; }
    std::vector<double>& data() { return a_; }

    Matrix transpose() const;
    Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
    void set_block(std::size_t r0, std::size_t c0, const Matrix& b);
    std::vector<std::vector<double>> to_rows() const;

    double max_abs() const;
    double frobenius() const;
    double trace() const;
    bool all_finite() const;

    Matrix& operator+=(const Matrix& b);
    Matrix& operator-=(const Matrix& b);
    Matrix& operator*=(double s);

private:
    std::size_t r_ = 0, c_ = 0;
    std::vector<double> a_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator-(Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(double s, Matrix a);
Matrix operator*(Matrix a, double s);
bool operator==(const Matrix& a, const Matrix& b);

Matrix hstack(const std::vector<Matrix>& parts);
Matrix vstack(const std::vector<Matrix>& parts);
Matrix block_diag(const std::vector<Matrix>& parts);
Matrix sym(const Matrix& a);  // (A + A^T) / 2

Matrix kron(const Matrix& a, const Matrix& b);

// Block (i,j) of the result is m(i,j) * blocks[i*N+j]; m is N x N and every
// block has the same shape.
Matrix khatri_rao(const std::vector<Matrix>& blocks, std::size_t N, const Matrix& m);

// Complex helpers used by frequency-domain code.
class CMatrix {
public:
    CMatrix() = default;
    CMatrix(std::size_t r, std::size_t c) : r_(r), c_(c), a_(r * c) {}
    explicit CMatrix(const Matrix& m);
    std::size_t rows() const { return r_; }
    std::size_t cols() const { return c_; }
    cplx& operator()(std::size_t i, std::size_t j) { return a_[i * c_ + j]; }
    cplx operator()(std::size_t i, std::size_t j) const { return a_[i * c_ + j]; }
    CMatrix adjoint() const;

private:
    std::size_t r_ = 0, c_ = 0;
    std::vector<cplx> a_;
};
CMatrix operator*(const CMatrix& a, const CMatrix& b);
// Solves X from A X = B with partial pivoting.
CMatrix csolve(CMatrix a, CMatrix b);
// Largest singular value with left/right singular vectors.
double csigma_max(const CMatrix& m, std::vector<cplx>* u = nullptr, std::vector<cplx>* v = nullptr);

// Eigen-decompositions.
struct RealSchur {
    Matrix T;  // quasi upper-triangular
    Matrix Z;  // orthogonal, A = Z T Z^T
    std::vector<cplx> eigenvalues;
};
RealSchur real_schur(const Matrix& a, bool want_z = true, int max_iter_per_eig = 60);
std::vector<cplx> eig(const Matrix& a);
// Eigenvectors scaled to unit 2-norm, columns in the same order as eig().
std::vector<std::vector<cplx>> eigenvectors(const Matrix& a, const std::vector<cplx>& lambda);

struct SymEig {
    std::vector<double> values;  // ascending
    Matrix vectors;              // columns
};
SymEig sym_eig(const Matrix& a);
double lambda_max_sym(const Matrix& a);
double lambda_min_sym(const Matrix& a);

double spectral_abscissa(const Matrix& a);
double log_norm(const Matrix& a);
double jordan_condition(const Matrix& a);
double spectral_norm(const Matrix& a);
std::vector<double> singular_values(const Matrix& a);

// LU with partial pivoting.
struct LU {
    Matrix lu;
    std::vector<std::size_t> piv;
    int sign = 1;
    bool singular = false;
};
LU lu_factor(const Matrix& a);
Matrix lu_solve(const LU& f, const Matrix& b);
Matrix solve(const Matrix& a, const Matrix& b);
Matrix inverse(const Matrix& a);
double cond2(const Matrix& a);
double determinant(const Matrix& a);

// Cholesky of a symmetric positive definite matrix; returns false if it
// breaks down.
bool cholesky(const Matrix& a, Matrix& l);

Matrix expm(const Matrix& a);
Matrix expm(const Matrix& a, double t);

bool is_symmetric(const Matrix& a, double tol = 0.0);
bool is_hurwitz(const Matrix& a);

}  // namespace netobs
