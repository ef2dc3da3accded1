#include "netobs/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace netobs {

namespace {

void check_dims(std::size_t r, std::size_t c) {
    if (r == 0 || c == 0) throw InvalidArgument("matrix dimensions must be positive");
}

void check_finite(const std::vector<double>& a) {
    for (double v : a)
        if (!std::isfinite(v)) throw InvalidArgument("matrix entries must be finite");
}

void same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidArgument(std::string("dimension mismatch in ") + what);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill) : r_(rows), c_(cols), a_(rows * cols, fill) {
    check_dims(rows, cols);
    if (!std::isfinite(fill)) throw InvalidArgument("matrix entries must be finite");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : r_(rows), c_(cols), a_(std::move(data)) {
    check_dims(rows, cols);
    if (a_.size() != rows * cols) throw InvalidArgument("entry count does not match shape");
    check_finite(a_);
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    r_ = rows.size();
    c_ = r_ ? rows.begin()->size() : 0;
    check_dims(r_, c_);
    a_.reserve(r_ * c_);
    for (const auto& row : rows) {
        if (row.size() != c_) throw InvalidArgument("ragged matrix literal");
        a_.insert(a_.end(), row.begin(), row.end());
    }
    check_finite(a_);
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::column(const std::vector<double>& v) { return Matrix(v.size(), 1, v); }
Matrix Matrix::row(const std::vector<double>& v) { return Matrix(1, v.size(), v); }

Matrix Matrix::diag(const std::vector<double>& v) {
    Matrix m(v.size(), v.size());
    for (std::size_t i = 0; i < v.size(); ++i) m(i, i) = v[i];
    return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows[0].empty()) throw InvalidArgument("matrix dimensions must be positive");
    std::vector<double> d;
    for (const auto& r : rows) {
        if (r.size() != rows[0].size()) throw InvalidArgument("ragged matrix");
        d.insert(d.end(), r.begin(), r.end());
    }
    return Matrix(rows.size(), rows[0].size(), std::move(d));
}

Matrix Matrix::transpose() const {
    Matrix t(c_, r_);
    for (std::size_t i = 0; i < r_; ++i)
        for (std::size_t j = 0; j < c_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    if (r0 + nr > r_ || c0 + nc > c_) throw InvalidArgument("block out of range");
    Matrix b(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
        for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
    return b;
}

void Matrix::set_block(std::size_t r0, std::size_t c0, const Matrix& b) {
    if (r0 + b.rows() > r_ || c0 + b.cols() > c_) throw InvalidArgument("block out of range");
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
}

std::vector<std::vector<double>> Matrix::to_rows() const {
    std::vector<std::vector<double>> out(r_, std::vector<double>(c_));
    for (std::size_t i = 0; i < r_; ++i)
        for (std::size_t j = 0; j < c_; ++j) out[i][j] = (*this)(i, j);
    return out;
}

double Matrix::max_abs() const {
    double m = 0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
}

double Matrix::frobenius() const {
    double s = 0;
    for (double v : a_) s += v * v;
    return std::sqrt(s);
}

double Matrix::trace() const {
    double s = 0;
    for (std::size_t i = 0; i < std::min(r_, c_); ++i) s += (*this)(i, i);
    return s;
}

bool Matrix::all_finite() const {
    return std::all_of(a_.begin(), a_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& b) {
    same_shape(*this, b, "+");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += b.a_[k];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& b) {
    same_shape(*this, b, "-");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= b.a_[k];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& v : a_) v *= s;
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator-(Matrix a) { return a *= -1.0; }
Matrix operator*(double s, Matrix a) { return a *= s; }
Matrix operator*(Matrix a, double s) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw InvalidArgument("dimension mismatch in *");
    Matrix c(a.rows(), b.cols());
    const std::size_t n = a.rows(), m = a.cols(), p = b.cols();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < m; ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < p; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a.data() == b.data();
}

Matrix hstack(const std::vector<Matrix>& parts) {
    if (parts.empty()) throw InvalidArgument("hstack of nothing");
    std::size_t r = parts[0].rows(), c = 0;
    for (const auto& p : parts) {
        if (p.rows() != r) throw InvalidArgument("hstack row mismatch");
        c += p.cols();
    }
    Matrix out(r, c);
    std::size_t off = 0;
    for (const auto& p : parts) {
        out.set_block(0, off, p);
        off += p.cols();
    }
    return out;
}

Matrix vstack(const std::vector<Matrix>& parts) {
    if (parts.empty()) throw InvalidArgument("vstack of nothing");
    std::size_t c = parts[0].cols(), r = 0;
    for (const auto& p : parts) {
        if (p.cols() != c) throw InvalidArgument("vstack column mismatch");
        r += p.rows();
    }
    Matrix out(r, c);
    std::size_t off = 0;
    for (const auto& p : parts) {
        out.set_block(off, 0, p);
        off += p.rows();
    }
    return out;
}

Matrix block_diag(const std::vector<Matrix>& parts) {
    if (parts.empty()) throw InvalidArgument("block_diag of nothing");
    std::size_t r = 0, c = 0;
    for (const auto& p : parts) {
        r += p.rows();
        c += p.cols();
    }
    Matrix out(r, c);
    std::size_t ro = 0, co = 0;
    for (const auto& p : parts) {
        out.set_block(ro, co, p);
        ro += p.rows();
        co += p.cols();
    }
    return out;
}

Matrix sym(const Matrix& a) {
    if (!a.square()) throw InvalidArgument("sym needs a square matrix");
    Matrix s = a + a.transpose();
    return s *= 0.5;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            double s = a(i, j);
            if (s == 0.0) continue;
            for (std::size_t p = 0; p < b.rows(); ++p)
                for (std::size_t q = 0; q < b.cols(); ++q) k(i * b.rows() + p, j * b.cols() + q) = s * b(p, q);
        }
    return k;
}

Matrix khatri_rao(const std::vector<Matrix>& blocks, std::size_t N, const Matrix& m) {
    if (N == 0 || blocks.size() != N * N) throw InvalidArgument("khatri_rao needs N*N blocks");
    if (m.rows() != N || m.cols() != N) throw InvalidArgument("khatri_rao mask must be N x N");
    const std::size_t n = blocks[0].rows(), p = blocks[0].cols();
    for (const auto& b : blocks)
        if (b.rows() != n || b.cols() != p) throw InvalidArgument("khatri_rao blocks differ in shape");
    Matrix out(N * n, N * p);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) out.set_block(i * n, j * p, m(i, j) * blocks[i * N + j]);
    return out;
}

bool is_symmetric(const Matrix& a, double tol) {
    if (!a.square()) return false;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol) return false;
    return true;
}

// ---- complex helpers ----

CMatrix::CMatrix(const Matrix& m) : r_(m.rows()), c_(m.cols()), a_(m.rows() * m.cols()) {
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] = m.data()[k];
}

CMatrix CMatrix::adjoint() const {
    CMatrix t(c_, r_);
    for (std::size_t i = 0; i < r_; ++i)
        for (std::size_t j = 0; j < c_; ++j) t(j, i) = std::conj((*this)(i, j));
    return t;
}

CMatrix operator*(const CMatrix& a, const CMatrix& b) {
    if (a.cols() != b.rows()) throw InvalidArgument("dimension mismatch in complex *");
    CMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            cplx aik = a(i, k);
            if (aik == cplx(0.0)) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

CMatrix csolve(CMatrix a, CMatrix b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.rows() != n) throw InvalidArgument("csolve dimension mismatch");
    double scale = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(a(i, j)));
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            for (std::size_t j = 0; j < b.cols(); ++j) std::swap(b(k, j), b(piv, j));
        }
        // exactly singular pivots are nudged; callers doing inverse iteration rely on it
        if (std::abs(a(k, k)) <= 1e-300 + 1e-16 * scale) a(k, k) = cplx(1e-16 * std::max(scale, 1e-300), 0.0);
        for (std::size_t i = k + 1; i < n; ++i) {
            cplx f = a(i, k) / a(k, k);
            if (f == cplx(0.0)) continue;
            for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
            for (std::size_t j = 0; j < b.cols(); ++j) b(i, j) -= f * b(k, j);
        }
    }
    for (std::size_t c = 0; c < b.cols(); ++c)
        for (std::size_t ii = n; ii-- > 0;) {
            cplx s = b(ii, c);
            for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * b(j, c);
            b(ii, c) = s / a(ii, ii);
        }
    return b;
}

double csigma_max(const CMatrix& m, std::vector<cplx>* u, std::vector<cplx>* v) {
    // Hermitian M^H M embedded as a real symmetric matrix of twice the size.
    CMatrix h = m.adjoint() * m;
    const std::size_t n = h.rows();
    Matrix e(2 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double re = 0.5 * (h(i, j).real() + h(j, i).real());
            double im = 0.5 * (h(i, j).imag() - h(j, i).imag());
            e(i, j) = re;
            e(n + i, n + j) = re;
            e(i, n + j) = -im;
            e(n + i, j) = im;
        }
    SymEig se = sym_eig(e);
    double lam = std::max(se.values.back(), 0.0);
    double s = std::sqrt(lam);
    if (v || u) {
        std::vector<cplx> vv(n);
        const std::size_t c = 2 * n - 1;
        double nrm = 0;
        for (std::size_t i = 0; i < n; ++i) {
            vv[i] = cplx(se.vectors(i, c), se.vectors(n + i, c));
            nrm += std::norm(vv[i]);
        }
        nrm = std::sqrt(nrm);
        for (auto& x : vv) x /= nrm;
        if (u) {
            std::vector<cplx> uu(m.rows());
            double un = 0;
            for (std::size_t i = 0; i < m.rows(); ++i) {
                for (std::size_t j = 0; j < n; ++j) uu[i] += m(i, j) * vv[j];
                un += std::norm(uu[i]);
            }
            un = std::sqrt(un);
            if (un > 0)
                for (auto& x : uu) x /= un;
            *u = std::move(uu);
        }
        if (v) *v = std::move(vv);
    }
    return s;
}

}  // namespace netobs
