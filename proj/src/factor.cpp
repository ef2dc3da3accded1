#include "netobs/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace netobs {

LU lu_factor(const Matrix& a) {
    if (!a.square()) throw InvalidArgument("LU needs a square matrix");
    const std::size_t n = a.rows();
    LU f;
    f.lu = a;
    f.piv.resize(n);
    for (std::size_t i = 0; i < n; ++i) f.piv[i] = i;
    Matrix& m = f.lu;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(m(i, k)) > std::abs(m(p, k))) p = i;
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(p, j));
            std::swap(f.piv[k], f.piv[p]);
            f.sign = -f.sign;
        }
        if (m(k, k) == 0.0) {
            f.singular = true;
            continue;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            double l = m(i, k) / m(k, k);
            m(i, k) = l;
            if (l == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= l * m(k, j);
        }
    }
    return f;
}

Matrix lu_solve(const LU& f, const Matrix& b) {
    const std::size_t n = f.lu.rows();
    if (b.rows() != n) throw InvalidArgument("solve dimension mismatch");
    if (f.singular) throw NumericalError("matrix is singular");
    Matrix x(n, b.cols());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) x(i, j) = b(f.piv[i], j);
    for (std::size_t c = 0; c < b.cols(); ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = x(i, c);
            for (std::size_t k = 0; k < i; ++k) s -= f.lu(i, k) * x(k, c);
            x(i, c) = s;
        }
        for (std::size_t i = n; i-- > 0;) {
            double s = x(i, c);
            for (std::size_t k = i + 1; k < n; ++k) s -= f.lu(i, k) * x(k, c);
            x(i, c) = s / f.lu(i, i);
        }
    }
    return x;
}

namespace {

double norm1(const Matrix& a) {
    double m = 0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        double s = 0;
        for (std::size_t i = 0; i < a.rows(); ++i) s += std::abs(a(i, j));
        m = std::max(m, s);
    }
    return m;
}

constexpr double kMaxCond = 1e12;

Matrix checked_inverse(const Matrix& a, LU& f) {
    f = lu_factor(a);
    if (f.singular) throw NumericalError("matrix is singular");
    Matrix inv = lu_solve(f, Matrix::identity(a.rows()));
    double c = norm1(a) * norm1(inv);
    if (!std::isfinite(c) || c > kMaxCond) throw NumericalError("matrix is numerically singular (condition > 1e12)");
    return inv;
}

}  // namespace

Matrix solve(const Matrix& a, const Matrix& b) {
    LU f;
    checked_inverse(a, f);
    return lu_solve(f, b);
}

Matrix inverse(const Matrix& a) {
    LU f;
    return checked_inverse(a, f);
}

double cond2(const Matrix& a) {
    auto s = singular_values(a);
    return s.back() > 0 ? s.front() / s.back() : INFINITY;
}

double determinant(const Matrix& a) {
    LU f = lu_factor(a);
    double d = f.sign;
    for (std::size_t i = 0; i < a.rows(); ++i) d *= f.lu(i, i);
    return d;
}

bool cholesky(const Matrix& a, Matrix& l) {
    const std::size_t n = a.rows();
    l = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = a(j, j);
        for (std::size_t k = 0; k < j; ++k) s -= l(j, k) * l(j, k);
        if (!(s > 0.0)) return false;
        double d = std::sqrt(s);
        l(j, j) = d;
        for (std::size_t i = j + 1; i < n; ++i) {
            double t = a(i, j);
            for (std::size_t k = 0; k < j; ++k) t -= l(i, k) * l(j, k);
            l(i, j) = t / d;
        }
    }
    return true;
}

// Scaling and squaring with a degree-13 Pade approximant.
Matrix expm(const Matrix& a) {
    if (!a.square()) throw InvalidArgument("expm needs a square matrix");
    static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
                               129060195264000.0,   10559470521600.0,    670442572800.0,    33522128640.0,
                               1323241920.0,        40840800.0,          960960.0,          16380.0,
                               182.0,               1.0};
    const double theta13 = 5.371920351148152;
    const std::size_t n = a.rows();
    double nrm = norm1(a);
    int s = 0;
    if (nrm > theta13) s = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
    Matrix A = a * std::ldexp(1.0, -s);
    Matrix I = Matrix::identity(n);
    Matrix A2 = A * A, A4 = A2 * A2, A6 = A4 * A2;
    Matrix U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
    Matrix V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
    LU f = lu_factor(V - U);
    Matrix R = lu_solve(f, V + U);
    for (int k = 0; k < s; ++k) R = R * R;
    return R;
}

Matrix expm(const Matrix& a, double t) {
    if (!std::isfinite(t)) throw InvalidArgument("expm time must be finite");
    return expm(a * t);
}

}  // namespace netobs
