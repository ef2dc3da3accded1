#include "netobs/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace netobs {

namespace {

// Householder reduction to upper Hessenberg form, accumulating Q in v.
void hessenberg(Matrix& h, Matrix& v) {
    const std::size_t n = h.rows();
    std::vector<double> ort(n, 0.0);
    for (std::size_t m = 1; m + 1 < n; ++m) {
        double scale = 0.0;
        for (std::size_t i = m; i < n; ++i) scale += std::abs(h(i, m - 1));
        if (scale == 0.0) continue;
        double hh = 0.0;
        for (std::size_t i = n; i-- > m;) {
            ort[i] = h(i, m - 1) / scale;
            hh += ort[i] * ort[i];
        }
        double g = std::sqrt(hh);
        if (ort[m] > 0) g = -g;
        hh -= ort[m] * g;
        ort[m] -= g;
        for (std::size_t j = m; j < n; ++j) {
            double f = 0.0;
            for (std::size_t i = n; i-- > m;) f += ort[i] * h(i, j);
            f /= hh;
            for (std::size_t i = m; i < n; ++i) h(i, j) -= f * ort[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            double f = 0.0;
            for (std::size_t j = n; j-- > m;) f += ort[j] * h(i, j);
            f /= hh;
            for (std::size_t j = m; j < n; ++j) h(i, j) -= f * ort[j];
        }
        ort[m] *= scale;
        h(m, m - 1) = scale * g;
    }
    v = Matrix::identity(n);
    for (std::size_t m = n - 1; m-- > 1;) {
        if (h(m, m - 1) == 0.0) continue;
        for (std::size_t i = m + 1; i < n; ++i) ort[i] = h(i, m - 1);
        for (std::size_t j = m; j < n; ++j) {
            double g = 0.0;
            for (std::size_t i = m; i < n; ++i) g += ort[i] * v(i, j);
            g = (g / ort[m]) / h(m, m - 1);
            for (std::size_t i = m; i < n; ++i) v(i, j) += g * ort[i];
        }
    }
    for (std::size_t i = 2; i < n; ++i)
        for (std::size_t j = 0; j + 1 < i; ++j) h(i, j) = 0.0;
}

}  // namespace

RealSchur real_schur(const Matrix& a, bool want_z, int max_iter_per_eig) {
    if (!a.square()) throw InvalidArgument("eig needs a square matrix");
    const int nn = static_cast<int>(a.rows());
    Matrix H = a, V;
    hessenberg(H, V);
    std::vector<double> d(nn), e(nn);

    const double eps = std::numeric_limits<double>::epsilon();
    double exshift = 0.0, p = 0, q = 0, r = 0, s = 0, z = 0, t, w, x, y;
    double norm = 0.0;
    for (int i = 0; i < nn; ++i)
        for (int j = std::max(i - 1, 0); j < nn; ++j) norm += std::abs(H(i, j));

    int n = nn - 1, low = 0, high = nn - 1, iter = 0;
    if (norm == 0.0) n = -1;  // zero matrix: d and e already hold the answer
    while (n >= low) {
        int l = n;
        while (l > low) {
            s = std::abs(H(l - 1, l - 1)) + std::abs(H(l, l));
            if (s == 0.0) s = norm;
            if (std::abs(H(l, l - 1)) < eps * s) break;
            --l;
        }
        if (l == n) {
            H(n, n) += exshift;
            d[n] = H(n, n);
            e[n] = 0.0;
            --n;
            iter = 0;
        } else if (l == n - 1) {
            w = H(n, n - 1) * H(n - 1, n);
            p = (H(n - 1, n - 1) - H(n, n)) / 2.0;
            q = p * p + w;
            z = std::sqrt(std::abs(q));
            H(n, n) += exshift;
            H(n - 1, n - 1) += exshift;
            x = H(n, n);
            if (q >= 0) {
                z = (p >= 0) ? p + z : p - z;
                d[n - 1] = x + z;
                d[n] = d[n - 1];
                if (z != 0.0) d[n] = x - w / z;
                e[n - 1] = e[n] = 0.0;
                x = H(n, n - 1);
                s = std::abs(x) + std::abs(z);
                p = x / s;
                q = z / s;
                r = std::sqrt(p * p + q * q);
                p /= r;
                q /= r;
                for (int j = n - 1; j < nn; ++j) {
                    z = H(n - 1, j);
                    H(n - 1, j) = q * z + p * H(n, j);
                    H(n, j) = q * H(n, j) - p * z;
                }
                for (int i = 0; i <= n; ++i) {
                    z = H(i, n - 1);
                    H(i, n - 1) = q * z + p * H(i, n);
                    H(i, n) = q * H(i, n) - p * z;
                }
                for (int i = low; i <= high; ++i) {
                    z = V(i, n - 1);
                    V(i, n - 1) = q * z + p * V(i, n);
                    V(i, n) = q * V(i, n) - p * z;
                }
                H(n, n - 1) = 0.0;
            } else {
                d[n - 1] = x + p;
                d[n] = x + p;
                e[n - 1] = z;
                e[n] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = H(n, n);
            y = 0.0;
            w = 0.0;
            if (l < n) {
                y = H(n - 1, n - 1);
                w = H(n, n - 1) * H(n - 1, n);
            }
            if (iter == 10) {
                exshift += x;
                for (int i = low; i <= n; ++i) H(i, i) -= x;
                s = std::abs(H(n, n - 1)) + std::abs(H(n - 1, n - 2));
                x = y = 0.75 * s;
                w = -0.4375 * s * s;
            }
            if (iter == 30) {
                s = (y - x) / 2.0;
                s = s * s + w;
                if (s > 0) {
                    s = std::sqrt(s);
                    if (y < x) s = -s;
                    s = x - w / ((y - x) / 2.0 + s);
                    for (int i = low; i <= n; ++i) H(i, i) -= s;
                    exshift += s;
                    x = y = w = 0.964;
                }
            }
            ++iter;
            if (iter > max_iter_per_eig) throw NumericalError("eigenvalue iteration did not converge");

            int m = n - 2;
            while (m >= l) {
                z = H(m, m);
                r = x - z;
                s = y - z;
                p = (r * s - w) / H(m + 1, m) + H(m, m + 1);
                q = H(m + 1, m + 1) - z - r - s;
                r = H(m + 2, m + 1);
                s = std::abs(p) + std::abs(q) + std::abs(r);
                p /= s;
                q /= s;
                r /= s;
                if (m == l) break;
                if (std::abs(H(m, m - 1)) * (std::abs(q) + std::abs(r)) <
                    eps * (std::abs(p) * (std::abs(H(m - 1, m - 1)) + std::abs(z) + std::abs(H(m + 1, m + 1)))))
                    break;
                --m;
            }
            for (int i = m + 2; i <= n; ++i) {
                H(i, i - 2) = 0.0;
                if (i > m + 2) H(i, i - 3) = 0.0;
            }
            for (int k = m; k <= n - 1; ++k) {
                bool notlast = (k != n - 1);
                if (k != m) {
                    p = H(k, k - 1);
                    q = H(k + 1, k - 1);
                    r = notlast ? H(k + 2, k - 1) : 0.0;
                    x = std::abs(p) + std::abs(q) + std::abs(r);
                    if (x == 0.0) continue;
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = std::sqrt(p * p + q * q + r * r);
                if (p < 0) s = -s;
                if (s != 0) {
                    if (k != m)
                        H(k, k - 1) = -s * x;
                    else if (l != m)
                        H(k, k - 1) = -H(k, k - 1);
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for (int j = k; j < nn; ++j) {
                        p = H(k, j) + q * H(k + 1, j);
                        if (notlast) {
                            p += r * H(k + 2, j);
                            H(k + 2, j) -= p * z;
                        }
                        H(k, j) -= p * x;
                        H(k + 1, j) -= p * y;
                    }
                    for (int i = 0; i <= std::min(n, k + 3); ++i) {
                        p = x * H(i, k) + y * H(i, k + 1);
                        if (notlast) {
                            p += z * H(i, k + 2);
                            H(i, k + 2) -= p * r;
                        }
                        H(i, k) -= p;
                        H(i, k + 1) -= p * q;
                    }
                    if (want_z)
                        for (int i = low; i <= high; ++i) {
                            p = x * V(i, k) + y * V(i, k + 1);
                            if (notlast) {
                                p += z * V(i, k + 2);
                                V(i, k + 2) -= p * r;
                            }
                            V(i, k) -= p;
                            V(i, k + 1) -= p * q;
                        }
                }
            }
        }
    }
    (void)t;
    RealSchur out;
    for (int i = 2; i < nn; ++i)
        for (int j = 0; j + 1 < i; ++j) H(i, j) = 0.0;
    out.T = H;
    if (want_z) out.Z = V;
    out.eigenvalues.resize(nn);
    for (int i = 0; i < nn; ++i) out.eigenvalues[i] = cplx(d[i], e[i]);
    return out;
}

std::vector<cplx> eig(const Matrix& a) {
    if (!a.square()) throw InvalidArgument("eig needs a square matrix");
    if (!a.all_finite()) throw InvalidArgument("matrix entries must be finite");
    return real_schur(a, false).eigenvalues;
}

std::vector<std::vector<cplx>> eigenvectors(const Matrix& a, const std::vector<cplx>& lambda) {
    const std::size_t n = a.rows();
    const double an = std::max(a.frobenius(), 1e-300);
    std::vector<std::vector<cplx>> out;
    out.reserve(lambda.size());
    for (std::size_t k = 0; k < lambda.size(); ++k) {
        // inverse iteration with a slightly perturbed shift
        cplx mu = lambda[k] + cplx(1e-12 * an, 0.0);
        CMatrix m(a);
        for (std::size_t i = 0; i < n; ++i) m(i, i) -= mu;
        CMatrix x(n, 1);
        for (std::size_t i = 0; i < n; ++i) x(i, 0) = cplx(1.0 + 0.1 * std::sin(1.0 + i + k), 0.05 * std::cos(2.0 + i));
        for (int it = 0; it < 3; ++it) {
            x = csolve(m, x);
            double nrm = 0;
            for (std::size_t i = 0; i < n; ++i) nrm += std::norm(x(i, 0));
            nrm = std::sqrt(nrm);
            if (!(nrm > 0) || !std::isfinite(nrm)) throw NumericalError("inverse iteration failed");
            for (std::size_t i = 0; i < n; ++i) x(i, 0) /= nrm;
        }
        // fix the phase so the largest component is real and positive
        std::size_t imax = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(x(i, 0)) > std::abs(x(imax, 0))) imax = i;
        cplx ph = std::abs(x(imax, 0)) > 0 ? std::conj(x(imax, 0)) / std::abs(x(imax, 0)) : cplx(1.0);
        std::vector<cplx> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = x(i, 0) * ph;
        out.push_back(std::move(v));
    }
    return out;
}

SymEig sym_eig(const Matrix& s) {
    if (!s.square()) throw InvalidArgument("sym_eig needs a square matrix");
    if (!s.all_finite()) throw InvalidArgument("matrix entries must be finite");
    const std::size_t n = s.rows();
    Matrix a = sym(s);
    Matrix v = Matrix::identity(n);
    const double total = a.frobenius();
    // cyclic Jacobi
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (std::sqrt(off) <= 1e-17 * total || off == 0.0) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (apq == 0.0) continue;
                double app = a(p, p), aqq = a(q, q);
                double theta = (aqq - app) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
    }
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
    SymEig out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(idx[k], idx[k]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, idx[k]);
    }
    return out;
}

double lambda_max_sym(const Matrix& a) { return sym_eig(a).values.back(); }
double lambda_min_sym(const Matrix& a) { return sym_eig(a).values.front(); }

double spectral_abscissa(const Matrix& a) {
    double m = -std::numeric_limits<double>::infinity();
    for (const cplx& l : eig(a)) m = std::max(m, l.real());
    return m;
}

double log_norm(const Matrix& a) {
    if (!a.square()) throw InvalidArgument("log_norm needs a square matrix");
    return lambda_max_sym(a + a.transpose()) / 2.0;
}

std::vector<double> singular_values(const Matrix& a) {
    Matrix g = a.rows() >= a.cols() ? a.transpose() * a : a * a.transpose();
    auto vals = sym_eig(g).values;
    std::vector<double> out;
    for (auto it = vals.rbegin(); it != vals.rend(); ++it) out.push_back(std::sqrt(std::max(*it, 0.0)));
    return out;
}

double spectral_norm(const Matrix& a) { return singular_values(a).front(); }

double jordan_condition(const Matrix& a) {
    if (!a.square()) throw InvalidArgument("jordan_condition needs a square matrix");
    const std::size_t n = a.rows();
    auto lam = eig(a);
    const double an = spectral_norm(a);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(lam[i] - lam[j]) <= 1e-8 * an)
                throw InvalidArgument("jordan_condition needs distinct eigenvalues");
    auto vecs = eigenvectors(a, lam);
    CMatrix x(n, n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) x(i, k) = vecs[k][i];
    CMatrix id(n, n);
    for (std::size_t i = 0; i < n; ++i) id(i, i) = 1.0;
    CMatrix xinv = csolve(x, id);
    return csigma_max(x) * csigma_max(xinv);
}

bool is_hurwitz(const Matrix& a) { return spectral_abscissa(a) < 0.0; }

}  // namespace netobs
