#include <algorithm>
#include <cmath>

#include "netobs/lmi.hpp"

namespace netobs {

LmiProblem::VarId LmiProblem::add_var(Var v) {
    for (auto& i : v.index)
        if (i >= 0) i = static_cast<long>(nscalar_) + i;
    long top = -1;
    for (long i : v.index) top = std::max(top, i);
    nscalar_ = static_cast<std::size_t>(top + 1 > static_cast<long>(nscalar_) ? top + 1 : nscalar_);
    vars_.push_back(std::move(v));
    return vars_.size() - 1;
}

LmiProblem::VarId LmiProblem::symmetric(std::string name, std::size_t n) {
    return symmetric(std::move(name), Matrix(n, n, 1.0));
}

LmiProblem::VarId LmiProblem::symmetric(std::string name, const Matrix& mask) {
    if (!mask.square()) throw InvalidArgument("symmetric unknown needs a square mask");
    const std::size_t n = mask.rows();
    Var v{std::move(name), n, n, true, std::vector<long>(n * n, -1)};
    long k = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            if (mask(i, j) != 0.0 || mask(j, i) != 0.0) {
                v.index[i * n + j] = k;
                v.index[j * n + i] = k;
                ++k;
            }
    return add_var(std::move(v));
}

LmiProblem::VarId LmiProblem::full(std::string name, std::size_t rows, std::size_t cols) {
    return full(std::move(name), Matrix(rows, cols, 1.0));
}

LmiProblem::VarId LmiProblem::full(std::string name, const Matrix& mask) {
    Var v{std::move(name), mask.rows(), mask.cols(), false, std::vector<long>(mask.rows() * mask.cols(), -1)};
    long k = 0;
    for (std::size_t i = 0; i < mask.rows(); ++i)
        for (std::size_t j = 0; j < mask.cols(); ++j)
            if (mask(i, j) != 0.0) v.index[i * mask.cols() + j] = k++;
    return add_var(std::move(v));
}

LmiProblem::ConId LmiProblem::constraint(std::string name, std::vector<std::size_t> block_sizes, Sense sense) {
    Con c;
    c.name = std::move(name);
    c.sense = sense;
    for (auto s : block_sizes) {
        if (s == 0) throw InvalidArgument("empty constraint block");
        c.offsets.push_back(c.dim);
        c.dim += s;
    }
    c.sizes = std::move(block_sizes);
    c.F0 = Matrix(c.dim, c.dim);
    cons_.push_back(std::move(c));
    return cons_.size() - 1;
}

Matrix& LmiProblem::Con::coeff(std::size_t k) {
    for (auto& c : coeffs)
        if (c.k == k) return c.F;
    coeffs.push_back({k, Matrix(dim, dim)});
    return coeffs.back().F;
}

void LmiProblem::add(ConId ci, std::size_t bi, std::size_t bj, const Matrix& M) {
    Con& c = cons_.at(ci);
    if (bi >= c.sizes.size() || bj >= c.sizes.size()) throw InvalidArgument("constraint block out of range");
    if (M.rows() != c.sizes[bi] || M.cols() != c.sizes[bj]) throw InvalidArgument("constraint block size mismatch");
    for (std::size_t r = 0; r < M.rows(); ++r)
        for (std::size_t s = 0; s < M.cols(); ++s) {
            c.F0(c.offsets[bi] + r, c.offsets[bj] + s) += M(r, s);
            if (bi != bj) c.F0(c.offsets[bj] + s, c.offsets[bi] + r) += M(r, s);
        }
}

void LmiProblem::add(ConId ci, std::size_t bi, std::size_t bj, const Matrix& L, VarId vi, const Matrix& R, double s,
                     bool transposed) {
    Con& c = cons_.at(ci);
    const Var& v = vars_.at(vi);
    if (bi >= c.sizes.size() || bj >= c.sizes.size()) throw InvalidArgument("constraint block out of range");
    const std::size_t xr = transposed ? v.cols : v.rows, xc = transposed ? v.rows : v.cols;
    if (L.cols() != xr || R.rows() != xc || L.rows() != c.sizes[bi] || R.cols() != c.sizes[bj])
        throw InvalidArgument("term dimensions do not match constraint block");
    for (std::size_t a = 0; a < v.rows; ++a)
        for (std::size_t b = 0; b < v.cols; ++b) {
            long k = v.index[a * v.cols + b];
            if (k < 0) continue;
            // entry (a,b) of X sits at (r,q) of the possibly transposed X
            std::size_t r = transposed ? b : a, q = transposed ? a : b;
            Matrix& F = c.coeff(static_cast<std::size_t>(k));
            for (std::size_t i = 0; i < L.rows(); ++i) {
                double li = s * L(i, r);
                if (li == 0.0) continue;
                for (std::size_t j = 0; j < R.cols(); ++j) {
                    double t = li * R(q, j);
                    F(c.offsets[bi] + i, c.offsets[bj] + j) += t;
                    if (bi != bj) F(c.offsets[bj] + j, c.offsets[bi] + i) += t;
                }
            }
        }
}

void LmiProblem::add(ConId c, std::size_t bi, VarId v, double s) {
    const Var& var = vars_.at(v);
    add(c, bi, bi, Matrix::identity(var.rows), v, Matrix::identity(var.cols), s);
}

void LmiProblem::add_scaled(ConId ci, std::size_t bi, std::size_t bj, VarId vi, const Matrix& M) {
    Con& c = cons_.at(ci);
    const Var& v = vars_.at(vi);
    if (v.rows != 1 || v.cols != 1 || v.index[0] < 0) throw InvalidArgument("add_scaled needs a scalar unknown");
    if (bi >= c.sizes.size() || bj >= c.sizes.size()) throw InvalidArgument("constraint block out of range");
    if (M.rows() != c.sizes[bi] || M.cols() != c.sizes[bj]) throw InvalidArgument("constraint block size mismatch");
    Matrix& F = c.coeff(static_cast<std::size_t>(v.index[0]));
    for (std::size_t r = 0; r < M.rows(); ++r)
        for (std::size_t s = 0; s < M.cols(); ++s) {
            F(c.offsets[bi] + r, c.offsets[bj] + s) += M(r, s);
            if (bi != bj) F(c.offsets[bj] + s, c.offsets[bi] + r) += M(r, s);
        }
}

Matrix LmiProblem::value(VarId vi, const std::vector<double>& x) const {
    const Var& v = vars_.at(vi);
    Matrix m(v.rows, v.cols);
    for (std::size_t a = 0; a < v.rows; ++a)
        for (std::size_t b = 0; b < v.cols; ++b) {
            long k = v.index[a * v.cols + b];
            if (k >= 0) m(a, b) = x.at(static_cast<std::size_t>(k));
        }
    return m;
}

void LmiProblem::assign(VarId vi, const Matrix& val, std::vector<double>& x) const {
    const Var& v = vars_.at(vi);
    if (val.rows() != v.rows || val.cols() != v.cols) throw InvalidArgument("assigned value has wrong size");
    x.resize(nscalar_);
    for (std::size_t a = 0; a < v.rows; ++a)
        for (std::size_t b = 0; b < v.cols; ++b) {
            long k = v.index[a * v.cols + b];
            if (k >= 0) x[static_cast<std::size_t>(k)] = v.symmetric ? 0.5 * (val(a, b) + val(b, a)) : val(a, b);
        }
}

Matrix LmiProblem::evaluate(ConId ci, const std::vector<double>& x) const {
    const Con& c = cons_.at(ci);
    Matrix F = c.F0;
    for (const auto& co : c.coeffs)
        if (x.at(co.k) != 0.0) F += x[co.k] * co.F;
    if (c.sense == Sense::positive) F *= -1.0;
    return F;
}

void LmiProblem::check() const {
    auto symmetric_enough = [](const Matrix& m) {
        double tol = 1e-12 * (1.0 + m.max_abs());
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = i + 1; j < m.cols(); ++j)
                if (std::abs(m(i, j) - m(j, i)) > tol) return false;
        return true;
    };
    for (const auto& c : cons_) {
        if (!symmetric_enough(c.F0)) throw InvalidArgument("constraint '" + c.name + "' has a nonsymmetric constant");
        for (const auto& co : c.coeffs)
            if (!symmetric_enough(co.F))
                throw InvalidArgument("constraint '" + c.name + "' is not symmetric in its unknowns");
    }
}

std::vector<double> constraint_margins(const LmiProblem& p, const std::vector<double>& x) {
    std::vector<double> m;
    for (std::size_t c = 0; c < p.num_constraints(); ++c) m.push_back(lambda_max_sym(sym(p.evaluate(c, x))));
    return m;
}

namespace {

// Oriented, sparse-in-unknowns copy of the problem the Newton loop works on.
struct Block {
    std::size_t d;
    std::vector<double> F0;
    std::vector<std::size_t> ks;
    std::vector<std::vector<double>> Fk;
};

bool chol_inplace(std::vector<double>& a, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double s = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) s -= a[j * n + k] * a[j * n + k];
        if (!(s > 0.0)) return false;
        double d = std::sqrt(s);
        a[j * n + j] = d;
        for (std::size_t i = j + 1; i < n; ++i) {
            double t = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) t -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = t / d;
        }
        for (std::size_t i = 0; i < j; ++i) a[i * n + j] = 0.0;
    }
    return true;
}

// Inverse of a lower triangular matrix.
std::vector<double> tri_inverse(const std::vector<double>& L, std::size_t n) {
    std::vector<double> X(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        X[j * n + j] = 1.0 / L[j * n + j];
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = 0;
            for (std::size_t k = j; k < i; ++k) s -= L[i * n + k] * X[k * n + j];
            X[i * n + j] = s / L[i * n + i];
        }
    }
    return X;
}

class Barrier {
public:
    Barrier(const LmiProblem& p, const SolverOptions& opt) : m_(p.num_scalars()), box_(opt.box) {
        for (std::size_t c = 0; c < p.num_constraints(); ++c) {
            const auto& con = p.con(c);
            double sgn = con.sense == Sense::positive ? -1.0 : 1.0;
            Block b;
            b.d = con.dim;
            b.F0 = con.F0.data();
            for (auto& v : b.F0) v *= sgn;
            for (const auto& co : con.coeffs) {
                b.ks.push_back(co.k);
                b.Fk.push_back(co.F.data());
                for (auto& v : b.Fk.back()) v *= sgn;
            }
            blocks_.push_back(std::move(b));
        }
    }

    std::size_t barrier_dim() const {
        std::size_t d = 2 * m_;
        for (const auto& b : blocks_) d += b.d;
        return d;
    }

    // Largest eigenvalue of every block at x.
    double max_eig(const std::vector<double>& x) const {
        double worst = -INFINITY;
        for (const auto& b : blocks_) worst = std::max(worst, lambda_max_sym(sym(Matrix(b.d, b.d, assemble(b, x)))));
        return worst;
    }

    // phi(x, s) = -sum log det(sI - F(x)) - sum log(box^2 - x^2); +inf outside.
    double phi(const std::vector<double>& x, double s) const {
        double v = 0;
        for (std::size_t k = 0; k < m_; ++k) {
            double r = box_ * box_ - x[k] * x[k];
            if (!(r > 0)) return INFINITY;
            v -= std::log(r);
        }
        for (const auto& b : blocks_) {
            auto S = slack(b, x, s);
            if (!chol_inplace(S, b.d)) return INFINITY;
            for (std::size_t i = 0; i < b.d; ++i) v -= 2.0 * std::log(S[i * b.d + i]);
        }
        return v;
    }

    // Gradient and Hessian of phi over z = (x, s); returns false outside.
    bool derivatives(const std::vector<double>& x, double s, std::vector<double>& g, std::vector<double>& H) const {
        const std::size_t nz = m_ + 1;
        g.assign(nz, 0.0);
        H.assign(nz * nz, 0.0);
        for (std::size_t k = 0; k < m_; ++k) {
            double r = box_ * box_ - x[k] * x[k];
            if (!(r > 0)) return false;
            g[k] += 2 * x[k] / r;
            H[k * nz + k] += 2 / r + 4 * x[k] * x[k] / (r * r);
        }
        for (const auto& b : blocks_) {
            const std::size_t d = b.d;
            auto S = slack(b, x, s);
            if (!chol_inplace(S, d)) return false;
            auto Li = tri_inverse(S, d);
            // G_hat for s (dS/ds = I) is Li Li^T; for x_k (dS/dx_k = -F_k) it is -Li F_k Li^T.
            std::vector<std::vector<double>> Gh;
            std::vector<std::size_t> idx;
            std::vector<double> tmp(d * d);
            auto transform = [&](const std::vector<double>& F, double sgn) {
                std::vector<double> out(d * d, 0.0);
                for (std::size_t i = 0; i < d; ++i)
                    for (std::size_t j = 0; j < d; ++j) {
                        double t = 0;
                        for (std::size_t k = 0; k <= i; ++k) t += Li[i * d + k] * F[k * d + j];
                        tmp[i * d + j] = t;
                    }
                for (std::size_t i = 0; i < d; ++i)
                    for (std::size_t j = 0; j <= i; ++j) {
                        double t = 0;
                        for (std::size_t k = 0; k <= j; ++k) t += tmp[i * d + k] * Li[j * d + k];
                        out[i * d + j] = sgn * t;
                        out[j * d + i] = sgn * t;
                    }
                return out;
            };
            for (std::size_t q = 0; q < b.ks.size(); ++q) {
                Gh.push_back(transform(b.Fk[q], -1.0));
                idx.push_back(b.ks[q]);
            }
            std::vector<double> I(d * d, 0.0);
            for (std::size_t i = 0; i < d; ++i) I[i * d + i] = 1.0;
            Gh.push_back(transform(I, 1.0));
            idx.push_back(m_);
            for (std::size_t a = 0; a < Gh.size(); ++a) {
                double tr = 0;
                for (std::size_t i = 0; i < d; ++i) tr += Gh[a][i * d + i];
                g[idx[a]] -= tr;
                for (std::size_t c = 0; c <= a; ++c) {
                    double h = 0;
                    for (std::size_t i = 0; i < d * d; ++i) h += Gh[a][i] * Gh[c][i];
                    H[idx[a] * nz + idx[c]] += h;
                    if (idx[a] != idx[c]) H[idx[c] * nz + idx[a]] += h;
                }
            }
        }
        return true;
    }

private:
    static std::vector<double> assemble(const Block& b, const std::vector<double>& x) {
        std::vector<double> F = b.F0;
        for (std::size_t q = 0; q < b.ks.size(); ++q) {
            double xv = x[b.ks[q]];
            if (xv == 0.0) continue;
            const auto& Fk = b.Fk[q];
            for (std::size_t i = 0; i < F.size(); ++i) F[i] += xv * Fk[i];
        }
        return F;
    }
    static std::vector<double> slack(const Block& b, const std::vector<double>& x, double s) {
        auto F = assemble(b, x);
        for (auto& v : F) v = -v;
        for (std::size_t i = 0; i < b.d; ++i) F[i * b.d + i] += s;
        return F;
    }

    std::size_t m_;
    double box_;
    std::vector<Block> blocks_;
};

// Solves H d = r for symmetric positive (semi)definite H, regularizing if needed.
std::vector<double> newton_solve(std::vector<double> H, const std::vector<double>& r, std::size_t n) {
    double scale = 0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(H[i * n + i]));
    double reg = 0;
    for (int attempt = 0; attempt < 12; ++attempt) {
        auto L = H;
        for (std::size_t i = 0; i < n; ++i) L[i * n + i] += reg;
        if (chol_inplace(L, n)) {
            std::vector<double> y(r);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t k = 0; k < i; ++k) y[i] -= L[i * n + k] * y[k];
                y[i] /= L[i * n + i];
            }
            for (std::size_t i = n; i-- > 0;) {
                for (std::size_t k = i + 1; k < n; ++k) y[i] -= L[k * n + i] * y[k];
                y[i] /= L[i * n + i];
            }
            return y;
        }
        reg = reg == 0 ? 1e-14 * (scale + 1) : reg * 100;
    }
    throw NumericalError("barrier Newton system is not positive definite");
}

}  // namespace

Certificate solve_feasibility(const LmiProblem& p, const SolverOptions& opt) {
    return solve_feasibility(p, std::vector<double>(p.num_scalars(), 0.0), opt);
}

Certificate solve_feasibility(const LmiProblem& p, const std::vector<double>& x0, const SolverOptions& opt) {
    p.check();
    if (p.num_constraints() == 0) throw InvalidArgument("LMI problem has no constraints");
    if (x0.size() != p.num_scalars()) throw InvalidArgument("initial point has wrong size");
    Barrier bar(p, opt);
    const std::size_t m = p.num_scalars(), nz = m + 1;
    std::vector<double> x = x0;
    for (auto& v : x) v = std::clamp(v, -0.5 * opt.box, 0.5 * opt.box);
    double s = bar.max_eig(x);
    s += 1.0 + 0.1 * std::abs(s);

    Certificate cert;
    const double dim = static_cast<double>(bar.barrier_dim());
    double t = std::max(1.0, dim / (std::abs(s) + 1.0));
    std::vector<double> g, H;
    int newton = 0;
    bool done = false;
    auto margin_reached = [&](double sv) {
        return opt.target_margin > 0 ? sv < -std::max(opt.target_margin, opt.feas_tol) : false;
    };
    while (!done && newton < opt.max_newton) {
        // centering for the current t
        for (int inner = 0; inner < 80 && newton < opt.max_newton; ++inner, ++newton) {
            if (!bar.derivatives(x, s, g, H)) throw NumericalError("barrier iterate left the domain");
            std::vector<double> r(nz);
            for (std::size_t i = 0; i < nz; ++i) r[i] = -g[i];
            r[m] -= t;
            auto d = newton_solve(H, r, nz);
            double dec = 0;
            for (std::size_t i = 0; i < nz; ++i) dec -= r[i] * d[i];
            dec = -dec;  // r^T H^{-1} r >= 0
            double f0 = t * s + bar.phi(x, s);
            double slope = -dec;
            double step = 1.0;
            std::vector<double> xn(m);
            double sn = s, fn = INFINITY;
            for (int ls = 0; ls < 60; ++ls) {
                for (std::size_t i = 0; i < m; ++i) xn[i] = x[i] + step * d[i];
                sn = s + step * d[m];
                fn = t * sn + bar.phi(xn, sn);
                if (std::isfinite(fn) && fn <= f0 + 0.25 * step * slope) break;
                step *= 0.5;
            }
            if (!std::isfinite(fn)) break;
            x = xn;
            s = sn;
            if (margin_reached(s)) {
                done = true;
                break;
            }
            if (dec / 2 < 1e-10 || step * std::sqrt(std::max(dec, 0.0)) < 1e-14) break;
        }
        if (done) break;
        // s at the centre exceeds the optimum by at most dim / t
        if (s - dim / t > -opt.feas_tol) {
            cert.lower_bound = s - dim / t;
            break;
        }
        if (dim / t < 1e-10 * std::max(1.0, std::abs(s))) break;
        t *= 8.0;
    }
    cert.iterations = newton;
    cert.x = x;
    cert.constraint_margins = constraint_margins(p, x);
    cert.margin = *std::max_element(cert.constraint_margins.begin(), cert.constraint_margins.end());
    if (cert.lower_bound == 0.0) cert.lower_bound = s - dim / t;
    cert.feasible = cert.margin < -opt.feas_tol;
    if (!cert.feasible) {
        double biggest = 0;
        for (double v : x) biggest = std::max(biggest, std::abs(v));
        cert.inconclusive = biggest > 0.99 * opt.box;
        cert.message = cert.inconclusive ? "variable box reached before a certificate was found"
                                         : "no point with margin below -feas_tol";
    }
    return cert;
}

}  // namespace netobs
