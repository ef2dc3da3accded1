#include "netobs/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

namespace netobs {

namespace {

constexpr double kGammaCap = 1e6;

// Everything about the H-infinity channel that does not depend on the gains.
struct Channel {
    std::size_t N, n, p;
    Matrix Ae, Ce, IC;  // I (x) A, -I (x) C, I (x) C
    Matrix Bw;          // noise directions in R^{pN}
    Matrix X;           // performance output
    Matrix mask;        // nN x pN, 1 where the stacked gain may be nonzero
    bool complete = false;
};

Channel make_channel(const Plant& plant, const Digraph& g, const NormSpec& spec) {
    Channel ch;
    ch.N = g.size();
    ch.n = plant.n();
    ch.p = plant.p();
    Matrix IN = Matrix::identity(ch.N);
    ch.Ae = kron(IN, plant.A);
    ch.IC = kron(IN, plant.C);
    ch.Ce = -1.0 * ch.IC;
    ch.Bw = spec.sharing == NoiseSharing::common ? kron(Matrix(ch.N, 1, 1.0), Matrix::identity(ch.p))
                                                 : Matrix::identity(ch.p * ch.N);
    ErrorSystem es = assemble(plant, g, GainSchedule(ch.N, ch.n, ch.p));
    switch (spec.output) {
        case OutputKind::stacked: ch.X = es.C; break;
        case OutputKind::average: ch.X = average_output(es); break;
        case OutputKind::local: ch.X = local_output(es, spec.agent); break;
    }
    ch.mask = kron(g.adjacency().transpose(), Matrix(ch.n, ch.p, 1.0));
    ch.complete = g.edge_count() == ch.N * ch.N;
    return ch;
}

GainSchedule gains_from_stacked(const Channel& ch, const Matrix& Mu) {
    Matrix K = Mu;
    for (std::size_t i = 0; i < K.rows(); ++i)
        for (std::size_t j = 0; j < K.cols(); ++j)
            if (ch.mask(i, j) == 0.0) K(i, j) = 0.0;
    return GainSchedule::from_stacked(K, ch.N, ch.n, ch.p);
}

Matrix block_pattern(std::size_t N, std::size_t n, bool full) {
    return full ? Matrix(N * n, N * n, 1.0) : kron(Matrix::identity(N), Matrix(n, n, 1.0));
}

double rate_tolerance(double sigma) { return 1e-9 * (1.0 + sigma); }

// Smallest gamma in (0, cap] for which feasible(gamma) holds; the last
// feasible certificate is kept by the callback.
template <class F>
std::optional<double> bisect_gamma(F&& feasible, double start, double rel_tol) {
    double hi = std::max(start, 1e-6), lo = 0;
    while (!feasible(hi)) {
        lo = hi;
        hi *= 4;
        if (hi > kGammaCap) return std::nullopt;
    }
    // bracket from below before bisecting
    for (double t = hi / 4; lo == 0 && t > 1e-9; t /= 4) {
        if (feasible(t))
            hi = t;
        else
            lo = t;
    }
    while (hi - lo > rel_tol * hi) {
        double mid = 0.5 * (lo + hi);
        if (feasible(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

// He(Ae, P) + P Mu Ce + Ce^T Mu^T P written with Mp = P Mu.
void add_closed_loop_he(LmiProblem& p, LmiProblem::ConId c, const Channel& ch, LmiProblem::VarId P,
                        LmiProblem::VarId Mp) {
    const std::size_t m = ch.N * ch.n;
    Matrix I = Matrix::identity(m);
    p.add(c, 0, 0, ch.Ae.transpose(), P, I);
    p.add(c, 0, 0, I, P, ch.Ae);
    p.add(c, 0, 0, I, Mp, ch.Ce);
    p.add(c, 0, 0, ch.Ce.transpose(), Mp, I, 1.0, true);
}

}  // namespace

Certificate brl_check(const TransferRealization& t, double gamma, const SolverOptions& opt) {
    if (!(gamma > 0)) throw InvalidArgument("gamma must be positive");
    const std::size_t n = t.A.rows(), m = t.B.cols(), q = t.C.rows();
    LmiProblem p;
    auto P = p.symmetric("P_H", n);
    auto c = p.constraint("bounded real", {n, m, q});
    p.add(c, 0, 0, t.A.transpose(), P, Matrix::identity(n));
    p.add(c, 0, 0, Matrix::identity(n), P, t.A);
    p.add(c, 0, 1, Matrix::identity(n), P, t.B);
    p.add(c, 0, 2, t.C.transpose());
    p.add(c, 1, 1, -gamma * Matrix::identity(m));
    p.add(c, 2, 2, -gamma * Matrix::identity(q));
    if (t.has_d()) p.add(c, 1, 2, t.D.transpose());
    auto pos = p.constraint("P_H > 0", {n}, Sense::positive);
    p.add(pos, 0, P);
    return solve_feasibility(p, opt);
}

double brl_threshold(const TransferRealization& t, double rel_tol) {
    SolverOptions opt;
    opt.target_margin = 0;  // decide feasibility at the analytic optimum
    double start = std::max(spectral_norm(t.C) * spectral_norm(t.B), 1e-3);
    auto g = bisect_gamma([&](double gamma) { return brl_check(t, gamma, opt).feasible; }, start, rel_tol);
    if (!g) throw InfeasibleError("bounded real lemma infeasible up to the gamma cap");
    return *g;
}

void verify_design(const Plant& plant, Design& d, double sigma, const NormSpec& spec) {
    check_gating(d.graph, d.gains);
    ErrorSystem es = assemble(plant, d.graph, d.gains);
    d.abscissa = spectral_abscissa(es.A);
    if (!(d.abscissa <= -sigma + rate_tolerance(sigma)))
        throw InfeasibleError("design eigenvalues are not left of -sigma");
    d.gamma = network_hinf(es, spec);
}

Design design_common_P(const Plant& plant, const Digraph& g, double sigma, const NormSpec& spec, double rel_tol) {
    if (!(sigma >= 0)) throw InvalidArgument("sigma must be nonnegative");
    if (!is_detectable(plant)) throw PreconditionError("(A, C) is not detectable");
    Channel ch = make_channel(plant, g, spec);
    const std::size_t m = ch.N * ch.n;
    const std::size_t w = ch.Bw.cols(), q = ch.X.rows();

    std::optional<Design> found;
    auto feasible = [&](double gamma) {
        LmiProblem p;
        auto P = p.symmetric("P", block_pattern(ch.N, ch.n, ch.complete));
        auto Mp = p.full("M_p", ch.mask);
        auto region = p.constraint("region", {m});
        add_closed_loop_he(p, region, ch, P, Mp);
        p.add(region, 0, P, 2 * sigma);
        auto brl = p.constraint("gain", {m, w, q});
        add_closed_loop_he(p, brl, ch, P, Mp);
        p.add(brl, 0, 1, Matrix::identity(m), Mp, ch.Bw);
        p.add(brl, 0, 2, ch.X.transpose());
        p.add(brl, 1, 1, -gamma * Matrix::identity(w));
        p.add(brl, 2, 2, -gamma * Matrix::identity(q));
        auto pos = p.constraint("P > 0", {m}, Sense::positive);
        p.add(pos, 0, P);
        SolverOptions opt;
        opt.target_margin = 1e-6;
        auto cert = solve_feasibility(p, opt);
        if (!cert.feasible) return false;
        // a certificate whose gains cannot be recovered and verified counts as infeasible
        try {
            Matrix Pv = p.value(P, cert.x);
            Matrix Mv = p.value(Mp, cert.x);
            Design d;
            d.graph = g;
            d.gains = gains_from_stacked(ch, solve(Pv, Mv));
            d.method = "common-P";
            d.lmi_bound = gamma;
            d.margin = cert.margin;
            d.iterations = cert.iterations;
            d.certificate = {{"P", Pv}, {"M_p", Mv}};
            verify_design(plant, d, sigma, spec);
            found = std::move(d);
        } catch (const NumericalError&) {
            return false;
        } catch (const InfeasibleError&) {
            return false;
        }
        return true;
    };
    auto g_opt = bisect_gamma(feasible, 1.0, rel_tol);
    if (!g_opt || !found) throw InfeasibleError("common-P synthesis infeasible");
    return *found;
}

namespace {

// Alternating step with the Lyapunov matrices fixed: best stacked gain.
std::optional<std::pair<Matrix, double>> gain_step(const Channel& ch, const Matrix& PS, const Matrix& PH, double sigma,
                                                   double gamma_start) {
    const std::size_t m = ch.N * ch.n, w = ch.Bw.cols(), q = ch.X.rows();
    Matrix I = Matrix::identity(m);
    std::optional<Matrix> found;
    auto feasible = [&](double gamma) {
        LmiProblem p;
        auto Mu = p.full("M_u", ch.mask);
        auto region = p.constraint("region", {m});
        p.add(region, 0, 0, sym(ch.Ae.transpose() * PS + PS * ch.Ae + 2 * sigma * PS));
        p.add(region, 0, 0, PS, Mu, ch.Ce);
        p.add(region, 0, 0, ch.Ce.transpose(), Mu, PS, 1.0, true);
        auto brl = p.constraint("gain", {m, w, q});
        p.add(brl, 0, 0, sym(ch.Ae.transpose() * PH + PH * ch.Ae));
        p.add(brl, 0, 0, PH, Mu, ch.Ce);
        p.add(brl, 0, 0, ch.Ce.transpose(), Mu, PH, 1.0, true);
        p.add(brl, 0, 1, PH, Mu, ch.Bw);
        p.add(brl, 0, 2, ch.X.transpose());
        p.add(brl, 1, 1, -gamma * Matrix::identity(w));
        p.add(brl, 2, 2, -gamma * Matrix::identity(q));
        SolverOptions opt;
        opt.target_margin = 1e-6;
        auto cert = solve_feasibility(p, opt);
        if (cert.feasible) found = p.value(Mu, cert.x);
        return cert.feasible;
    };
    auto g = bisect_gamma(feasible, gamma_start, 1e-4);
    if (!g || !found) return std::nullopt;
    return std::make_pair(*found, *g);
}

// Alternating step with the gain fixed: Lyapunov matrices for rate and gain.
std::optional<std::pair<Matrix, Matrix>> lyapunov_step(const Channel& ch, const Matrix& Acl, const Matrix& Bcl,
                                                       double sigma, double gamma) {
    const std::size_t m = ch.N * ch.n, w = Bcl.cols(), q = ch.X.rows();
    Matrix I = Matrix::identity(m);
    LmiProblem ps;
    auto PS = ps.symmetric("P_S", m);
    auto r = ps.constraint("region", {m});
    ps.add(r, 0, 0, Acl.transpose(), PS, I);
    ps.add(r, 0, 0, I, PS, Acl);
    ps.add(r, 0, PS, 2 * sigma);
    auto rp = ps.constraint("P_S > 0", {m}, Sense::positive);
    ps.add(rp, 0, PS);
    auto cs = solve_feasibility(ps);
    if (!cs.feasible) return std::nullopt;

    LmiProblem ph;
    auto PH = ph.symmetric("P_H", m);
    auto b = ph.constraint("gain", {m, w, q});
    ph.add(b, 0, 0, Acl.transpose(), PH, I);
    ph.add(b, 0, 0, I, PH, Acl);
    ph.add(b, 0, 1, I, PH, Bcl);
    ph.add(b, 0, 2, ch.X.transpose());
    ph.add(b, 1, 1, -gamma * Matrix::identity(w));
    ph.add(b, 2, 2, -gamma * Matrix::identity(q));
    auto hp = ph.constraint("P_H > 0", {m}, Sense::positive);
    ph.add(hp, 0, PH);
    SolverOptions opt;
    opt.target_margin = 0;
    auto ch_ = solve_feasibility(ph, opt);
    if (!ch_.feasible) return std::nullopt;
    // normalize the homogeneous rate certificate
    Matrix S = ps.value(PS, cs.x);
    S *= 1.0 / lambda_max_sym(S);
    return std::make_pair(S, ph.value(PH, ch_.x));
}

// Penalized H-infinity objective over the free gain entries, with its
// gradient from the peak frequency and the rightmost eigenvalue.
class GainObjective {
public:
    GainObjective(const Channel& ch, double sigma, double rho, double slack)
        : ch_(ch), sigma_(sigma), rho_(rho), slack_(slack) {
        for (std::size_t i = 0; i < ch.mask.rows(); ++i)
            for (std::size_t j = 0; j < ch.mask.cols(); ++j)
                if (ch.mask(i, j) != 0.0) idx_.emplace_back(i, j);
    }
    std::size_t size() const { return idx_.size(); }

    Matrix stacked(const std::vector<double>& k) const {
        Matrix K(ch_.mask.rows(), ch_.mask.cols());
        for (std::size_t t = 0; t < idx_.size(); ++t) K(idx_[t].first, idx_[t].second) = k[t];
        return K;
    }
    std::vector<double> flat(const Matrix& K) const {
        std::vector<double> k(idx_.size());
        for (std::size_t t = 0; t < idx_.size(); ++t) k[t] = K(idx_[t].first, idx_[t].second);
        return k;
    }

    struct Value {
        double f = INFINITY, gamma = INFINITY, alpha = INFINITY;
        std::vector<double> grad;
    };

    Value operator()(const std::vector<double>& k) const {
        Value v;
        Matrix K = stacked(k);
        Matrix Acl = ch_.Ae - K * ch_.IC;
        auto lam = eig(Acl);
        std::size_t imax = 0;
        for (std::size_t i = 1; i < lam.size(); ++i)
            if (lam[i].real() > lam[imax].real()) imax = i;
        v.alpha = lam[imax].real();
        if (!(v.alpha < -1e-9)) return v;
        Matrix KB = K * ch_.Bw;
        TransferRealization t(Acl, KB, ch_.X);
        HinfResult hr;
        try {
            hr = hinf_peak(t, 1e-9);
        } catch (const std::exception&) {
            return v;
        }
        const std::size_t m = Acl.rows();
        // resolvent pieces at the peak
        CMatrix Z(m, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) Z(i, j) = (i == j ? cplx(0.0, hr.omega) : cplx(0.0)) - Acl(i, j);
        CMatrix RKB = csolve(Z, CMatrix(KB));
        CMatrix T = CMatrix(ch_.X) * RKB;
        std::vector<cplx> u, w;
        v.gamma = csigma_max(T, &u, &w);
        // a = R^H X^T u
        CMatrix Xtu(m, 1);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t r = 0; r < ch_.X.rows(); ++r) Xtu(i, 0) += ch_.X(r, i) * u[r];
        CMatrix a = csolve(Z.adjoint(), Xtu);
        // b = (Bw - IC R K Bw) w
        const std::size_t nw = ch_.Bw.cols(), pu = ch_.Bw.rows();
        std::vector<cplx> RKBw(m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t c = 0; c < nw; ++c) RKBw[i] += RKB(i, c) * w[c];
        std::vector<cplx> b(pu);
        for (std::size_t r = 0; r < pu; ++r) {
            cplx s = 0;
            for (std::size_t c = 0; c < nw; ++c) s += ch_.Bw(r, c) * w[c];
            for (std::size_t i = 0; i < m; ++i) s -= ch_.IC(r, i) * RKBw[i];
            b[r] = s;
        }
        v.grad.assign(idx_.size(), 0.0);
        for (std::size_t t2 = 0; t2 < idx_.size(); ++t2) {
            auto [i, j] = idx_[t2];
            v.grad[t2] = (std::conj(a(i, 0)) * b[j]).real();
        }
        double viol = v.alpha + sigma_ + slack_;
        v.f = v.gamma;
        if (viol > 0) {
            v.f += rho_ * viol;
            // d alpha / d A = Re(w_l v_r^T) / (w_l^T v_r), and dA = -dK (I (x) C)
            auto vr = eigenvectors(Acl, {lam[imax]})[0];
            auto wl = eigenvectors(Acl.transpose(), {lam[imax]})[0];
            cplx den = 0;
            for (std::size_t i = 0; i < m; ++i) den += wl[i] * vr[i];
            if (std::abs(den) < 1e-14) den = 1e-14;
            for (std::size_t t2 = 0; t2 < idx_.size(); ++t2) {
                auto [i, j] = idx_[t2];
                double g = 0;
                for (std::size_t c = 0; c < m; ++c) g -= ((wl[i] * vr[c]) / den).real() * ch_.IC(j, c);
                v.grad[t2] += rho_ * g;
            }
        }
        return v;
    }

private:
    const Channel& ch_;
    double sigma_, rho_, slack_;
    std::vector<std::pair<std::size_t, std::size_t>> idx_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// BFGS with a weak Wolfe line search; suited to the nonsmooth peak objective.
std::vector<double> bfgs(const GainObjective& fun, std::vector<double> x, int iters) {
    const std::size_t n = x.size();
    auto cur = fun(x);
    if (!std::isfinite(cur.f)) return x;
    std::vector<double> H(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;
    std::vector<double> d(n), xn(n), s(n), y(n), Hy(n);
    for (int it = 0; it < iters; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = 0;
            for (std::size_t j = 0; j < n; ++j) d[i] -= H[i * n + j] * cur.grad[j];
        }
        double gd = dot(cur.grad, d);
        if (!(gd < 0)) break;
        double lo = 0, hi = INFINITY, t = 1;
        bool ok = false;
        GainObjective::Value nv;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + t * d[i];
            nv = fun(xn);
            if (!std::isfinite(nv.f) || nv.f > cur.f + 1e-4 * t * gd)
                hi = t;
            else if (dot(nv.grad, d) < 0.9 * gd)
                lo = t;
            else {
                ok = true;
                break;
            }
            t = std::isfinite(hi) ? 0.5 * (lo + hi) : 2 * lo;
        }
        if (!ok) break;
        double snorm = 0;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = t * d[i];
            y[i] = nv.grad[i] - cur.grad[i];
            snorm += s[i] * s[i];
        }
        double sy = dot(s, y);
        if (sy > 0) {
            double r = 1 / sy;
            for (std::size_t i = 0; i < n; ++i) {
                Hy[i] = 0;
                for (std::size_t j = 0; j < n; ++j) Hy[i] += H[i * n + j] * y[j];
            }
            double yHy = dot(y, Hy);
            // H <- (I - r s y^T) H (I - r y s^T) + r s s^T
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    H[i * n + j] += -r * (s[i] * Hy[j] + Hy[i] * s[j]) + (r * r * yHy + r) * s[i] * s[j];
        }
        x = xn;
        cur = std::move(nv);
        if (std::sqrt(snorm) < 1e-12) break;
    }
    return x;
}

struct StartResult {
    bool ok = false;
    Design design;
};

Matrix diagonal_stacked(const Channel& ch, const Matrix& K_L) {
    return kron(Matrix::identity(ch.N), K_L);
}

Matrix luenberger_gain_for(const Plant& plant, double sigma) {
    Design d1 = design_common_P(plant, Digraph::self_only(1), sigma, local_spec(1));
    return d1.gains(1, 1);
}

}  // namespace

Design design_fixed_graph(const Plant& plant, const Digraph& g, double sigma, const NormSpec& spec,
                          const FixedGraphOptions& opt) {
    if (!(sigma >= 0)) throw InvalidArgument("sigma must be nonnegative");
    if (opt.starts < 1) throw InvalidArgument("at least one start is needed");
    if (!is_detectable(plant)) throw PreconditionError("(A, C) is not detectable");
    Channel ch = make_channel(plant, g, spec);

    std::vector<Design> candidates;
    std::optional<Design> common;
    try {
        common = design_common_P(plant, g, sigma, spec);
        candidates.push_back(*common);
    } catch (const InfeasibleError&) {
    }
    Matrix K_L = opt.luenberger_gain ? *opt.luenberger_gain : luenberger_gain_for(plant, sigma);
    if (K_L.rows() != plant.n() || K_L.cols() != plant.p()) throw InvalidArgument("K_L must be n x p");

    auto make_design = [&](const Matrix& K, const std::string& method) {
        Design d;
        d.graph = g;
        d.gains = gains_from_stacked(ch, K);
        d.method = method;
        verify_design(plant, d, sigma, spec);
        return d;
    };
    auto reached = [&](const Design& d) { return opt.gamma_target && d.gamma <= *opt.gamma_target; };
    if (common && reached(*common)) return *common;

    const double slack = 2e-3 * std::max(1.0, sigma);
    GainObjective objective(ch, sigma, 5.0, slack);

    auto run_start = [&](int s) -> StartResult {
        StartResult res;
        Matrix K;
        std::string method;
        if (s >= opt.starts) {
            const Matrix& W = opt.warm_starts.at(static_cast<std::size_t>(s - opt.starts));
            if (W.rows() != ch.mask.rows() || W.cols() != ch.mask.cols()) throw InvalidArgument("warm start has the wrong shape");
            K = W;
            for (std::size_t i = 0; i < K.rows(); ++i)
                for (std::size_t j = 0; j < K.cols(); ++j)
                    if (ch.mask(i, j) == 0.0) K(i, j) = 0.0;
            method = "alternating LMI from warm start";
        } else if (s == 0 && common) {
            K = common->gains.stacked();
            method = "alternating LMI from common-P";
        } else if (s <= 1) {
            K = diagonal_stacked(ch, K_L);
            method = "alternating LMI from Luenberger-diagonal";
        } else {
            std::mt19937_64 rng(opt.seed + static_cast<std::uint64_t>(s));
            std::normal_distribution<double> nd;
            Matrix K0 = diagonal_stacked(ch, K_L);
            double scale = std::max(1.0, K_L.max_abs());
            K = K0;
            for (std::size_t i = 0; i < K.rows(); ++i)
                for (std::size_t j = 0; j < K.cols(); ++j)
                    if (ch.mask(i, j) != 0.0) K(i, j) += scale * nd(rng);
            for (int shrink = 0; shrink < 60 && !(spectral_abscissa(ch.Ae - K * ch.IC) < 0); ++shrink)
                K = 0.5 * (K + K0);
            method = "alternating LMI from random start";
        }
        // best verified design along this start's path
        auto consider = [&](const Matrix& Kc, const std::string& how) {
            try {
                Design d = make_design(Kc, how);
                if (!res.ok || d.gamma < res.design.gamma) {
                    res.design = d;
                    res.ok = true;
                }
            } catch (const InfeasibleError&) {
            } catch (const NumericalError&) {
            }
        };
        consider(K, method);
        for (int a = 0; a < opt.alternations && res.ok; ++a) {
            Matrix Kc = res.design.gains.stacked();
            Matrix Acl = ch.Ae - Kc * ch.IC;
            auto Ps = lyapunov_step(ch, Acl, Kc * ch.Bw, sigma, res.design.gamma * (1 + 1e-3));
            if (!Ps) break;
            auto step = gain_step(ch, Ps->first, Ps->second, sigma, res.design.gamma);
            if (!step) break;
            double before = res.design.gamma;
            consider(step->first, method);
            if (res.design.gamma > before * (1 - 1e-3)) break;
        }
        if (opt.polish_iterations > 0) {
            Matrix Kp = res.ok ? res.design.gains.stacked() : K;
            auto kx = bfgs(objective, objective.flat(Kp), opt.polish_iterations);
            consider(objective.stacked(kx), method + " + gain-space polish");
        }
        return res;
    };

    const int total = opt.starts + static_cast<int>(opt.warm_starts.size());
    std::vector<StartResult> results(static_cast<std::size_t>(total));
    unsigned jobs = std::max(1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(total)));
    if (jobs == 1) {
        for (int s = 0; s < total; ++s) {
            results[s] = run_start(s);
            if (results[s].ok && reached(results[s].design)) break;
        }
    } else {
        std::mutex mu;
        int next = 0;
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j)
            pool.emplace_back([&] {
                for (;;) {
                    int s;
                    {
                        std::lock_guard<std::mutex> lock(mu);
                        if (next >= total) return;
                        s = next++;
                    }
                    results[s] = run_start(s);
                }
            });
        for (auto& t : pool) t.join();
    }
    for (auto& r : results)
        if (r.ok) candidates.push_back(r.design);
    if (candidates.empty()) throw InfeasibleError("no start produced a design meeting the rate constraint");
    // lowest gamma wins; ties keep the earlier candidate
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i)
        if (candidates[i].gamma < candidates[best].gamma) best = i;
    if (opt.gamma_target) {
        // serial runs stop at the first start reaching the target; match that
        for (std::size_t i = 0; i < candidates.size(); ++i)
            if (reached(candidates[i])) {
                best = i;
                break;
            }
    }
    return candidates[best];
}

SeparatedDesign design_separated(const Plant& plant, std::size_t N, double sigma) {
    if (N < 1) throw InvalidArgument("N must be positive");
    if (!(sigma >= 0)) throw InvalidArgument("sigma must be nonnegative");
    if (!is_detectable(plant)) throw PreconditionError("(A, C) is not detectable");
    const std::size_t n = plant.n(), p = plant.p();
    Matrix I = Matrix::identity(n);
    const double scale = std::max(1.0, sigma);
    std::vector<double> h2s = {-0.05 * scale, -0.2 * scale, -0.5 * scale, -scale};
    if (N == 1) h2s = {0.0};
    for (double h2 : h2s) {
        const double h1 = sigma - h2;
        LmiProblem lp;
        std::vector<LmiProblem::VarId> P, Y;
        std::vector<std::vector<LmiProblem::VarId>> W(N, std::vector<LmiProblem::VarId>(N));
        for (std::size_t i = 0; i < N; ++i) {
            P.push_back(lp.symmetric("P_" + std::to_string(i + 1), n));
            Y.push_back(lp.full("Y_" + std::to_string(i + 1), n, p));
        }
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j)
                if (i != j) W[i][j] = lp.full("W_" + std::to_string(i + 1) + std::to_string(j + 1), n, p);
        for (std::size_t i = 0; i < N; ++i) {
            auto c = lp.constraint("local rate " + std::to_string(i + 1), {n});
            lp.add(c, 0, 0, plant.A.transpose(), P[i], I);
            lp.add(c, 0, 0, I, P[i], plant.A);
            lp.add(c, 0, 0, I, Y[i], -1.0 * plant.C);
            lp.add(c, 0, 0, -1.0 * plant.C.transpose(), Y[i], I, 1.0, true);
            lp.add(c, 0, P[i], 2 * h1);
            auto pos = lp.constraint("P_" + std::to_string(i + 1) + " > 0", {n}, Sense::positive);
            lp.add(pos, 0, P[i]);
        }
        if (N > 1) {
            auto c = lp.constraint("coupling", std::vector<std::size_t>(N, n));
            for (std::size_t i = 0; i < N; ++i) {
                lp.add(c, i, P[i], 2 * h2);
                for (std::size_t j = i + 1; j < N; ++j) {
                    lp.add(c, i, j, -1.0 * I, W[i][j], plant.C);
                    lp.add(c, i, j, -1.0 * plant.C.transpose(), W[j][i], I, 1.0, true);
                }
            }
        }
        auto cert = solve_feasibility(lp);
        if (!cert.feasible) continue;
        SeparatedDesign d;
        d.graph = Digraph::all_to_all(N);
        d.gains = GainSchedule(N, n, p);
        for (std::size_t i = 0; i < N; ++i) {
            Matrix Pi = lp.value(P[i], cert.x);
            d.P_i.push_back(Pi);
            d.gains.set(i + 1, i + 1, solve(Pi, lp.value(Y[i], cert.x)));
            for (std::size_t j = 0; j < N; ++j)
                if (i != j) d.gains.set(i + 1, j + 1, solve(Pi, lp.value(W[i][j], cert.x)));
            d.certificate.push_back({"P_" + std::to_string(i + 1), Pi});
        }
        d.h1 = h1;
        d.h2 = h2;
        d.method = "separated";
        d.margin = cert.margin;
        d.iterations = cert.iterations;
        // rate certificate with P_D = diag(P_i)
        ErrorSystem es = assemble(plant, d.graph, d.gains);
        Matrix PD = block_diag(d.P_i);
        double lyap = lambda_max_sym(sym(es.A.transpose() * PD + PD * es.A + 2 * sigma * PD));
        if (!(lyap < 0)) continue;
        verify_design(plant, d, sigma, global_spec());
        return d;
    }
    throw InfeasibleError("separated design infeasible");
}

EdgeSearch minimize_edges(const Plant& plant, std::size_t N, double sigma, double gamma_star, const NormSpec& spec,
                          const FixedGraphOptions& opt) {
    if (N > kMaxEnumerationNodes) throw InvalidArgument("graph enumeration is capped at N = 5");
    if (!(gamma_star > 0)) throw InvalidArgument("gamma_star must be positive");
    auto graphs = enumerate_digraphs(N, N * N);
    FixedGraphOptions o = opt;
    o.gamma_target = gamma_star;
    o.jobs = 1;
    if (!o.luenberger_gain) o.luenberger_gain = luenberger_gain_for(plant, sigma);
    EdgeSearch out;
    std::size_t pos = 0;
    while (pos < graphs.size()) {
        std::size_t trace = graphs[pos].edge_count();
        std::size_t end = pos;
        while (end < graphs.size() && graphs[end].edge_count() == trace) ++end;
        std::vector<GraphVerdict> level(end - pos);
        std::vector<std::optional<Design>> designs(end - pos);
        auto work = [&](std::size_t k) {
            GraphVerdict v;
            v.graph = graphs[pos + k];
            v.trace = trace;
            try {
                Design d = design_fixed_graph(plant, v.graph, sigma, spec, o);
                v.gamma = d.gamma;
                v.feasible = d.gamma <= gamma_star;
                if (v.feasible) designs[k] = d;
            } catch (const InfeasibleError&) {
                v.gamma = INFINITY;
            }
            level[k] = v;
        };
        unsigned jobs = std::max(1u, opt.jobs);
        if (jobs == 1) {
            for (std::size_t k = 0; k < level.size(); ++k) {
                work(k);
                if (level[k].feasible) {
                    level.resize(k + 1);
                    break;
                }
            }
        } else {
            std::mutex mu;
            std::size_t next = 0;
            std::vector<std::thread> pool;
            for (unsigned j = 0; j < jobs; ++j)
                pool.emplace_back([&] {
                    for (;;) {
                        std::size_t k;
                        {
                            std::lock_guard<std::mutex> lock(mu);
                            if (next >= level.size()) return;
                            k = next++;
                        }
                        work(k);
                    }
                });
            for (auto& t : pool) t.join();
            // keep the serial order: verdicts up to the first success
            for (std::size_t k = 0; k < level.size(); ++k)
                if (level[k].feasible) {
                    level.resize(k + 1);
                    break;
                }
        }
        for (std::size_t k = 0; k < level.size(); ++k) {
            out.verdicts.push_back(level[k]);
            if (level[k].feasible) {
                out.design = *designs[k];
                return out;
            }
        }
        pos = end;
    }
    throw EdgeSearchInfeasible("no digraph reaches the requested gamma", std::move(out.verdicts));
}

double local_gain_margin(const Plant& plant, const Matrix& K_L, const Matrix& P, double alpha_tilde) {
    const std::size_t n = plant.n();
    Matrix AL = luenberger_matrix(plant, K_L);
    Matrix I = Matrix::identity(n);
    Matrix KC = K_L * plant.C;
    Matrix M(3 * n, 3 * n);
    M.set_block(0, 0, AL.transpose() * P + P * AL);
    M.set_block(0, n, P * KC);
    M.set_block(n, 0, (P * KC).transpose());
    M.set_block(0, 2 * n, -alpha_tilde * I);
    M.set_block(2 * n, 0, -alpha_tilde * I);
    M.set_block(n, n, -1.0 * I);
    M.set_block(n, 2 * n, (1 + alpha_tilde) * I);
    M.set_block(2 * n, n, (1 + alpha_tilde) * I);
    M.set_block(2 * n, 2 * n, -1.0 * I);
    return lambda_max_sym(sym(M));
}

LocalGainCertificate local_gain_certificate(const Plant& plant, const Matrix& K_L, std::size_t N) {
    if (N < 2) throw InvalidArgument("N must be at least 2");
    Matrix AL = luenberger_matrix(plant, K_L, true);
    const std::size_t n = plant.n();
    Matrix I = Matrix::identity(n);
    LmiProblem p;
    auto P = p.symmetric("P", n);
    auto al = p.scalar("alpha");
    auto c = p.constraint("local gain", {n, n, n});
    p.add(c, 0, 0, AL.transpose(), P, I);
    p.add(c, 0, 0, I, P, AL);
    p.add(c, 0, 1, I, P, K_L * plant.C);
    p.add_scaled(c, 0, 2, al, -1.0 * I);
    p.add(c, 1, 1, -1.0 * I);
    p.add(c, 1, 2, I);
    p.add_scaled(c, 1, 2, al, I);
    p.add(c, 2, 2, -1.0 * I);
    auto pos = p.constraint("P > 0", {n}, Sense::positive);
    p.add(pos, 0, P);
    SolverOptions opt;
    opt.target_margin = 0;
    auto cert = solve_feasibility(p, opt);

    LocalGainCertificate out;
    out.gamma_L = hinf_norm(luenberger_transfer(plant, K_L));
    out.alpha_tilde = p.value(al, cert.x)(0, 0);
    out.P = p.value(P, cert.x);
    out.margin = cert.margin;
    out.feasible = cert.feasible;
    if (!out.feasible) return out;
    auto [g, k] = star_design(plant, K_L, N, out.alpha_tilde);
    out.star.graph = g;
    out.star.gains = k;
    out.star.method = "star";
    ErrorSystem es = assemble(plant, g, k);
    out.star.abscissa = spectral_abscissa(es.A);
    for (std::size_t i = 2; i <= N; ++i) out.local_gains.push_back(network_hinf(es, local_spec(i)));
    out.star.gamma = *std::max_element(out.local_gains.begin(), out.local_gains.end());
    out.star.certificate = {{"P", out.P}};
    return out;
}

std::vector<double> default_dilation_grid() { return {1e-2, 1e-1, 1.0, 1e1, 1e2}; }

namespace {

// Prop. 8 blocks with a common slack Q and Z = Q^T M_u; the second block uses
// P_H (the gain certificate) in its coupling term.
struct DilatedProblem {
    LmiProblem p;
    LmiProblem::VarId PS, PH, Q, Z;
};

DilatedProblem build_dilated(const Channel& ch, double sigma, double gamma, double rD, double rH) {
    const std::size_t m = ch.N * ch.n, w = ch.Bw.cols(), q = ch.X.rows();
    Matrix I = Matrix::identity(m);
    DilatedProblem d;
    auto& p = d.p;
    d.PS = p.symmetric("P_S", m);
    d.PH = p.symmetric("P_H", m);
    d.Q = p.full("Q", block_pattern(ch.N, ch.n, ch.complete));
    d.Z = p.full("Z", ch.mask);
    // Q^T A_cal = Q^T Ae + Z Ce
    auto QtA = [&](LmiProblem::ConId c, std::size_t bi, std::size_t bj, double s) {
        p.add(c, bi, bj, I, d.Q, s * ch.Ae, 1.0, true);
        p.add(c, bi, bj, s * I, d.Z, ch.Ce);
    };
    auto r = p.constraint("dilated region", {m, m});
    QtA(r, 0, 0, 1.0);
    p.add(r, 0, 0, ch.Ae.transpose(), d.Q, I);
    p.add(r, 0, 0, ch.Ce.transpose(), d.Z, I, 1.0, true);
    p.add(r, 0, d.PS, 2 * sigma);
    // block (1,0): P_S - Q + rD Q^T A_cal
    p.add(r, 1, 0, I, d.PS, I);
    p.add(r, 1, 0, -1.0 * I, d.Q, I);
    QtA(r, 1, 0, rD);
    p.add(r, 1, 1, -rD * I, d.Q, I);
    p.add(r, 1, 1, -rD * I, d.Q, I, 1.0, true);

    auto h = p.constraint("dilated gain", {m, m, w, q});
    QtA(h, 0, 0, 1.0);
    p.add(h, 0, 0, ch.Ae.transpose(), d.Q, I);
    p.add(h, 0, 0, ch.Ce.transpose(), d.Z, I, 1.0, true);
    p.add(h, 1, 0, I, d.PH, I);
    p.add(h, 1, 0, -1.0 * I, d.Q, I);
    QtA(h, 1, 0, rH);
    p.add(h, 1, 1, -rH * I, d.Q, I);
    p.add(h, 1, 1, -rH * I, d.Q, I, 1.0, true);
    p.add(h, 0, 2, I, d.Z, ch.Bw);
    p.add(h, 1, 2, rH * I, d.Z, ch.Bw);
    p.add(h, 0, 3, ch.X.transpose());
    p.add(h, 2, 2, -gamma * Matrix::identity(w));
    p.add(h, 3, 3, -gamma * Matrix::identity(q));
    auto s1 = p.constraint("P_S > 0", {m}, Sense::positive);
    p.add(s1, 0, d.PS);
    auto s2 = p.constraint("P_H > 0", {m}, Sense::positive);
    p.add(s2, 0, d.PH);
    return d;
}

}  // namespace

Certificate dilated_check(const ErrorSystem& es, double sigma, double gamma, double r_D, double r_H,
                          const NormSpec& spec) {
    if (!(r_D > 0) || !(r_H > 0)) throw InvalidArgument("dilation parameters must be positive");
    if (!(gamma > 0)) throw InvalidArgument("gamma must be positive");
    // fixed gains: the same blocks with the closed loop folded into A
    TransferRealization t = error_transfer(es, spec);
    const std::size_t m = es.A.rows(), w = t.B.cols(), q = t.C.rows();
    Matrix I = Matrix::identity(m);
    LmiProblem p;
    auto PS = p.symmetric("P_S", m), PH = p.symmetric("P_H", m);
    auto Q = p.full("Q", m, m);
    auto r = p.constraint("dilated region", {m, m});
    p.add(r, 0, 0, I, Q, es.A, 1.0, true);
    p.add(r, 0, 0, es.A.transpose(), Q, I);
    p.add(r, 0, PS, 2 * sigma);
    p.add(r, 1, 0, I, PS, I);
    p.add(r, 1, 0, -1.0 * I, Q, I);
    p.add(r, 1, 0, r_D * I, Q, es.A, 1.0, true);
    p.add(r, 1, 1, -r_D * I, Q, I);
    p.add(r, 1, 1, -r_D * I, Q, I, 1.0, true);
    auto h = p.constraint("dilated gain", {m, m, w, q});
    p.add(h, 0, 0, I, Q, es.A, 1.0, true);
    p.add(h, 0, 0, es.A.transpose(), Q, I);
    p.add(h, 1, 0, I, PH, I);
    p.add(h, 1, 0, -1.0 * I, Q, I);
    p.add(h, 1, 0, r_H * I, Q, es.A, 1.0, true);
    p.add(h, 1, 1, -r_H * I, Q, I);
    p.add(h, 1, 1, -r_H * I, Q, I, 1.0, true);
    p.add(h, 0, 2, I, Q, t.B, 1.0, true);
    p.add(h, 1, 2, r_H * I, Q, t.B, 1.0, true);
    p.add(h, 0, 3, t.C.transpose());
    p.add(h, 2, 2, -gamma * Matrix::identity(w));
    p.add(h, 3, 3, -gamma * Matrix::identity(q));
    auto s1 = p.constraint("P_S > 0", {m}, Sense::positive);
    p.add(s1, 0, PS);
    auto s2 = p.constraint("P_H > 0", {m}, Sense::positive);
    p.add(s2, 0, PH);
    SolverOptions opt;
    opt.target_margin = 0;
    return solve_feasibility(p, opt);
}

DilatedDesign design_dilated(const Plant& plant, const Digraph& g, double sigma, const NormSpec& spec,
                             const std::vector<double>& r_grid) {
    if (!(sigma >= 0)) throw InvalidArgument("sigma must be nonnegative");
    if (r_grid.empty()) throw InvalidArgument("empty dilation grid");
    for (double r : r_grid)
        if (!(r > 0)) throw InvalidArgument("dilation parameters must be positive");
    Channel ch = make_channel(plant, g, spec);
    Design common = design_common_P(plant, g, sigma, spec);

    std::optional<DilatedDesign> best;
    for (double rD : r_grid)
        for (double rH : r_grid) {
            std::optional<std::pair<DilatedProblem, Certificate>> hit;
            auto feasible = [&](double gamma) {
                auto dp = build_dilated(ch, sigma, gamma, rD, rH);
                SolverOptions opt;
                opt.target_margin = 1e-6;
                auto cert = solve_feasibility(dp.p, opt);
                if (cert.feasible) hit.emplace(std::move(dp), cert);
                return cert.feasible;
            };
            // only bisect below the incumbent, whose bound is not strict
            double incumbent = (best ? best->gamma : common.gamma) * (1 + 1e-3);
            if (!feasible(incumbent)) continue;
            auto gmin = bisect_gamma(feasible, incumbent, 1e-4);
            if (!gmin || !hit) continue;
            const auto& [dp, cert] = *hit;
            Matrix Qv = dp.p.value(dp.Q, cert.x);
            Matrix Mu = solve(Qv.transpose(), dp.p.value(dp.Z, cert.x));
            DilatedDesign d;
            d.graph = g;
            d.gains = gains_from_stacked(ch, Mu);
            d.method = "dilated";
            d.lmi_bound = *gmin;
            d.P_S = dp.p.value(dp.PS, cert.x);
            d.P_H = dp.p.value(dp.PH, cert.x);
            d.Q_D = Qv;
            d.Q_H = Qv;
            d.r_D = rD;
            d.r_H = rH;
            d.margin = cert.margin;
            d.iterations = cert.iterations;
            try {
                verify_design(plant, d, sigma, spec);
            } catch (const InfeasibleError&) {
                continue;
            } catch (const NumericalError&) {
                continue;
            }
            if (!best || d.gamma < best->gamma) best = d;
        }
    if (!best || best->gamma > common.gamma) {
        // the common-P solution is the small-r limit of the dilated family
        DilatedDesign d;
        static_cast<Design&>(d) = common;
        d.method = "dilated (common-P limit)";
        d.P_S = d.P_H = d.Q_D = d.Q_H = common.certificate.front().value;
        d.r_D = d.r_H = 0;
        if (!best) return d;
        best = d;
    }
    best->certificate = {{"P_S", best->P_S}, {"P_H", best->P_H}, {"Q_D", best->Q_D}, {"Q_H", best->Q_H}};
    return *best;
}

namespace {

// Adds one all-to-all agent whose error tracks the network average of the
// others: K_NN = K_L and K_Nj = mean_i K_ij - K_L / (N - 1). Under common
// noise the averaged output keeps the previous transfer function, and the new
// modes are those of A - K_L C.
Matrix add_tracking_agent(const Matrix& K, std::size_t n, std::size_t p, const Matrix& K_L) {
    const std::size_t M = K.rows() / n;
    Matrix W = Matrix::zeros((M + 1) * n, (M + 1) * p);
    W.set_block(0, 0, K);
    for (std::size_t j = 0; j < M; ++j) {
        Matrix mean = Matrix::zeros(n, p);
        for (std::size_t i = 0; i < M; ++i) mean += K.block(i * n, j * p, n, p);
        W.set_block(M * n, j * p, (1.0 / static_cast<double>(M)) * (mean - K_L));
    }
    W.set_block(M * n, M * p, K_L);
    return W;
}

}  // namespace

AgentSweep sweep_agent_count(const Plant& plant, double sigma, double c1, double c2,
                             const std::vector<std::size_t>& N_set, const FixedGraphOptions& opt) {
    if (!(c1 >= 0) || !(c2 >= 0)) throw InvalidArgument("weights must be nonnegative");
    if (N_set.empty()) throw InvalidArgument("empty agent-count set");
    for (auto N : N_set)
        if (N < 1 || N > 7) throw InvalidArgument("agent counts must lie in 1..7");
    AgentSweep out;
    FixedGraphOptions o = opt;
    if (!o.luenberger_gain) o.luenberger_gain = luenberger_gain_for(plant, sigma);
    std::vector<std::size_t> order = N_set;
    std::sort(order.begin(), order.end());
    order.erase(std::unique(order.begin(), order.end()), order.end());
    double best_cost = INFINITY;
    std::optional<Matrix> previous;
    for (auto N : order) {
        FixedGraphOptions oN = o;
        if (previous) {
            Matrix W = *previous;
            while (W.rows() < N * plant.n()) W = add_tracking_agent(W, plant.n(), plant.p(), *o.luenberger_gain);
            oN.warm_starts.push_back(W);
        }
        Design d = design_fixed_graph(plant, Digraph::all_to_all(N), sigma, global_spec(), oN);
        previous = d.gains.stacked();
        out.per_N.emplace_back(N, d.gamma);
        double cost = c1 * d.gamma + c2 * static_cast<double>(N);
        if (cost < best_cost) {
            best_cost = cost;
            out.best_N = N;
        }
        out.designs.push_back(std::move(d));
    }
    return out;
}

}  // namespace netobs
