#include "netobs/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace netobs {

TransferRealization::TransferRealization(Matrix a, Matrix b, Matrix c)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)) {
    if (!A.square() || B.rows() != A.rows() || C.cols() != A.rows())
        throw InvalidArgument("inconsistent state-space realization");
}

TransferRealization::TransferRealization(Matrix a, Matrix b, Matrix c, Matrix d)
    : TransferRealization(std::move(a), std::move(b), std::move(c)) {
    D = std::move(d);
    if (D.rows() != C.rows() || D.cols() != B.cols()) throw InvalidArgument("D has the wrong shape");
}

namespace {

CMatrix freq_response(const TransferRealization& t, double omega) {
    const std::size_t n = t.A.rows();
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = -t.A(i, j);
    for (std::size_t i = 0; i < n; ++i) m(i, i) += cplx(0.0, omega);
    CMatrix x = csolve(m, CMatrix(t.B));
    CMatrix r = CMatrix(t.C) * x;
    if (t.has_d())
        for (std::size_t i = 0; i < r.rows(); ++i)
            for (std::size_t j = 0; j < r.cols(); ++j) r(i, j) += t.D(i, j);
    return r;
}

// Hamiltonian of the bounded-real inequality at level gamma > sigma_max(D).
Matrix hamiltonian(const TransferRealization& t, double gamma) {
    const std::size_t n = t.A.rows();
    Matrix A = t.A, BB, CC;
    if (!t.has_d()) {
        BB = (1.0 / gamma) * (t.B * t.B.transpose());
        CC = (1.0 / gamma) * (t.C.transpose() * t.C);
    } else {
        const std::size_t m = t.B.cols(), q = t.C.rows();
        Matrix R = gamma * gamma * Matrix::identity(m) - t.D.transpose() * t.D;
        Matrix Rinv = inverse(R);
        A = t.A + t.B * Rinv * t.D.transpose() * t.C;
        BB = t.B * Rinv * t.B.transpose();
        CC = t.C.transpose() * (Matrix::identity(q) + t.D * Rinv * t.D.transpose()) * t.C;
        // balanced scaling, same spectrum as the textbook form
        BB *= gamma;
        CC *= 1.0 / gamma;
    }
    Matrix H(2 * n, 2 * n);
    H.set_block(0, 0, A);
    H.set_block(0, n, BB);
    H.set_block(n, 0, -CC);
    H.set_block(n, n, -A.transpose());
    return H;
}

// Loose on purpose: near-axis eigenvalues are only candidates, each one is
// checked against sigma_max before it moves a bound.
std::vector<double> imaginary_axis_frequencies(const Matrix& H) {
    const double scale = H.max_abs() * static_cast<double>(H.rows());
    std::vector<double> w;
    for (const cplx& l : eig(H))
        if (std::abs(l.real()) <= 1e-6 * (1.0 + std::abs(l)) + 1e-8 * scale && l.imag() >= 0) w.push_back(l.imag());
    std::sort(w.begin(), w.end());
    return w;
}

}  // namespace

double sigma_at(const TransferRealization& t, double omega) { return csigma_max(freq_response(t, omega)); }

HinfResult hinf_peak(const TransferRealization& t_in, double rel_tol) {
    if (!(rel_tol > 0)) throw InvalidArgument("rel_tol must be positive");
    // state scaling that equalizes |B| and |C|; large gains otherwise swamp
    // the Hamiltonian and blur its imaginary-axis eigenvalues
    TransferRealization t = t_in;
    {
        double nb = spectral_norm(t.B), nc = spectral_norm(t.C);
        if (nb > 0 && nc > 0) {
            double s = std::sqrt(nb / nc);
            t.B *= 1.0 / s;
            t.C *= s;
        }
    }
    double alpha = spectral_abscissa(t.A);
    if (!(alpha < 0)) throw PreconditionError("H-infinity norm needs a Hurwitz state matrix");
    HinfResult res;
    double dnorm = t.has_d() ? spectral_norm(t.D) : 0.0;
    if (t.B.max_abs() == 0.0 || t.C.max_abs() == 0.0) {
        res.gamma = res.lower = dnorm;
        return res;
    }
    // lower bound from a few natural frequencies
    auto consider = [&](double w) {
        double s = sigma_at(t, w);
        if (s > res.lower) {
            res.lower = s;
            res.omega = w;
        }
    };
    res.lower = dnorm;
    consider(0.0);
    for (const cplx& l : eig(t.A))
        if (l.imag() > 0) consider(l.imag());
    // upper bound; the resolvent estimate is not always valid for non-normal
    // A, so confirm it with the Hamiltonian test
    // evaluates sigma at the candidate crossings of level g and between
    // them; true iff some frequency exceeds g
    auto exceeds = [&](double g) {
        auto w = imaginary_axis_frequencies(hamiltonian(t, g));
        if (w.empty()) return false;
        consider(0.5 * w[0]);
        for (std::size_t k = 0; k < w.size(); ++k) {
            consider(w[k]);
            if (k + 1 < w.size()) consider(0.5 * (w[k] + w[k + 1]));
        }
        return res.lower > g;
    };
    double hi = spectral_norm(t.C) * spectral_norm(t.B) / std::abs(alpha) + dnorm;
    hi = std::max(hi, 1.01 * res.lower);
    for (int k = 0; k < 200 && exceeds(hi); ++k) hi = std::max(2.0 * hi, 1.01 * res.lower);
    double lo = res.lower;
    int it = 0;
    while (hi - lo > rel_tol * hi && it < 200) {
        ++it;
        double mid = 0.5 * (lo + hi);
        if (exceeds(mid))
            lo = res.lower;
        else
            hi = mid;
    }
    // polish the attained peak; near-merged crossings can end the bisection
    // slightly below it
    {
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = 0.9 * res.omega, b = 1.1 * res.omega + 1e-9;
        double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
        double f1 = sigma_at(t, x1), f2 = sigma_at(t, x2);
        for (int k = 0; k < 80 && b - a > 1e-12 * (1.0 + b); ++k) {
            if (f1 > f2) {
                b = x2, x2 = x1, f2 = f1;
                x1 = b - phi * (b - a), f1 = sigma_at(t, x1);
            } else {
                a = x1, x1 = x2, f1 = f2;
                x2 = a + phi * (b - a), f2 = sigma_at(t, x2);
            }
        }
        consider(f1 > f2 ? x1 : x2);
    }
    res.gamma = std::max(hi, res.lower);
    res.iterations = it;
    return res;
}

double hinf_norm(const TransferRealization& t, double rel_tol) { return hinf_peak(t, rel_tol).gamma; }

double hinf_sweep(const TransferRealization& t, std::size_t points, double w_max) {
    if (!(spectral_abscissa(t.A) < 0)) throw PreconditionError("H-infinity norm needs a Hurwitz state matrix");
    double best = sigma_at(t, 0.0);
    const double lmin = std::log10(1e-3), lmax = std::log10(w_max);
    for (std::size_t k = 0; k < points; ++k) {
        double w = std::pow(10.0, lmin + (lmax - lmin) * k / (points - 1));
        best = std::max(best, sigma_at(t, w));
    }
    return best;
}

NormSpec global_spec() { return {NoiseSharing::common, OutputKind::average, 1}; }
NormSpec local_spec(std::size_t i) { return {NoiseSharing::independent, OutputKind::local, i}; }

TransferRealization error_transfer(const ErrorSystem& es, const NormSpec& spec) {
    Matrix B = spec.sharing == NoiseSharing::common ? common_noise_input(es) : es.B;
    Matrix C;
    switch (spec.output) {
        case OutputKind::stacked: C = es.C; break;
        case OutputKind::average: C = average_output(es); break;
        case OutputKind::local: C = local_output(es, spec.agent); break;
    }
    return TransferRealization(es.A, B, C);
}

double network_hinf(const ErrorSystem& es, const NormSpec& spec, double rel_tol) {
    return hinf_norm(error_transfer(es, spec), rel_tol);
}

TransferRealization luenberger_transfer(const Plant& plant, const Matrix& K_L) {
    return TransferRealization(luenberger_matrix(plant, K_L), K_L, Matrix::identity(plant.n()));
}

const char* to_string(KLCondition c) {
    switch (c) {
        case KLCondition::distinct_eig: return "distinct-eig";
        case KLCondition::dissipative: return "dissipative";
        case KLCondition::lyapunov: return "lyapunov";
    }
    return "?";
}

double KLBound::envelope(double e0_norm, double t) const { return c * std::exp(-rate * t) * e0_norm; }
double KLBound::bound(double e0_norm, double m_inf, double t) const { return envelope(e0_norm, t) + gain * m_inf; }

namespace {

// Solves A^T P + P A = -Q by vectorization; fine at the sizes used here.
Matrix lyapunov(const Matrix& A, const Matrix& Q) {
    const std::size_t n = A.rows();
    Matrix I = Matrix::identity(n);
    Matrix L = kron(I, A.transpose()) + kron(A.transpose(), I);
    Matrix q(n * n, 1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) q(j * n + i, 0) = -Q(i, j);
    Matrix x = solve(L, q);
    Matrix P(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) P(i, j) = x(j * n + i, 0);
    return sym(P);
}

}  // namespace

KLBound kl_bound(const Matrix& A, const Matrix& B, const Matrix& Cout, KLCondition condition,
                 const std::optional<Matrix>& P, std::optional<double> alpha_bar) {
    const double nb = spectral_norm(B), nc = spectral_norm(Cout);
    KLBound k;
    k.condition = condition;
    switch (condition) {
        case KLCondition::distinct_eig: {
            double alpha = spectral_abscissa(A);
            if (!(alpha < 0)) throw PreconditionError("condition 1 needs a Hurwitz matrix");
            double kappa;
            try {
                kappa = jordan_condition(A);
            } catch (const InvalidArgument&) {
                throw PreconditionError("condition 1 needs distinct eigenvalues");
            }
            k.c = kappa * nc;
            k.rate = -alpha;
            k.gain = kappa * nb * nc / std::abs(alpha);
            break;
        }
        case KLCondition::dissipative: {
            double mu = log_norm(A);
            if (!(mu < 0)) throw PreconditionError("condition 2 needs A + A^T negative definite");
            k.c = nc;
            k.rate = -mu;
            k.gain = nb * nc / std::abs(mu);
            break;
        }
        case KLCondition::lyapunov: {
            Matrix Pm = P ? sym(*P) : lyapunov(A, Matrix::identity(A.rows()));
            if (Pm.rows() != A.rows()) throw InvalidArgument("P has the wrong size");
            SymEig pe = sym_eig(Pm);
            double lmin = pe.values.front(), lmax = pe.values.back();
            if (!(lmin > 0)) throw PreconditionError("condition 3 needs P positive definite");
            Matrix He = A.transpose() * Pm + Pm * A;
            double ab;
            if (alpha_bar) {
                ab = *alpha_bar;
                if (!(ab > 0)) throw PreconditionError("condition 3 needs alpha_bar > 0");
                double viol = lambda_max_sym(He + 2.0 * ab * Pm);
                if (viol > 1e-10 * std::max(1.0, He.max_abs())) throw PreconditionError("He(A,P) <= -2 alpha_bar P fails");
            } else {
                // largest alpha_bar allowed by P: congruence with P^{-1/2}
                Matrix W = pe.vectors * Matrix::diag([&] {
                    std::vector<double> s;
                    for (double v : pe.values) s.push_back(1.0 / std::sqrt(v));
                    return s;
                }()) * pe.vectors.transpose();
                ab = -lambda_max_sym(W * He * W) / 2.0;
                if (!(ab > 0)) throw PreconditionError("P does not certify stability");
            }
            double cp = lmax / lmin;
            k.rate = ab * lmin / lmax;
            k.c = std::sqrt(cp) * nc;
            k.gain = cp * nb * nc / k.rate;
            break;
        }
    }
    return k;
}

KLBound kl_bound(const ErrorSystem& es, KLCondition condition, const std::optional<Matrix>& P,
                 std::optional<double> alpha_bar) {
    return kl_bound(es.A, es.B, es.C, condition, P, alpha_bar);
}

KLBound luenberger_kl_bound(const Plant& plant, const Matrix& K_L, KLCondition condition,
                            const std::optional<Matrix>& P, std::optional<double> alpha_bar) {
    return kl_bound(luenberger_matrix(plant, K_L), K_L, Matrix::identity(plant.n()), condition, P, alpha_bar);
}

BoundComparison compare_bounds(const KLBound& ours, const KLBound& luenberger, double e0_norm, double eL0_norm) {
    BoundComparison r;
    r.rate_strictly_better = ours.rate > luenberger.rate;
    r.gain_strictly_better = ours.gain < luenberger.gain;
    double lhs = ours.c * e0_norm, rhs = luenberger.c * eL0_norm;
    if (ours.rate > luenberger.rate) {
        double t = std::log(lhs / rhs) / (ours.rate - luenberger.rate);
        r.crossover_t_star = std::max(0.0, t);
    } else if (ours.rate == luenberger.rate && lhs <= rhs) {
        r.crossover_t_star = 0.0;  // parallel envelopes, ours never above
    }
    return r;
}

std::vector<double> steady_state_error(const ErrorSystem& es, const std::vector<double>& m_const) {
    std::vector<double> m = m_const;
    if (m.size() == es.p && es.N > 1) {
        m.clear();
        for (std::size_t i = 0; i < es.N; ++i) m.insert(m.end(), m_const.begin(), m_const.end());
    }
    if (m.size() != es.p * es.N) throw InvalidArgument("noise vector must have p or p*N entries");
    Matrix x = solve(es.A, es.B * Matrix::column(m));
    Matrix e = -1.0 * (es.C * x);
    return std::vector<double>(e.data().begin(), e.data().end());
}

double convergence_rate(const ErrorSystem& es) {
    double a = spectral_abscissa(es.A);
    if (!(a < 0)) throw PreconditionError("convergence rate needs a Hurwitz error matrix");
    return -a;
}

bool in_closed_form_domain(double a, double K_L, double K12, double K21) {
    const double al = K12 + K21, be = K12 * K21;
    if (be != 0.0 || !(a - K_L < 0)) return false;
    const double at = (2 * K_L + al) * (2 * K_L + al);
    const double c = 2 * (a - K_L) * (a - K_L) + 2 * be;
    const double d = std::pow((a - K_L) * (a - K_L) - be, 2);
    const double e = std::pow(2 * K_L * (K_L - a) - a * al - 2 * be, 2);
    return e * c - at * d > 0;
}

ScalarHinf scalar_two_agent_hinf(double a, double K_L, double K12, double K21) {
    if (!(a - K_L < 0)) throw PreconditionError("need a - K_L < 0");
    Plant plant(Matrix{{a}}, Matrix{{1.0}});
    ErrorSystem es = assemble(plant, Digraph::all_to_all(2), GainSchedule::scalar2(K_L, K12, K21, K_L));
    ScalarHinf r;
    r.hamiltonian = network_hinf(es, global_spec());
    if (in_closed_form_domain(a, K_L, K12, K21)) {
        const double al = K12 + K21, be = K12 * K21;
        const double d = std::pow((a - K_L) * (a - K_L) - be, 2);
        const double e = std::pow(2 * K_L * (K_L - a) - a * al - 2 * be, 2);
        r.value = 0.5 * std::sqrt(e / d);
        r.closed_form = true;
    } else {
        r.value = r.hamiltonian;
    }
    return r;
}

UncoupledAverage uncoupled_average_oracle(double a, double K_L, double K1, double K2, double m) {
    if (!(K1 >= K_L && K2 >= K_L && a - K_L < 0 && K_L >= 0)) throw InvalidArgument("need K1, K2 >= K_L >= 0 and a < K_L");
    UncoupledAverage r;
    r.avg_abs = std::abs(0.5 * (K1 / (K1 - a) + K2 / (K2 - a)) * m);
    r.luenberger_abs = std::abs(K_L / (K_L - a) * m);
    if (r.avg_abs < r.luenberger_abs * (1 - 1e-12)) throw NumericalError("uncoupled average beat the Luenberger value");
    return r;
}

}  // namespace netobs
