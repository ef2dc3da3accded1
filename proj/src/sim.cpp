#include "netobs/sim.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <random>

namespace netobs {

namespace {

// Gauss-Legendre nodes and weights on [-1, 1].
constexpr std::array<double, 4> kGLNode{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                        0.8611363115940526};
constexpr std::array<double, 4> kGLWeight{0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                          0.3478548451374538};

std::size_t step_count(double T, double dt) {
    if (!(dt > 0) || !std::isfinite(dt)) throw InvalidArgument("simulate: dt must be positive");
    if (!(T >= dt) || !std::isfinite(T)) throw InvalidArgument("simulate: need T >= dt");
    return static_cast<std::size_t>(std::llround(T / dt));
}

const NoiseChannel& channel_for(const NoiseSpec& s, std::size_t agent) {
    if (s.agents.empty()) throw InvalidArgument("noise spec without parameters");
    if (s.sharing == NoiseSharing::common || s.agents.size() == 1) return s.agents.front();
    if (agent == 0 || agent > s.agents.size()) throw InvalidArgument("noise spec has no entry for this agent");
    return s.agents[agent - 1];
}

std::vector<double> stacked_noise(const NoiseSpec& s, double t, std::size_t N, std::size_t p) {
    std::vector<double> m(N * p);
    for (std::size_t i = 1; i <= N; ++i) {
        auto mi = noise_sample(s, t, i, p);
        std::copy(mi.begin(), mi.end(), m.begin() + (i - 1) * p);
    }
    return m;
}

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
    std::vector<double> y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

void put_row(Matrix& m, std::size_t k, const std::vector<double>& v) {
    for (std::size_t j = 0; j < v.size(); ++j) m(k, j) = v[j];
}

std::vector<double> initial_errors(const std::vector<double>& x0, const std::vector<std::vector<double>>& xhat0,
                                   std::size_t N) {
    std::size_t n = x0.size();
    if (xhat0.size() != N && xhat0.size() != 1) throw InvalidArgument("simulate: need one initial estimate per agent");
    std::vector<double> e(n * N);
    for (std::size_t i = 0; i < N; ++i) {
        const auto& xh = xhat0.size() == 1 ? xhat0[0] : xhat0[i];
        if (xh.size() != n) throw InvalidArgument("simulate: initial estimate has wrong size");
        for (std::size_t k = 0; k < n; ++k) e[i * n + k] = xh[k] - x0[k];
    }
    return e;
}

void check_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) throw NumericalError("simulation diverged");
}

}  // namespace

const char* to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::zero: return "zero";
        case NoiseKind::constant: return "constant";
        case NoiseKind::sinusoid: return "sinusoid";
        case NoiseKind::white: return "white";
    }
    return "?";
}

NoiseSpec NoiseSpec::none() { return {}; }

NoiseSpec NoiseSpec::constant(double b0) {
    NoiseSpec s;
    s.kind = NoiseKind::constant;
    s.agents = {NoiseChannel{b0, 0, 0}};
    return s;
}

NoiseSpec NoiseSpec::sinusoid(double b0, double b1, double omega) {
    NoiseSpec s;
    s.kind = NoiseKind::sinusoid;
    s.agents = {NoiseChannel{b0, b1, omega}};
    return s;
}

NoiseSpec NoiseSpec::white(double b1, std::uint64_t seed, NoiseSharing sharing, double hold) {
    if (!(hold > 0)) throw InvalidArgument("white noise needs a positive hold interval");
    NoiseSpec s;
    s.kind = NoiseKind::white;
    s.sharing = sharing;
    s.agents = {NoiseChannel{0, b1, 0}};
    s.seed = seed;
    s.hold = hold;
    return s;
}

std::vector<double> noise_sample(const NoiseSpec& spec, double t, std::size_t agent, std::size_t p) {
    std::vector<double> m(p, 0.0);
    if (spec.kind == NoiseKind::zero) return m;
    const NoiseChannel& c = channel_for(spec, agent);
    switch (spec.kind) {
        case NoiseKind::constant: std::fill(m.begin(), m.end(), c.offset); break;
        case NoiseKind::sinusoid: std::fill(m.begin(), m.end(), c.offset + c.amplitude * std::sin(c.omega * t)); break;
        case NoiseKind::white: {
            auto k = static_cast<std::uint64_t>(std::max(0.0, std::floor(t / spec.hold + 1e-9)));
            std::uint64_t who = spec.sharing == NoiseSharing::common ? 0 : agent;
            std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                              static_cast<std::uint32_t>(who), static_cast<std::uint32_t>(k),
                              static_cast<std::uint32_t>(k >> 32)};
            std::mt19937_64 rng(seq);
            std::uniform_real_distribution<double> u(-c.amplitude, c.amplitude);
            for (auto& v : m) v = c.offset + u(rng);
            break;
        }
        case NoiseKind::zero: break;
    }
    return m;
}

double SimTrace::ebar_norm(std::size_t k) const {
    double s = 0;
    for (std::size_t j = 0; j < ebar.cols(); ++j) s += ebar(k, j) * ebar(k, j);
    return std::sqrt(s);
}

std::vector<double> SimTrace::ebar_at(std::size_t k) const {
    std::vector<double> v(ebar.cols());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = ebar(k, j);
    return v;
}

SimTrace simulate(const Plant& plant, const Digraph& g, const GainSchedule& gains, const NoiseSpec& noise,
                  const std::vector<double>& x0, const std::vector<std::vector<double>>& xhat0, double T, double dt) {
    std::size_t K = step_count(T, dt);
    ErrorSystem es = assemble(plant, g, gains);
    const std::size_t n = es.n, p = es.p, N = es.N, nN = n * N;
    if (x0.size() != n) throw InvalidArgument("simulate: x0 has wrong size");
    std::vector<double> x = x0, e = initial_errors(x0, xhat0, N);

    Matrix Phi = expm(es.A, dt), PhiX = expm(plant.A, dt);
    bool noisy = noise.kind != NoiseKind::zero;
    std::array<Matrix, 4> E;
    Matrix corr;
    if (noisy) {
        Matrix sum = Matrix::zeros(nN, p * N);
        for (int q = 0; q < 4; ++q) {
            double s = 0.5 * dt * (1 + kGLNode[q]);
            E[q] = (0.5 * dt * kGLWeight[q]) * (expm(es.A, s) * es.B);
            sum += E[q];
        }
        // int_0^dt e^{A s} ds B from the augmented exponential
        Matrix aug = Matrix::zeros(nN + p * N, nN + p * N);
        aug.set_block(0, 0, es.A);
        aug.set_block(0, nN, es.B);
        Matrix Gam = expm(aug, dt).block(0, nN, nN, p * N);
        corr = Gam - sum;
    }

    SimTrace tr;
    tr.n = n, tr.p = p, tr.N = N, tr.dt = dt;
    tr.integrator = "exact-discretization+gauss-legendre-4";
    tr.t.resize(K + 1);
    tr.x = Matrix(K + 1, n);
    tr.xhat = Matrix(K + 1, nN);
    tr.ebar = Matrix(K + 1, nN);
    tr.m = Matrix(K + 1, p * N);

    auto record = [&](std::size_t k) {
        double t = static_cast<double>(k) * dt;
        tr.t[k] = t;
        put_row(tr.x, k, x);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t c = 0; c < n; ++c) tr.xhat(k, i * n + c) = x[c] + e[i * n + c];
        put_row(tr.ebar, k, matvec(es.C, e));
        put_row(tr.m, k, stacked_noise(noise, t, N, p));
    };
    record(0);
    for (std::size_t k = 0; k < K; ++k) {
        double t = static_cast<double>(k) * dt;
        std::vector<double> en = matvec(Phi, e);
        if (noisy) {
            std::vector<double> mbar(p * N, 0.0);
            for (int q = 0; q < 4; ++q) {
                double s = 0.5 * dt * (1 + kGLNode[q]);
                auto mq = stacked_noise(noise, t + dt - s, N, p);
                auto add = matvec(E[q], mq);
                for (std::size_t j = 0; j < nN; ++j) en[j] += add[j];
                for (std::size_t j = 0; j < mbar.size(); ++j) mbar[j] += 0.5 * kGLWeight[q] * mq[j];
            }
            auto add = matvec(corr, mbar);
            for (std::size_t j = 0; j < nN; ++j) en[j] += add[j];
        }
        e = std::move(en);
        x = matvec(PhiX, x);
        check_finite(e);
        check_finite(x);
        record(k + 1);
    }
    return tr;
}

SimTrace simulate_luenberger(const Plant& plant, const Matrix& K_L, const NoiseSpec& noise,
                             const std::vector<double>& x0, const std::vector<double>& xhat0, double T, double dt) {
    return simulate(plant, Digraph::self_only(1), GainSchedule(1, {K_L}), noise, x0, {xhat0}, T, dt);
}

ErrorStats error_stats(const SimTrace& trace, double transient_cut) {
    ErrorStats st;
    std::size_t cols = trace.ebar.cols();
    st.mean.assign(cols, 0.0);
    st.std.assign(cols, 0.0);
    std::size_t first = trace.t.size();
    for (std::size_t k = 0; k < trace.t.size(); ++k)
        if (trace.t[k] >= transient_cut - 1e-9 * trace.dt) {
            first = k;
            break;
        }
    st.samples = trace.t.size() - first;
    if (st.samples == 0) throw InvalidArgument("error_stats: empty window");
    for (std::size_t k = first; k < trace.t.size(); ++k)
        for (std::size_t j = 0; j < cols; ++j) st.mean[j] += trace.ebar(k, j);
    for (auto& v : st.mean) v /= static_cast<double>(st.samples);
    if (st.samples > 1) {
        for (std::size_t k = first; k < trace.t.size(); ++k)
            for (std::size_t j = 0; j < cols; ++j) {
                double d = trace.ebar(k, j) - st.mean[j];
                st.std[j] += d * d;
            }
        for (auto& v : st.std) v = std::sqrt(v / static_cast<double>(st.samples - 1));
    }
    return st;
}

std::optional<double> simulated_crossover(const SimTrace& ours, const SimTrace& baseline) {
    if (ours.t.size() != baseline.t.size()) throw InvalidArgument("crossover: traces on different grids");
    std::size_t K = ours.t.size();
    std::size_t last_bad = K;
    for (std::size_t k = 0; k < K; ++k)
        if (ours.ebar_norm(k) >= baseline.ebar_norm(k)) last_bad = k;
    if (last_bad == K) return 0.0;
    if (last_bad + 1 == K) return std::nullopt;
    return ours.t[last_bad + 1];
}

double ConsensusTrace::max_delta(std::size_t k) const {
    double m = 0;
    for (std::size_t j = 0; j < delta.cols(); ++j) m = std::max(m, std::abs(delta(k, j)));
    return m;
}

ConsensusTrace consensus_simulate(const Plant& plant, const Digraph& g, const GainSchedule& gains, double beta1,
                                  double beta2, const std::vector<double>& x0,
                                  const std::vector<std::vector<double>>& xhat0,
                                  const std::vector<std::vector<double>>& xi0,
                                  const std::vector<std::vector<double>>& v0, double T, double dt) {
    if (!(beta1 > 0) || !(beta2 > 0)) throw InvalidArgument("consensus gains must be positive");
    if (!is_strongly_connected(g)) throw PreconditionError("consensus needs a strongly connected graph");
    if (!is_weight_balanced(g)) throw PreconditionError("consensus needs a weight-balanced graph");
    std::size_t K = step_count(T, dt);
    ErrorSystem es = assemble(plant, g, gains);
    const std::size_t n = es.n, N = es.N, nN = n * N;
    if (x0.size() != n) throw InvalidArgument("consensus: x0 has wrong size");
    if (xi0.size() != N || v0.size() != N) throw InvalidArgument("consensus: need xi0 and v0 for every agent");
    double scale = 1, vsum_max = 0;
    for (std::size_t c = 0; c < n; ++c) {
        double s = 0;
        for (std::size_t i = 0; i < N; ++i) {
            if (xi0[i].size() != n || v0[i].size() != n) throw InvalidArgument("consensus: wrong vector size");
            s += v0[i][c];
            scale = std::max(scale, std::abs(v0[i][c]));
        }
        vsum_max = std::max(vsum_max, std::abs(s));
    }
    if (vsum_max > 1e-12 * scale) throw PreconditionError("consensus needs sum_i v_i(0) = 0");

    // state (x, e, xi, v)
    const std::size_t dim = n + 3 * nN;
    const std::size_t ox = 0, oe = n, oxi = n + nN, ov = n + 2 * nN;
    Matrix ones = Matrix(N, 1, 1.0);
    Matrix In = Matrix::identity(n), InN = Matrix::identity(nN);
    Matrix Lk = kron(laplacian(g), In);
    Matrix M = Matrix::zeros(dim, dim);
    M.set_block(ox, ox, plant.A);
    M.set_block(oe, oe, es.A);
    // xhat = 1 (x) x + e and its derivative (1 (x) A) x + A_cal e
    Matrix lift = kron(ones, In);
    M.set_block(oxi, ox, beta1 * lift + kron(ones, plant.A));
    M.set_block(oxi, oe, beta1 * InN + es.A);
    M.set_block(oxi, oxi, -beta1 * InN - beta2 * Lk);
    M.set_block(oxi, ov, -1.0 * InN);
    M.set_block(ov, oxi, beta1 * beta2 * Lk);
    Matrix Phi = expm(M, dt);

    std::vector<double> z(dim, 0.0);
    auto e0 = initial_errors(x0, xhat0, N);
    for (std::size_t c = 0; c < n; ++c) z[ox + c] = x0[c];
    for (std::size_t j = 0; j < nN; ++j) z[oe + j] = e0[j];
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t c = 0; c < n; ++c) {
            z[oxi + i * n + c] = xi0[i][c];
            z[ov + i * n + c] = v0[i][c];
        }

    ConsensusTrace out;
    SimTrace& tr = out.observers;
    tr.n = n, tr.p = es.p, tr.N = N, tr.dt = dt;
    tr.integrator = "exact-discretization";
    tr.t.resize(K + 1);
    tr.x = Matrix(K + 1, n);
    tr.xhat = Matrix(K + 1, nN);
    tr.ebar = Matrix(K + 1, nN);
    tr.m = Matrix(K + 1, es.p * N);
    out.xi = Matrix(K + 1, nN);
    out.v = Matrix(K + 1, nN);
    out.delta = Matrix(K + 1, nN);
    out.max_v_sum = 0;

    auto record = [&](std::size_t k) {
        tr.t[k] = static_cast<double>(k) * dt;
        std::vector<double> e(z.begin() + oe, z.begin() + oxi);
        put_row(tr.ebar, k, matvec(es.C, e));
        std::vector<double> avg(n, 0.0);
        for (std::size_t c = 0; c < n; ++c) {
            tr.x(k, c) = z[ox + c];
            double vs = 0;
            for (std::size_t i = 0; i < N; ++i) {
                double xh = z[ox + c] + e[i * n + c];
                tr.xhat(k, i * n + c) = xh;
                avg[c] += xh / static_cast<double>(N);
                out.xi(k, i * n + c) = z[oxi + i * n + c];
                out.v(k, i * n + c) = z[ov + i * n + c];
                vs += z[ov + i * n + c];
            }
            out.max_v_sum = std::max(out.max_v_sum, std::abs(vs));
        }
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t c = 0; c < n; ++c) out.delta(k, i * n + c) = z[oxi + i * n + c] - avg[c];
    };
    record(0);
    for (std::size_t k = 0; k < K; ++k) {
        z = matvec(Phi, z);
        check_finite(z);
        record(k + 1);
    }
    return out;
}

void write_csv(std::ostream& os, const SimTrace& tr) {
    const std::size_t n = tr.n, p = tr.p, N = tr.N;
    os << "t";
    for (std::size_t c = 1; c <= n; ++c) os << ",x_" << c;
    for (std::size_t i = 1; i <= N; ++i)
        for (std::size_t c = 1; c <= n; ++c) os << ",xhat_" << i << "_" << c;
    for (std::size_t i = 1; i <= N; ++i)
        for (std::size_t c = 1; c <= n; ++c) os << ",ebar_" << i << "_" << c;
    for (std::size_t j = 1; j <= N; ++j)
        for (std::size_t c = 1; c <= p; ++c) os << ",m_" << j << "_" << c;
    os << "\n" << std::setprecision(17);
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        os << tr.t[k];
        for (std::size_t c = 0; c < n; ++c) os << "," << tr.x(k, c);
        for (std::size_t j = 0; j < n * N; ++j) os << "," << tr.xhat(k, j);
        for (std::size_t j = 0; j < n * N; ++j) os << "," << tr.ebar(k, j);
        for (std::size_t j = 0; j < p * N; ++j) os << "," << tr.m(k, j);
        os << "\n";
    }
}

}  // namespace netobs
