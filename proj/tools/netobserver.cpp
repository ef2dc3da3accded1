#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "netobs/config.hpp"
#include "netobs/sim.hpp"
#include "netobs/synthesis.hpp"

using namespace netobs;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kConfig = 2, kPrecondition = 3, kInfeasible = 4, kNumerical = 5 };

struct Run {
    RunConfig cfg;
    std::string out_dir;
    std::uint64_t seed = 0x5EED;
    unsigned jobs = 1;
};

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

std::string fmt(cplx z) {
    std::ostringstream os;
    os << std::setprecision(6) << z.real();
    if (z.imag() != 0) os << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
    return os.str();
}

std::string pct(double ours, double base) { return fmt(std::round(1000.0 * (1 - ours / base)) / 10.0); }

const Plant& need_plant(const Run& r) {
    if (!r.cfg.plant) throw ConfigError("config: this command needs a 'plant' section");
    return *r.cfg.plant;
}

double need_sigma(const Run& r) {
    if (!r.cfg.task.sigma) throw ConfigError("task.sigma is required");
    if (*r.cfg.task.sigma < 0) throw ConfigError("task.sigma must be nonnegative");
    return *r.cfg.task.sigma;
}

NormSpec objective_spec(const Run& r) {
    if (r.cfg.task.objective.value_or("global") == "global") return global_spec();
    return local_spec(r.cfg.task.agent.value_or(1));
}

FixedGraphOptions synthesis_options(const Run& r) {
    FixedGraphOptions o;
    o.seed = r.seed;
    o.jobs = r.jobs;
    if (r.cfg.task.starts) o.starts = *r.cfg.task.starts;
    if (r.cfg.K_L) o.luenberger_gain = r.cfg.K_L;
    return o;
}

// Writes a file into the output directory when one is configured.
void emit(const Run& r, const std::string& name, const std::string& content) {
    if (r.out_dir.empty()) return;
    fs::create_directories(r.out_dir);
    std::ofstream f(fs::path(r.out_dir) / name);
    if (!f) throw ConfigError("cannot write " + (fs::path(r.out_dir) / name).string());
    f << content;
}

bool wants(const Run& r, const std::string& format) {
    if (!r.cfg.output.formats) return true;
    for (const auto& f : *r.cfg.output.formats)
        if (f == format) return true;
    return false;
}

// The design under analysis: config graph and gains, or a lone Luenberger
// observer when only K_L is given.
std::pair<Digraph, GainSchedule> configured_design(const Run& r) {
    if (r.cfg.gains) {
        Digraph g = r.cfg.graph ? *r.cfg.graph : Digraph::all_to_all(r.cfg.gains->N());
        return {g, *r.cfg.gains};
    }
    if (r.cfg.K_L) return diagonal_design(need_plant(r), *r.cfg.K_L, 1);
    throw ConfigError("config: needs 'gains' or 'luenberger'");
}

std::string kl_line(const char* name, const std::function<KLBound()>& f) {
    try {
        KLBound b = f();
        return std::string("| ") + name + " | " + fmt(b.c) + " | " + fmt(b.rate) + " | " + fmt(b.gain) + " |\n";
    } catch (const PreconditionError& e) {
        return std::string("| ") + name + " | n/a | n/a | n/a |\n";
    }
}

int cmd_analyze(const Run& r) {
    const Plant& p = need_plant(r);
    auto [g, k] = configured_design(r);
    ErrorSystem es = assemble(p, g, k);
    if (!is_hurwitz(es.A)) throw PreconditionError("the error matrix is not Hurwitz");
    std::ostringstream md;
    md << "# Analysis\n\n";
    md << "- agents: " << es.N << ", n = " << es.n << ", p = " << es.p << "\n";
    md << "- convergence rate: " << fmt(convergence_rate(es)) << "\n";
    md << "- eigenvalues:";
    for (auto z : eig(es.A)) md << " " << fmt(z) << ";";
    md << "\n- mu(A): " << fmt(log_norm(es.A)) << "\n";
    md << "- global Hinf (common noise, average output): " << fmt(network_hinf(es, global_spec())) << "\n";
    for (std::size_t i = 1; i <= es.N; ++i)
        md << "- local Hinf at agent " << i << ": " << fmt(network_hinf(es, local_spec(i))) << "\n";
    md << "\n## KL bounds |ebar(t)| <= c exp(-rate t) |e(0)| + gain |m|\n\n| condition | c | rate | gain |\n|---|---|---|---|\n";
    md << kl_line("distinct-eig", [&] { return kl_bound(es, KLCondition::distinct_eig); });
    md << kl_line("dissipative", [&] { return kl_bound(es, KLCondition::dissipative); });
    md << kl_line("lyapunov", [&] { return kl_bound(es, KLCondition::lyapunov); });

    double m0 = 1.0;
    if (r.cfg.task.noise && r.cfg.task.noise->kind == NoiseKind::constant) m0 = r.cfg.task.noise->agents[0].offset;
    auto ss = steady_state_error(es, std::vector<double>(es.p * es.N, m0));
    md << "\n## Steady state under constant noise m = " << fmt(m0) << "\n\n";
    for (std::size_t j = 0; j < ss.size(); ++j) md << "- ebar[" << j + 1 << "] = " << fmt(ss[j]) << "\n";

    if (r.cfg.K_L) {
        const Matrix& KL = *r.cfg.K_L;
        Matrix AL = luenberger_matrix(p, KL, true);
        md << "\n## Luenberger comparison\n\n";
        md << "- Luenberger rate: " << fmt(-spectral_abscissa(AL)) << "\n";
        md << "- Luenberger Hinf: " << fmt(hinf_norm(luenberger_transfer(p, KL))) << "\n";
        auto ssl = steady_state_error(assemble(p, Digraph::self_only(1), GainSchedule(1, {KL})),
                                      std::vector<double>(p.p(), m0));
        md << "- Luenberger steady state:";
        for (double v : ssl) md << " " << fmt(v);
        md << "\n";
        try {
            auto ours = kl_bound(es, KLCondition::dissipative);
            auto base = luenberger_kl_bound(p, KL, KLCondition::dissipative);
            auto cmp = compare_bounds(ours, base, 1.0, 1.0);
            md << "- dissipative bounds: rate strictly better: " << (cmp.rate_strictly_better ? "yes" : "no")
               << ", gain strictly better: " << (cmp.gain_strictly_better ? "yes" : "no");
            if (cmp.crossover_t_star) md << ", envelope crossover t* = " << fmt(*cmp.crossover_t_star);
            md << "\n";
        } catch (const PreconditionError& e) {
            md << "- dissipative bound comparison not applicable: " << e.what() << "\n";
        }
    }
    std::cout << md.str();
    if (wants(r, "md")) emit(r, "analysis.md", md.str());
    return kOk;
}

Design run_design(const Run& r, const std::string& method) {
    const Plant& p = need_plant(r);
    double sigma = need_sigma(r);
    NormSpec spec = objective_spec(r);
    if (method == "separated") {
        std::size_t N = r.cfg.task.N ? *r.cfg.task.N : (r.cfg.graph ? r.cfg.graph->size() : 0);
        if (N == 0) throw ConfigError("task.N is required for the separated method");
        return design_separated(p, N, sigma);
    }
    Digraph g;
    if (r.cfg.graph) g = *r.cfg.graph;
    else if (r.cfg.task.N) g = Digraph::all_to_all(*r.cfg.task.N);
    else throw ConfigError("config: needs 'graph' or task.N");
    if (method == "common-P") return design_common_P(p, g, sigma, spec);
    if (method == "dilated") {
        if (r.cfg.task.r_grid) return design_dilated(p, g, sigma, spec, *r.cfg.task.r_grid);
        return design_dilated(p, g, sigma, spec);
    }
    return design_fixed_graph(p, g, sigma, spec, synthesis_options(r));
}

int cmd_design(const Run& r) {
    std::string method = r.cfg.task.method.value_or("bmi-alternate");
    Design d = run_design(r, method);
    const Plant& p = need_plant(r);
    double sigma = need_sigma(r);
    NormSpec spec = method == "separated" ? global_spec() : objective_spec(r);
    // independent re-verification
    ErrorSystem es = assemble(p, d.graph, d.gains);
    double alpha = spectral_abscissa(es.A);
    double gamma = network_hinf(es, spec);
    if (alpha > -sigma + 1e-9 * (1 + sigma)) throw InfeasibleError("design fails the rate re-check");
    std::ostringstream md;
    md << "# Design (" << d.method << ")\n\n";
    md << "- verified Hinf: " << fmt(gamma) << "\n";
    if (d.lmi_bound > 0) md << "- LMI bound: " << fmt(d.lmi_bound) << "\n";
    md << "- spectral abscissa: " << fmt(alpha) << " (required < " << fmt(-sigma) << ")\n";
    if (d.certificate.empty()) md << "- certificate: none (design verified directly)\n";
    else md << "- certificate margin: " << fmt(d.margin) << "\n";
    md << "- edges (trace D): " << d.graph.edge_count() << "\n";
    for (const auto& nm : d.certificate) md << "- certificate matrix " << nm.name << " (" << nm.value.rows() << "x" << nm.value.cols() << ")\n";
    md << "\n## Gains\n\n";
    for (std::size_t i = 1; i <= d.gains.N(); ++i)
        for (std::size_t j = 1; j <= d.gains.N(); ++j)
            if (d.graph.edge(j, i)) {
                md << "- K" << i << j << " =";
                for (double v : d.gains(i, j).data()) md << " " << fmt(v);
                md << "\n";
            }
    std::cout << md.str();
    if (wants(r, "md")) emit(r, "design.md", md.str());
    if (wants(r, "json")) emit(r, "design.json", dump_config(design_file(p, d, r.cfg.K_L)));
    return kOk;
}

std::string verdict_table(const std::vector<GraphVerdict>& v) {
    std::ostringstream os;
    os << "| # | trace D | adjacency | Hinf | verdict |\n|---|---|---|---|---|\n";
    for (std::size_t k = 0; k < v.size(); ++k) {
        os << "| " << k + 1 << " | " << v[k].trace << " | ";
        for (const auto& row : v[k].graph.to_rows()) {
            for (int e : row) os << e;
            os << " ";
        }
        os << "| " << (std::isfinite(v[k].gamma) ? fmt(v[k].gamma) : "infeasible") << " | "
           << (v[k].feasible ? "accepted" : "rejected") << " |\n";
    }
    return os.str();
}

int cmd_graphmin(const Run& r) {
    const Plant& p = need_plant(r);
    double sigma = need_sigma(r);
    if (!r.cfg.task.N) throw ConfigError("task.N is required");
    if (!r.cfg.task.gamma_star) throw ConfigError("task.gamma_star is required");
    std::ostringstream md;
    md << "# Graph minimization, N = " << *r.cfg.task.N << ", gamma* = " << fmt(*r.cfg.task.gamma_star) << "\n\n";
    try {
        auto res = minimize_edges(p, *r.cfg.task.N, sigma, *r.cfg.task.gamma_star, objective_spec(r), synthesis_options(r));
        md << "- minimal trace D: " << res.design.graph.edge_count() << "\n";
        md << "- verified Hinf: " << fmt(res.design.gamma) << "\n\n" << verdict_table(res.verdicts);
        std::cout << md.str();
        if (wants(r, "md")) emit(r, "graphmin.md", md.str());
        if (wants(r, "json")) emit(r, "design.json", dump_config(design_file(p, res.design, r.cfg.K_L)));
        return kOk;
    } catch (const EdgeSearchInfeasible& e) {
        md << "- no digraph reaches gamma*\n\n" << verdict_table(e.verdicts);
        std::cout << md.str();
        if (wants(r, "md")) emit(r, "graphmin.md", md.str());
        return kInfeasible;
    }
}

int cmd_simulate(const Run& r) {
    const Plant& p = need_plant(r);
    auto [g, k] = configured_design(r);
    const auto& t = r.cfg.task;
    NoiseSpec noise = t.noise.value_or(NoiseSpec::none());
    if (noise.kind == NoiseKind::white && noise.seed == 0) noise.seed = r.seed;
    std::vector<double> x0 = t.x0.value_or(std::vector<double>(p.n(), 0.0));
    std::vector<std::vector<double>> xhat0 = t.xhat0.value_or(std::vector<std::vector<double>>{std::vector<double>(p.n(), 0.0)});
    double T = t.T.value_or(20.0), dt = t.dt.value_or(1e-3), cut = t.transient_cut.value_or(5.0);
    std::ostringstream md;
    md << "# Simulation\n\n- horizon " << fmt(T) << " s, dt " << fmt(dt) << ", statistics over t >= " << fmt(cut)
       << "\n- noise: " << to_string(noise.kind) << "\n";
    SimTrace tr;
    if (t.consensus.value_or(false)) {
        if (noise.kind != NoiseKind::zero) throw ConfigError("the consensus layer is simulated without noise");
        std::size_t N = g.size();
        auto zero = std::vector<std::vector<double>>(N, std::vector<double>(p.n(), 0.0));
        auto ct = consensus_simulate(p, g, k, t.beta1.value_or(1.0), t.beta2.value_or(1.0), x0, xhat0,
                                     t.xi0.value_or(zero), t.v0.value_or(zero), T, dt);
        tr = ct.observers;
        md << "- consensus: max |delta| at T = " << fmt(ct.max_delta(ct.delta.rows() - 1))
           << ", max |sum v| = " << fmt(ct.max_v_sum) << "\n";
        if (wants(r, "csv")) {
            std::ostringstream cs;
            cs << "t";
            for (std::size_t i = 1; i <= N; ++i)
                for (std::size_t c = 1; c <= p.n(); ++c) cs << ",delta_" << i << "_" << c;
            cs << "\n" << std::setprecision(17);
            for (std::size_t s = 0; s < ct.delta.rows(); ++s) {
                cs << tr.t[s];
                for (std::size_t j = 0; j < ct.delta.cols(); ++j) cs << "," << ct.delta(s, j);
                cs << "\n";
            }
            emit(r, "consensus.csv", cs.str());
        }
    } else {
        tr = simulate(p, g, k, noise, x0, xhat0, T, dt);
    }
    auto st = error_stats(tr, cut);
    md << "\n| coordinate | mean ebar | std ebar |\n|---|---|---|\n";
    for (std::size_t j = 0; j < st.mean.size(); ++j)
        md << "| " << j / p.n() + 1 << "." << j % p.n() + 1 << " | " << fmt(st.mean[j]) << " | " << fmt(st.std[j]) << " |\n";
    if (r.cfg.K_L && !t.consensus.value_or(false)) {
        auto lu = simulate_luenberger(p, *r.cfg.K_L, noise, x0, xhat0.front(), T, dt);
        auto sl = error_stats(lu, cut);
        md << "\nLuenberger:";
        for (std::size_t j = 0; j < sl.mean.size(); ++j) md << " mean " << fmt(sl.mean[j]) << ", std " << fmt(sl.std[j]) << ";";
        md << "\n";
        auto cross = simulated_crossover(tr, lu);
        md << "- simulated crossover: " << (cross ? fmt(*cross) + " s" : std::string("none within the horizon")) << "\n";
        if (wants(r, "csv")) {
            std::ostringstream cs;
            write_csv(cs, lu);
            emit(r, "luenberger.csv", cs.str());
        }
    }
    std::cout << md.str();
    if (wants(r, "md")) emit(r, "simulation.md", md.str());
    if (wants(r, "csv")) {
        std::ostringstream cs;
        write_csv(cs, tr);
        emit(r, "trace.csv", cs.str());
    }
    return kOk;
}

// Report tables. Cells are tagged exact (closed form or analysis of a fixed
// design), verified (simulation of a fixed design) or best-effort (nonconvex
// synthesis, re-verified but not provably optimal).
struct Table {
    std::string title;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string markdown() const {
        std::ostringstream os;
        os << "## " << title << "\n\n|";
        for (const auto& h : header) os << " " << h << " |";
        os << "\n|";
        for (std::size_t k = 0; k < header.size(); ++k) os << "---|";
        os << "\n";
        for (const auto& row : rows) {
            os << "|";
            for (const auto& c : row) os << " " << c << " |";
            os << "\n";
        }
        return os.str() + "\n";
    }
    std::string csv() const {
        std::ostringstream os;
        for (std::size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << header[k];
        os << "\n";
        for (const auto& row : rows) {
            for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << row[k];
            os << "\n";
        }
        return os.str();
    }
};

std::string tag(double v, const char* kind) { return fmt(v) + " (" + kind + ")"; }

Table table_one(const Run& r, const Plant& p, const Matrix& KL) {
    auto [g, k] = configured_design(r);
    ErrorSystem es = assemble(p, g, k);
    const auto& t = r.cfg.task;
    std::vector<double> x0 = t.x0.value_or(std::vector<double>(p.n(), 3.0));
    auto xhat0 = t.xhat0.value_or(std::vector<std::vector<double>>{std::vector<double>(p.n(), 5.0)});
    double T = t.T.value_or(20.0), dt = t.dt.value_or(1e-3), cut = t.transient_cut.value_or(5.0);
    auto noise_lo = NoiseSpec::sinusoid(0.3, 0.3, 20), noise_hi = NoiseSpec::sinusoid(0.3, 0.3, 200);
    auto ours_lo = error_stats(simulate(p, g, k, noise_lo, x0, xhat0, T, dt), cut);
    auto ours_hi = error_stats(simulate(p, g, k, noise_hi, x0, xhat0, T, dt), cut);
    auto lu_lo = error_stats(simulate_luenberger(p, KL, noise_lo, x0, xhat0.front(), T, dt), cut);
    auto lu_hi = error_stats(simulate_luenberger(p, KL, noise_hi, x0, xhat0.front(), T, dt), cut);
    double h_ours = network_hinf(es, global_spec());
    double h_lu = hinf_norm(luenberger_transfer(p, KL));
    FixedGraphOptions o = synthesis_options(r);
    Design opt = design_fixed_graph(p, Digraph::all_to_all(g.size()), need_sigma(r), global_spec(), o);

    Table tb;
    tb.title = "Table I: estimation error under sinusoidal noise (agent 1, window t >= " + fmt(cut) + " s of " + fmt(T) + " s)";
    tb.header = {"observer", "low-freq mean", "low-freq std", "high-freq mean", "high-freq std", "Hinf of given gains",
                 "optimized Hinf"};
    tb.rows.push_back({"Luenberger", tag(lu_lo.mean[0], "verified"), tag(lu_lo.std[0], "verified"),
                       tag(lu_hi.mean[0], "verified"), tag(lu_hi.std[0], "verified"), tag(h_lu, "exact"),
                       tag(h_lu, "exact")});
    tb.rows.push_back({"interconnected", tag(ours_lo.mean[0], "verified"), tag(ours_lo.std[0], "verified"),
                       tag(ours_hi.mean[0], "verified"), tag(ours_hi.std[0], "verified"), tag(h_ours, "exact"),
                       tag(opt.gamma, "best-effort")});
    tb.rows.push_back({"improvement (%)", pct(ours_lo.mean[0], lu_lo.mean[0]), pct(ours_lo.std[0], lu_lo.std[0]),
                       pct(ours_hi.mean[0], lu_hi.mean[0]), pct(ours_hi.std[0], lu_hi.std[0]), pct(h_ours, h_lu),
                       pct(opt.gamma, h_lu)});
    return tb;
}

Table table_two(const Run& r, const Plant& p, double h_lu) {
    Table tb;
    tb.title = "Table II: local Hinf at agent 1 versus incoming non-self edges M1 (N = 6)";
    tb.header = {"M1", "local Hinf", "improvement (%)"};
    for (std::size_t M1 = 0; M1 <= 5; ++M1) {
        Matrix G = Matrix::identity(6);
        for (std::size_t j = 1; j <= M1; ++j) G(j, 0) = 1;
        Design d = design_fixed_graph(p, Digraph(G), need_sigma(r), local_spec(1), synthesis_options(r));
        tb.rows.push_back({std::to_string(M1), tag(d.gamma, M1 == 0 ? "exact" : "best-effort"), pct(d.gamma, h_lu)});
    }
    return tb;
}

Table table_three(const Run& r, const Plant& p, double h_lu) {
    Table tb;
    tb.title = "Table III: global and local Hinf versus agent count, all-to-all";
    tb.header = {"N", "global Hinf", "improvement (%)", "local Hinf (agent 1)", "improvement (%)"};
    AgentSweep sweep = sweep_agent_count(p, need_sigma(r), 1.0, 0.0, {1, 2, 3, 4, 5, 6, 7}, synthesis_options(r));
    for (std::size_t N = 1; N <= 7; ++N) {
        auto g = Digraph::all_to_all(N);
        const Design& dg = sweep.designs[N - 1];
        Design dl = design_fixed_graph(p, g, need_sigma(r), local_spec(1), synthesis_options(r));
        const char* kind = N == 1 ? "exact" : "best-effort";
        tb.rows.push_back({std::to_string(N), tag(dg.gamma, kind), pct(dg.gamma, h_lu), tag(dl.gamma, kind),
                           pct(dl.gamma, h_lu)});
    }
    return tb;
}

Table table_four(const Run& r, const Plant& p, double h_lu) {
    const std::size_t N = 3;
    Table tb;
    tb.title = "Table IV: best global Hinf per trace(D), N = 3";
    tb.header = {"trace D", "global Hinf", "improvement (%)", "best adjacency"};
    auto graphs = enumerate_digraphs(N, N * N);
    FixedGraphOptions o = synthesis_options(r);
    for (std::size_t trace = N; trace <= N * N; ++trace) {
        double best = INFINITY;
        std::string adj;
        for (const auto& g : graphs) {
            if (g.edge_count() != trace) continue;
            double gamma;
            try {
                gamma = design_fixed_graph(p, g, need_sigma(r), global_spec(), o).gamma;
            } catch (const InfeasibleError&) {
                continue;
            }
            if (gamma < best) {
                best = gamma;
                std::ostringstream os;
                for (const auto& row : g.to_rows()) {
                    for (int e : row) os << e;
                    os << " ";
                }
                adj = os.str();
            }
        }
        if (std::isfinite(best)) tb.rows.push_back({std::to_string(trace), tag(best, "best-effort"), pct(best, h_lu), adj});
    }
    return tb;
}

int cmd_report(const Run& r) {
    const Plant& p = need_plant(r);
    if (!r.cfg.K_L) throw ConfigError("report needs the 'luenberger' section");
    const Matrix& KL = *r.cfg.K_L;
    double h_lu = hinf_norm(luenberger_transfer(p, KL));
    std::vector<std::string> which = r.cfg.task.tables.value_or(std::vector<std::string>{"I", "II", "III", "IV"});
    std::ostringstream md;
    md << "# Report\n\nLuenberger baseline Hinf " << fmt(h_lu) << ", rate requirement sigma = " << fmt(need_sigma(r))
       << ", seed " << r.seed << ".\n"
       << "Cells: exact = closed form or analysis of a fixed design; verified = simulation of a fixed design; "
          "best-effort = nonconvex synthesis, re-verified but not provably optimal.\n\n";
    for (const auto& w : which) {
        Table tb;
        if (w == "I") tb = table_one(r, p, KL);
        else if (w == "II") tb = table_two(r, p, h_lu);
        else if (w == "III") tb = table_three(r, p, h_lu);
        else tb = table_four(r, p, h_lu);
        md << tb.markdown();
        if (wants(r, "csv")) emit(r, "table_" + w + ".csv", tb.csv());
    }
    std::cout << md.str();
    if (wants(r, "md")) emit(r, "report.md", md.str());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interconnected observer design and analysis"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    std::uint64_t seed = 0x5EED;
    unsigned jobs = 1;
    std::vector<std::pair<std::string, int (*)(const Run&)>> commands{{"analyze", cmd_analyze},
                                                                      {"design", cmd_design},
                                                                      {"graphmin", cmd_graphmin},
                                                                      {"simulate", cmd_simulate},
                                                                      {"report", cmd_report}};
    for (const auto& [name, fn] : commands) {
        CLI::App* sub = app.add_subcommand(name, name + " workflow");
        sub->add_option("--config", config_path, "configuration file (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "random seed (NETOBSERVER_SEED overrides)");
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }
    if (const char* env = std::getenv("NETOBSERVER_SEED")) {
        try {
            std::size_t used = 0;
            seed = std::stoull(env, &used, 0);
            if (env[used] != '\0') throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            std::cerr << "error: NETOBSERVER_SEED is not an unsigned integer\n";
            return kConfig;
        }
    }
    try {
        Run run;
        run.cfg = load_config(config_path);
        run.out_dir = !out_dir.empty() ? out_dir : run.cfg.output.directory.value_or("");
        run.seed = seed;
        run.jobs = jobs;
        for (const auto& [name, fn] : commands)
            if (app.got_subcommand(name)) return fn(run);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const PreconditionError& e) {
        std::cerr << "precondition failed: " << e.what() << "\n";
        return kPrecondition;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kInfeasible;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    }
    return kConfig;
}
