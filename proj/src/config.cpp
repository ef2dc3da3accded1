#include "netobs/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace netobs {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(where, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) fail(where, "unknown key '" + it.key() + "'");
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "expected a number");
    double v = j.get<double>();
    if (!std::isfinite(v)) fail(where, "non-finite number");
    return v;
}

std::size_t count(const json& j, const std::string& where) {
    if (!j.is_number_integer() || j.get<long long>() < 0) fail(where, "expected a nonnegative integer");
    return j.get<std::size_t>();
}

std::string text(const json& j, const std::string& where) {
    if (!j.is_string()) fail(where, "expected a string");
    return j.get<std::string>();
}

std::vector<double> vec(const json& j, const std::string& where) {
    if (!j.is_array()) fail(where, "expected an array");
    std::vector<double> v;
    for (std::size_t k = 0; k < j.size(); ++k) v.push_back(number(j[k], where + "[" + std::to_string(k) + "]"));
    return v;
}

std::vector<std::vector<double>> vecs(const json& j, const std::string& where) {
    if (!j.is_array()) fail(where, "expected an array of arrays");
    std::vector<std::vector<double>> v;
    for (std::size_t k = 0; k < j.size(); ++k) v.push_back(vec(j[k], where + "[" + std::to_string(k) + "]"));
    return v;
}

Matrix matrix(const json& j, const std::string& where) {
    auto rows = vecs(j, where);
    if (rows.empty() || rows[0].empty()) fail(where, "empty matrix");
    for (const auto& r : rows)
        if (r.size() != rows[0].size()) fail(where, "ragged matrix");
    return Matrix::from_rows(rows);
}

json to_json(const Matrix& m) { return json(m.to_rows()); }

NoiseKind noise_kind(const std::string& s, const std::string& where) {
    for (auto k : {NoiseKind::zero, NoiseKind::constant, NoiseKind::sinusoid, NoiseKind::white})
        if (s == to_string(k)) return k;
    fail(where, "unknown noise kind '" + s + "'");
}

NoiseChannel channel(const json& j, const std::string& where) {
    only_keys(j, where, {"offset", "amplitude", "omega"});
    NoiseChannel c;
    if (j.contains("offset")) c.offset = number(j["offset"], where + ".offset");
    if (j.contains("amplitude")) c.amplitude = number(j["amplitude"], where + ".amplitude");
    if (j.contains("omega")) c.omega = number(j["omega"], where + ".omega");
    return c;
}

NoiseSpec noise(const json& j, const std::string& where) {
    only_keys(j, where, {"kind", "sharing", "seed", "hold", "agents", "offset", "amplitude", "omega"});
    NoiseSpec s;
    if (!j.contains("kind")) fail(where, "missing 'kind'");
    s.kind = noise_kind(text(j["kind"], where + ".kind"), where + ".kind");
    if (j.contains("sharing")) {
        auto sh = text(j["sharing"], where + ".sharing");
        if (sh == "common") s.sharing = NoiseSharing::common;
        else if (sh == "independent") s.sharing = NoiseSharing::independent;
        else fail(where + ".sharing", "expected 'common' or 'independent'");
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
            fail(where + ".seed", "expected an unsigned integer");
        s.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("hold")) {
        s.hold = number(j["hold"], where + ".hold");
        if (!(s.hold > 0)) fail(where + ".hold", "must be positive");
    }
    bool flat = j.contains("offset") || j.contains("amplitude") || j.contains("omega");
    if (flat && j.contains("agents")) fail(where, "give either 'agents' or offset/amplitude/omega");
    if (j.contains("agents")) {
        if (!j["agents"].is_array() || j["agents"].empty()) fail(where + ".agents", "expected a nonempty array");
        s.agents.clear();
        for (std::size_t k = 0; k < j["agents"].size(); ++k)
            s.agents.push_back(channel(j["agents"][k], where + ".agents[" + std::to_string(k) + "]"));
    } else {
        json c = json::object();
        for (const char* key : {"offset", "amplitude", "omega"})
            if (j.contains(key)) c[key] = j[key];
        s.agents = {channel(c, where)};
    }
    return s;
}

json noise_json(const NoiseSpec& s) {
    json j;
    j["kind"] = to_string(s.kind);
    j["sharing"] = s.sharing == NoiseSharing::common ? "common" : "independent";
    j["seed"] = s.seed;
    j["hold"] = s.hold;
    j["agents"] = json::array();
    for (const auto& c : s.agents) j["agents"].push_back({{"offset", c.offset}, {"amplitude", c.amplitude}, {"omega", c.omega}});
    return j;
}

TaskConfig task(const json& j) {
    const std::string w = "task";
    only_keys(j, w, {"sigma", "gamma_star", "c1", "c2", "N", "agent", "objective", "method", "noise", "x0", "xhat0",
                     "xi0", "v0", "T", "dt", "transient_cut", "beta1", "beta2", "consensus", "starts", "N_set",
                     "tables", "r_grid"});
    TaskConfig t;
    auto num = [&](const char* k, std::optional<double>& out) {
        if (j.contains(k)) out = number(j[k], w + "." + k);
    };
    num("sigma", t.sigma);
    num("gamma_star", t.gamma_star);
    num("c1", t.c1);
    num("c2", t.c2);
    num("T", t.T);
    num("dt", t.dt);
    num("transient_cut", t.transient_cut);
    num("beta1", t.beta1);
    num("beta2", t.beta2);
    if (j.contains("N")) t.N = count(j["N"], w + ".N");
    if (j.contains("agent")) t.agent = count(j["agent"], w + ".agent");
    if (j.contains("objective")) {
        t.objective = text(j["objective"], w + ".objective");
        if (*t.objective != "global" && *t.objective != "local") fail(w + ".objective", "expected 'global' or 'local'");
    }
    if (j.contains("method")) {
        t.method = text(j["method"], w + ".method");
        static const std::set<std::string> methods{"common-P", "bmi-alternate", "dilated", "separated"};
        if (!methods.count(*t.method)) fail(w + ".method", "unknown method '" + *t.method + "'");
    }
    if (j.contains("noise")) t.noise = noise(j["noise"], w + ".noise");
    if (j.contains("x0")) t.x0 = vec(j["x0"], w + ".x0");
    if (j.contains("xhat0")) t.xhat0 = vecs(j["xhat0"], w + ".xhat0");
    if (j.contains("xi0")) t.xi0 = vecs(j["xi0"], w + ".xi0");
    if (j.contains("v0")) t.v0 = vecs(j["v0"], w + ".v0");
    if (j.contains("consensus")) {
        if (!j["consensus"].is_boolean()) fail(w + ".consensus", "expected a boolean");
        t.consensus = j["consensus"].get<bool>();
    }
    if (j.contains("starts")) t.starts = static_cast<int>(count(j["starts"], w + ".starts"));
    if (j.contains("N_set")) {
        if (!j["N_set"].is_array()) fail(w + ".N_set", "expected an array");
        std::vector<std::size_t> v;
        for (const auto& e : j["N_set"]) v.push_back(count(e, w + ".N_set"));
        t.N_set = v;
    }
    if (j.contains("tables")) {
        if (!j["tables"].is_array()) fail(w + ".tables", "expected an array");
        std::vector<std::string> v;
        for (const auto& e : j["tables"]) {
            auto s = text(e, w + ".tables");
            if (s != "I" && s != "II" && s != "III" && s != "IV") fail(w + ".tables", "unknown table '" + s + "'");
            v.push_back(s);
        }
        t.tables = v;
    }
    if (j.contains("r_grid")) t.r_grid = vec(j["r_grid"], w + ".r_grid");
    return t;
}

json task_json(const TaskConfig& t) {
    json j = json::object();
    auto put = [&](const char* k, const auto& opt) {
        if (opt) j[k] = *opt;
    };
    put("sigma", t.sigma);
    put("gamma_star", t.gamma_star);
    put("c1", t.c1);
    put("c2", t.c2);
    put("N", t.N);
    put("agent", t.agent);
    put("objective", t.objective);
    put("method", t.method);
    if (t.noise) j["noise"] = noise_json(*t.noise);
    put("x0", t.x0);
    put("xhat0", t.xhat0);
    put("xi0", t.xi0);
    put("v0", t.v0);
    put("T", t.T);
    put("dt", t.dt);
    put("transient_cut", t.transient_cut);
    put("beta1", t.beta1);
    put("beta2", t.beta2);
    put("consensus", t.consensus);
    put("starts", t.starts);
    put("N_set", t.N_set);
    put("tables", t.tables);
    put("r_grid", t.r_grid);
    return j;
}

}  // namespace

RunConfig parse_config(const std::string& src) {
    json j;
    try {
        j = json::parse(src);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    only_keys(j, "config", {"plant", "graph", "gains", "luenberger", "task", "output", "certificate"});
    RunConfig c;
    try {
        if (j.contains("plant")) {
            only_keys(j["plant"], "plant", {"A", "C"});
            if (!j["plant"].contains("A") || !j["plant"].contains("C")) fail("plant", "needs A and C");
            c.plant = Plant(matrix(j["plant"]["A"], "plant.A"), matrix(j["plant"]["C"], "plant.C"));
        }
        if (j.contains("graph")) {
            only_keys(j["graph"], "graph", {"adjacency"});
            if (!j["graph"].contains("adjacency")) fail("graph", "needs adjacency");
            c.graph = Digraph(matrix(j["graph"]["adjacency"], "graph.adjacency"));
        }
        if (j.contains("gains")) {
            only_keys(j["gains"], "gains", {"blocks"});
            const json& b = j["gains"].value("blocks", json());
            if (!b.is_array() || b.empty()) fail("gains.blocks", "expected an N x N array of matrices");
            std::size_t N = b.size();
            std::vector<Matrix> blocks;
            for (std::size_t i = 0; i < N; ++i) {
                if (!b[i].is_array() || b[i].size() != N) fail("gains.blocks", "expected an N x N array of matrices");
                for (std::size_t k = 0; k < N; ++k)
                    blocks.push_back(matrix(b[i][k], "gains.blocks[" + std::to_string(i) + "][" + std::to_string(k) + "]"));
            }
            c.gains = GainSchedule(N, blocks);
        }
        if (j.contains("luenberger")) {
            only_keys(j["luenberger"], "luenberger", {"K_L"});
            if (!j["luenberger"].contains("K_L")) fail("luenberger", "needs K_L");
            c.K_L = matrix(j["luenberger"]["K_L"], "luenberger.K_L");
        }
        if (j.contains("task")) c.task = task(j["task"]);
        if (j.contains("output")) {
            only_keys(j["output"], "output", {"directory", "formats"});
            if (j["output"].contains("directory")) c.output.directory = text(j["output"]["directory"], "output.directory");
            if (j["output"].contains("formats")) {
                std::vector<std::string> f;
                if (!j["output"]["formats"].is_array()) fail("output.formats", "expected an array");
                for (const auto& e : j["output"]["formats"]) {
                    auto s = text(e, "output.formats");
                    if (s != "csv" && s != "md" && s != "json") fail("output.formats", "unknown format '" + s + "'");
                    f.push_back(s);
                }
                c.output.formats = f;
            }
        }
        if (j.contains("certificate")) {
            const json& s = j["certificate"];
            only_keys(s, "certificate", {"method", "gamma", "lmi_bound", "abscissa", "margin", "matrices"});
            CertificateSection cs;
            if (s.contains("method")) cs.method = text(s["method"], "certificate.method");
            if (s.contains("gamma")) cs.gamma = number(s["gamma"], "certificate.gamma");
            if (s.contains("lmi_bound")) cs.lmi_bound = number(s["lmi_bound"], "certificate.lmi_bound");
            if (s.contains("abscissa")) cs.abscissa = number(s["abscissa"], "certificate.abscissa");
            if (s.contains("margin")) cs.margin = number(s["margin"], "certificate.margin");
            if (s.contains("matrices")) {
                if (!s["matrices"].is_object()) fail("certificate.matrices", "expected an object");
                for (auto it = s["matrices"].begin(); it != s["matrices"].end(); ++it)
                    cs.matrices.emplace(it.key(), matrix(it.value(), "certificate.matrices." + it.key()));
            }
            c.certificate = cs;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (c.plant && c.K_L && (c.K_L->rows() != c.plant->n() || c.K_L->cols() != c.plant->p()))
        throw ConfigError("luenberger.K_L: expected an n x p matrix");
    if (c.gains && c.plant && (c.gains->n() != c.plant->n() || c.gains->p() != c.plant->p()))
        throw ConfigError("gains: blocks must be n x p");
    if (c.gains && c.graph && c.gains->N() != c.graph->size())
        throw ConfigError("gains: block grid size differs from the graph");
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c) {
    json j = json::object();
    if (c.plant) j["plant"] = {{"A", to_json(c.plant->A)}, {"C", to_json(c.plant->C)}};
    if (c.graph) j["graph"] = {{"adjacency", c.graph->to_rows()}};
    if (c.gains) {
        json rows = json::array();
        for (std::size_t i = 1; i <= c.gains->N(); ++i) {
            json r = json::array();
            for (std::size_t k = 1; k <= c.gains->N(); ++k) r.push_back(to_json((*c.gains)(i, k)));
            rows.push_back(r);
        }
        j["gains"] = {{"blocks", rows}};
    }
    if (c.K_L) j["luenberger"] = {{"K_L", to_json(*c.K_L)}};
    json t = task_json(c.task);
    if (!t.empty()) j["task"] = t;
    json o = json::object();
    if (c.output.directory) o["directory"] = *c.output.directory;
    if (c.output.formats) o["formats"] = *c.output.formats;
    if (!o.empty()) j["output"] = o;
    if (c.certificate) {
        const auto& s = *c.certificate;
        json m = json::object();
        for (const auto& [k, v] : s.matrices) m[k] = to_json(v);
        j["certificate"] = {{"method", s.method}, {"gamma", s.gamma},   {"lmi_bound", s.lmi_bound},
                            {"abscissa", s.abscissa}, {"margin", s.margin}, {"matrices", m}};
    }
    return j.dump(2) + "\n";
}

RunConfig design_file(const Plant& plant, const Design& d, const std::optional<Matrix>& K_L) {
    RunConfig c;
    c.plant = plant;
    c.graph = d.graph;
    c.gains = d.gains;
    c.K_L = K_L;
    CertificateSection s;
    s.method = d.method;
    s.gamma = d.gamma;
    s.lmi_bound = d.lmi_bound;
    s.abscissa = d.abscissa;
    s.margin = d.margin;
    for (const auto& nm : d.certificate) s.matrices.emplace(nm.name, nm.value);
    c.certificate = s;
    return c;
}

}  // namespace netobs
