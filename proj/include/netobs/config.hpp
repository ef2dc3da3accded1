#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netobs/sim.hpp"
#include "netobs/synthesis.hpp"

namespace netobs {

// Schema violation in a configuration or design file.
class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

struct TaskConfig {
    std::optional<double> sigma, gamma_star, c1, c2;
    std::optional<std::size_t> N, agent;
    std::optional<std::string> objective;  // "global" or "local"
    std::optional<std::string> method;     // common-P, bmi-alternate, dilated, separated
    std::optional<NoiseSpec> noise;
    std::optional<std::vector<double>> x0;
    std::optional<std::vector<std::vector<double>>> xhat0, xi0, v0;
    std::optional<double> T, dt, transient_cut, beta1, beta2;
    std::optional<bool> consensus;
    std::optional<int> starts;
    std::optional<std::vector<std::size_t>> N_set;
    std::optional<std::vector<std::string>> tables;
    std::optional<std::vector<double>> r_grid;
};

struct OutputConfig {
    std::optional<std::string> directory;
    std::optional<std::vector<std::string>> formats;
};

struct CertificateSection {
    std::string method;
    double gamma = 0, lmi_bound = 0, abscissa = 0, margin = 0;
    std::map<std::string, Matrix> matrices;
};

struct RunConfig {
    std::optional<Plant> plant;
    std::optional<Digraph> graph;
    std::optional<GainSchedule> gains;
    std::optional<Matrix> K_L;
    TaskConfig task;
    OutputConfig output;
    std::optional<CertificateSection> certificate;
};

// Throws ConfigError on malformed input or unknown keys.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
// Doubles are written with round-trip precision.
std::string dump_config(const RunConfig& cfg);

// Design file contents for a synthesized design.
RunConfig design_file(const Plant& plant, const Design& d, const std::optional<Matrix>& K_L = std::nullopt);

}  // namespace netobs
