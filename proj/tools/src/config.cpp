#include "sasfm_cli/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <string_view>
#include <vector>

namespace sasfm::cli {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::string where(const std::filesystem::path& source, std::size_t line) {
    return source.string() + ":" + std::to_string(line) + ": ";
}

double parse_double(const std::string& text) {
    double value = 0.0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) throw ArgumentError("expected a number, got '" + text + "'");
    return value;
}

std::uint64_t parse_unsigned(const std::string& text) {
    std::uint64_t value = 0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) throw ArgumentError("expected a non-negative integer, got '" + text + "'");
    return value;
}

// Empirical bases need data-derived columns, so config files may only name the analytic kinds.
BasisKind basis_from_string(const std::string& name) {
    const BasisKind kind = basis_kind_from_string(name);
    if (kind == BasisKind::Empirical) throw ArgumentError("the empirical basis cannot be configured by name");
    return kind;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

SimSpec& sim_of(ExperimentConfig& c) {
    if (!c.sim) c.sim.emplace();
    return *c.sim;
}

const std::map<std::string, Setter>& schema() {
    static const std::map<std::string, Setter> table = {
        {"data", [](ExperimentConfig& c, const std::string& v) { c.data = v; }},
        {"out", [](ExperimentConfig& c, const std::string& v) { c.out = v; }},
        {"draws", [](ExperimentConfig& c, const std::string& v) { c.draws = v; }},
        {"truth", [](ExperimentConfig& c, const std::string& v) { c.truth = v; }},
        {"start", [](ExperimentConfig& c, const std::string& v) { c.start = start_method_from_string(v); }},

        {"model.fixed_count", [](ExperimentConfig& c, const std::string& v) { c.model.fixed_count = parse_unsigned(v); }},
        {"model.random_count", [](ExperimentConfig& c, const std::string& v) { c.model.random_count = parse_unsigned(v); }},
        {"model.fixed_basis", [](ExperimentConfig& c, const std::string& v) { c.model.fixed_basis = basis_from_string(v); }},
        {"model.random_basis", [](ExperimentConfig& c, const std::string& v) { c.model.random_basis = basis_from_string(v); }},
        {"model.prior_model", [](ExperimentConfig& c, const std::string& v) { c.model.prior_model = prior_model_from_string(v); }},
        {"model.phase_knots", [](ExperimentConfig& c, const std::string& v) { c.model.phase_knots = parse_unsigned(v); }},
        {"model.theta_gamma", [](ExperimentConfig& c, const std::string& v) { c.model.theta_gamma = parse_double(v); }},
        {"model.prior_var_a", [](ExperimentConfig& c, const std::string& v) { c.model.prior_var_a = parse_double(v); }},
        {"model.ig_shape", [](ExperimentConfig& c, const std::string& v) { c.model.ig_shape = parse_double(v); }},
        {"model.ig_scale", [](ExperimentConfig& c, const std::string& v) { c.model.ig_scale = parse_double(v); }},

        {"proposal.delta", [](ExperimentConfig& c, const std::string& v) { c.proposal.delta = parse_double(v); }},
        {"proposal.alpha_prop", [](ExperimentConfig& c, const std::string& v) { c.proposal.alpha_prop = parse_double(v); }},
        {"proposal.tau2_sigma", [](ExperimentConfig& c, const std::string& v) { c.proposal.tau2_sigma = parse_double(v); }},
        {"proposal.tau2_sigma_c", [](ExperimentConfig& c, const std::string& v) { c.proposal.tau2_sigma_c = parse_double(v); }},
        {"proposal.adapt_interval", [](ExperimentConfig& c, const std::string& v) { c.proposal.adapt_interval = parse_unsigned(v); }},
        {"proposal.target_accept_scalar", [](ExperimentConfig& c, const std::string& v) { c.proposal.target_accept_scalar = parse_double(v); }},
        {"proposal.target_accept_vector", [](ExperimentConfig& c, const std::string& v) { c.proposal.target_accept_vector = parse_double(v); }},

        {"chain.total", [](ExperimentConfig& c, const std::string& v) { c.chain.total = parse_unsigned(v); }},
        {"chain.burn_in", [](ExperimentConfig& c, const std::string& v) { c.chain.burn_in = parse_unsigned(v); }},
        {"chain.thin", [](ExperimentConfig& c, const std::string& v) { c.chain.thin = parse_unsigned(v); }},
        {"chain.seed", [](ExperimentConfig& c, const std::string& v) { c.chain.seed = parse_unsigned(v); }},

        {"sim.generator", [](ExperimentConfig& c, const std::string& v) { sim_of(c).generator = generator_from_string(v); }},
        {"sim.n", [](ExperimentConfig& c, const std::string& v) { sim_of(c).n = parse_unsigned(v); }},
        {"sim.T", [](ExperimentConfig& c, const std::string& v) { sim_of(c).T = parse_unsigned(v); }},
        {"sim.mu_id", [](ExperimentConfig& c, const std::string& v) { sim_of(c).mu_id = static_cast<int>(parse_unsigned(v)); }},
        {"sim.sigma2", [](ExperimentConfig& c, const std::string& v) { sim_of(c).sigma2 = parse_double(v); }},
        {"sim.sigma_c2", [](ExperimentConfig& c, const std::string& v) { sim_of(c).sigma_c2 = parse_double(v); }},
        {"sim.seed", [](ExperimentConfig& c, const std::string& v) { sim_of(c).seed = parse_unsigned(v); }},

        {"fpca.iterations", [](ExperimentConfig& c, const std::string& v) { c.fpca.iterations = parse_unsigned(v); }},
        {"fpca.family", [](ExperimentConfig& c, const std::string& v) { c.fpca.family = align_family_from_string(v); }},
        {"fpca.components", [](ExperimentConfig& c, const std::string& v) { c.fpca.components = parse_unsigned(v); }},
        {"fpca.energy_fraction", [](ExperimentConfig& c, const std::string& v) { c.fpca.energy_fraction = parse_double(v); }},
        {"fpca.sweep_max", [](ExperimentConfig& c, const std::string& v) { c.fpca.sweep_max = parse_unsigned(v); }},
        {"fpca.sweep_basis", [](ExperimentConfig& c, const std::string& v) { c.fpca.sweep_basis = basis_from_string(v); }},

        {"summarize.trace_observation", [](ExperimentConfig& c, const std::string& v) { c.trace_observation = parse_unsigned(v); }},
    };
    return table;
}

}  // namespace

const char* to_string(StartMethod method) {
    return method == StartMethod::Aligned ? "aligned" : "identity";
}

StartMethod start_method_from_string(const std::string& name) {
    if (name == "aligned") return StartMethod::Aligned;
    if (name == "identity") return StartMethod::Identity;
    throw ArgumentError("unknown start method '" + name + "' (aligned, identity)");
}

KeyValueFile KeyValueFile::parse(const std::string& text, const std::filesystem::path& source) {
    KeyValueFile file;
    file.source = source;
    std::istringstream in(text);
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string content = trim(std::string_view(raw).substr(0, hash));
        if (content.empty()) continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos) throw ConfigError(where(source, line) + "expected 'key = value'");
        std::string key = trim(std::string_view(content).substr(0, eq));
        std::string value = trim(std::string_view(content).substr(eq + 1));
        if (key.empty()) throw ConfigError(where(source, line) + "empty key");
        if (value.empty()) throw ConfigError(where(source, line) + "empty value for '" + key + "'");
        if (file.entries.count(key))
            throw ConfigError(where(source, line) + "duplicate key '" + key + "' (first on line " +
                              std::to_string(file.entries[key].line) + ")");
        file.entries[key] = {std::move(value), line};
    }
    return file;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str(), path);
}

ExperimentConfig ExperimentConfig::from(const KeyValueFile& file) {
    ExperimentConfig config;
    config.source = file.source;
    const auto& table = schema();
    for (const auto& [key, entry] : file.entries) {
        const auto it = table.find(key);
        if (it == table.end()) throw ConfigError(where(file.source, entry.line) + "unknown key '" + key + "'");
        try {
            it->second(config, entry.value);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(where(file.source, entry.line) + key + ": " + e.what());
        }
    }
    const auto line_of = [&](const char* key) {
        const auto it = file.entries.find(key);
        return it == file.entries.end() ? std::size_t{0} : it->second.line;
    };
    const auto check = [&](const char* first_key, auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            throw ConfigError(where(file.source, line_of(first_key)) + e.what());
        }
    };
    check("model.fixed_count", [&] { config.model.validate(); });
    check("proposal.delta", [&] { config.proposal.validate(); });
    check("chain.total", [&] { config.chain.validate(); });
    if (config.sim) check("sim.generator", [&] { config.sim->validate(); });
    if (!(config.fpca.energy_fraction > 0.0 && config.fpca.energy_fraction <= 1.0))
        throw ConfigError(where(file.source, line_of("fpca.energy_fraction")) + "energy_fraction must be in (0,1]");
    if (config.fpca.sweep_max == 0)
        throw ConfigError(where(file.source, line_of("fpca.sweep_max")) + "sweep_max must be positive");
    return config;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    return from(KeyValueFile::load(path));
}

void ExperimentConfig::require_keys(const KeyValueFile& file, const std::string& command) {
    std::vector<std::string> keys;
    if (command == "simulate") keys = {"sim.generator", "sim.n", "sim.T"};
    else if (command == "fit" || command == "fpca" || command == "summarize") keys = {"data"};
    for (const auto& key : keys)
        if (!file.entries.count(key))
            throw ConfigError(file.source.string() + ": missing required key '" + key + "' for " + command);
}

}  // namespace sasfm::cli
