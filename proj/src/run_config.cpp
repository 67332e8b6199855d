#include "cmabnas/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cmabnas/eval_bridge.hpp"

namespace cmabnas {

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

template<class T>
T parse_number(const std::string& key, std::string_view value)
{
    T out{};
    const auto v = trim(value);
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) {
        throw ConfigError("invalid value '" + std::string(value) + "' for " + key);
    }
    return out;
}

std::string format_double(double d)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

std::vector<std::string> split_words(std::string_view value)
{
    std::vector<std::string> out;
    std::istringstream in{std::string(value)};
    std::string w;
    while (in >> w) {
        out.push_back(w);
    }
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters()
{
    static const std::map<std::string, Setter, std::less<>> table = {
        {"space.nodes", [](RunConfig& c, const std::string& k,
                           std::string_view v) { c.space.nodes = parse_number<std::size_t>(k, v); }},
        {"space.operations", [](RunConfig& c, const std::string&,
                                std::string_view v) { c.space.operations = parse_operations(v); }},
        {"engine.epochs", [](RunConfig& c, const std::string& k,
                             std::string_view v) { c.engine.epochs = parse_number<std::size_t>(k, v); }},
        {"engine.batch", [](RunConfig& c, const std::string& k,
                            std::string_view v) { c.engine.batch = parse_number<std::size_t>(k, v); }},
        {"engine.l_sim", [](RunConfig& c, const std::string& k,
                            std::string_view v) { c.engine.sim_iterations = parse_number<std::size_t>(k, v); }},
        {"engine.l_best", [](RunConfig& c, const std::string& k,
                             std::string_view v) { c.engine.best_iterations = parse_number<std::size_t>(k, v); }},
        {"engine.alpha0", [](RunConfig& c, const std::string& k,
                             std::string_view v) { c.engine.alpha0 = parse_number<double>(k, v); }},
        {"engine.alpha_decay", [](RunConfig& c, const std::string& k,
                                  std::string_view v) { c.engine.alpha_decay = parse_number<double>(k, v); }},
        {"engine.top_k", [](RunConfig& c, const std::string& k,
                            std::string_view v) { c.engine.top_k = parse_number<std::size_t>(k, v); }},
        {"engine.warmup", [](RunConfig& c, const std::string& k,
                             std::string_view v) { c.engine.warmup_epochs = parse_number<std::size_t>(k, v); }},
        {"engine.seed", [](RunConfig& c, const std::string& k,
                           std::string_view v) { c.engine.seed = parse_number<std::uint64_t>(k, v); }},
        {"engine.policy", [](RunConfig& c, const std::string& k, std::string_view v) {
             try {
                 c.engine.policy = parse_policy(trim(v));
             } catch (const std::invalid_argument& e) {
                 throw ConfigError(k + ": " + e.what());
             }
         }},
        {"engine.sampler", [](RunConfig& c, const std::string& k, std::string_view v) {
             try {
                 c.engine.sampler = parse_sampler(trim(v));
             } catch (const std::invalid_argument& e) {
                 throw ConfigError(k + ": " + e.what());
             }
         }},
        {"engine.parallel_width", [](RunConfig& c, const std::string& k,
                                     std::string_view v) { c.engine.parallel_width = parse_number<std::size_t>(k, v); }},
        {"oracle.kind", [](RunConfig& c, const std::string&, std::string_view v) { c.oracle.kind = trim(v); }},
        {"oracle.seed", [](RunConfig& c, const std::string& k,
                           std::string_view v) { c.oracle.seed = parse_number<std::uint64_t>(k, v); }},
        {"oracle.noise_sigma", [](RunConfig& c, const std::string& k,
                                  std::string_view v) { c.oracle.noise_sigma = parse_number<double>(k, v); }},
        {"oracle.epsilon", [](RunConfig& c, const std::string& k,
                              std::string_view v) { c.oracle.epsilon = parse_number<double>(k, v); }},
        {"oracle.coupling_seed", [](RunConfig& c, const std::string& k,
                                    std::string_view v) { c.oracle.coupling_seed = parse_number<std::uint64_t>(k, v); }},
        {"oracle.table", [](RunConfig& c, const std::string&, std::string_view v) { c.oracle.table = trim(v); }},
        {"oracle.command", [](RunConfig& c, const std::string&,
                              std::string_view v) { c.oracle.command = split_words(v); }},
        {"oracle.workers", [](RunConfig& c, const std::string& k,
                              std::string_view v) { c.oracle.workers = parse_number<std::size_t>(k, v); }},
        {"oracle.timeout_ms", [](RunConfig& c, const std::string& k, std::string_view v) {
             c.oracle.timeout = std::chrono::milliseconds(parse_number<std::int64_t>(k, v));
         }},
        {"oracle.curve_rate", [](RunConfig& c, const std::string& k,
                                 std::string_view v) { c.oracle.curve_rate = parse_number<double>(k, v); }},
        {"output.directory", [](RunConfig& c, const std::string&,
                                std::string_view v) { c.output_dir = trim(v); }},
    };
    return table;
}

void set_value(RunConfig& config, const std::string& key, std::string_view value)
{
    const auto it = setters().find(key);
    if (it == setters().end()) {
        throw ConfigError("unknown key '" + key + "'");
    }
    it->second(config, key, value);
}

} // namespace

OperationSet parse_operations(std::string_view value)
{
    const std::string v = trim(value);
    if (v == "standard") {
        return OperationSet::standard();
    }
    if (v == "s2") {
        return OperationSet::s2();
    }
    if (v == "s4") {
        return OperationSet::s4();
    }
    std::vector<std::string> names;
    std::size_t start = 0;
    while (start <= v.size()) {
        auto end = v.find(',', start);
        if (end == std::string::npos) {
            end = v.size();
        }
        names.push_back(trim(std::string_view(v).substr(start, end - start)));
        start = end + 1;
    }
    try {
        return OperationSet(std::move(names));
    } catch (const SearchSpaceError& e) {
        throw ConfigError(std::string("space.operations: ") + e.what());
    }
}

RunConfig parse_run_config(std::string_view text)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
    }

    RunConfig config;
    // Empty sections never reach the tree, so headers are found by scanning.
    bool have_oracle = false;
    std::istringstream lines{std::string(text)};
    for (std::string line; std::getline(lines, line);) {
        have_oracle = have_oracle || trim(line) == "[oracle]";
    }
    for (const auto& [section, body] : tree) {
        if (body.empty()) {
            throw ConfigError("key '" + section + "' outside of a section");
        }
        if (section != "space" && section != "engine" && section != "oracle" && section != "output") {
            throw ConfigError("unknown section [" + section + "]");
        }
        for (const auto& [key, value] : body) {
            set_value(config, section + "." + key, value.data());
        }
    }
    if (!have_oracle) {
        throw ConfigError("missing [oracle] section");
    }
    validate_run_config(config);
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file '" + path.string() + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return parse_run_config(text.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void apply_override(RunConfig& config, std::string_view assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("override '" + std::string(assignment) + "' is not of the form section.key=value");
    }
    set_value(config, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void validate_run_config(const RunConfig& config)
{
    try {
        config.space.validate();
        config.engine.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const auto& o = config.oracle;
    if (o.kind != "separable" && o.kind != "coupled" && o.kind != "tabular" && o.kind != "external") {
        throw ConfigError("oracle.kind must be separable, coupled, tabular or external (got '" + o.kind + "')");
    }
    if (!(o.noise_sigma >= 0.0)) {
        throw ConfigError("oracle.noise_sigma must be >= 0");
    }
    if (o.kind == "tabular" && o.table.empty()) {
        throw ConfigError("oracle.table is required for a tabular oracle");
    }
    if (o.kind == "external" && o.command.empty()) {
        throw ConfigError("oracle.command is required for an external oracle");
    }
    if (o.workers < 1) {
        throw ConfigError("oracle.workers must be >= 1");
    }
    if (o.timeout.count() <= 0) {
        throw ConfigError("oracle.timeout_ms must be positive");
    }
    if (!(o.curve_rate >= 0.0)) {
        throw ConfigError("oracle.curve_rate must be >= 0");
    }
}

std::string format_run_config(const RunConfig& c)
{
    std::ostringstream out;
    out << "[space]\n";
    out << "nodes = " << c.space.nodes << '\n';
    out << "operations = ";
    for (std::size_t i = 0; i < c.space.operations.size(); ++i) {
        out << (i ? ", " : "") << c.space.operations.name(i);
    }
    out << "\n\n[engine]\n";
    out << "epochs = " << c.engine.epochs << '\n';
    out << "batch = " << c.engine.batch << '\n';
    out << "l_sim = " << c.engine.sim_iterations << '\n';
    out << "l_best = " << c.engine.best_iterations << '\n';
    out << "alpha0 = " << format_double(c.engine.alpha0) << '\n';
    out << "alpha_decay = " << format_double(c.engine.alpha_decay) << '\n';
    out << "top_k = " << c.engine.top_k << '\n';
    out << "warmup = " << c.engine.warmup_epochs << '\n';
    out << "seed = " << c.engine.seed << '\n';
    out << "policy = " << policy_name(c.engine.policy) << '\n';
    out << "sampler = " << sampler_name(c.engine.sampler) << '\n';
    out << "parallel_width = " << c.engine.parallel_width << '\n';
    out << "\n[oracle]\n";
    out << "kind = " << c.oracle.kind << '\n';
    out << "seed = " << c.oracle.seed << '\n';
    out << "noise_sigma = " << format_double(c.oracle.noise_sigma) << '\n';
    out << "epsilon = " << format_double(c.oracle.epsilon) << '\n';
    out << "coupling_seed = " << c.oracle.coupling_seed << '\n';
    if (!c.oracle.table.empty()) {
        out << "table = " << c.oracle.table.string() << '\n';
    }
    if (!c.oracle.command.empty()) {
        out << "command =";
        for (const auto& w : c.oracle.command) {
            out << ' ' << w;
        }
        out << '\n';
    }
    out << "workers = " << c.oracle.workers << '\n';
    out << "timeout_ms = " << c.oracle.timeout.count() << '\n';
    out << "curve_rate = " << format_double(c.oracle.curve_rate) << '\n';
    out << "\n[output]\n";
    out << "directory = " << c.output_dir.string() << '\n';
    return out.str();
}

std::unique_ptr<RewardOracle> make_oracle(const RunConfig& config, std::uint64_t seed_offset)
{
    validate_run_config(config);
    const auto& o = config.oracle;
    std::unique_ptr<RewardOracle> oracle;
    if (o.kind == "separable") {
        oracle = std::make_unique<SeparableOracle>(make_separable(config.space, o.seed + seed_offset, o.noise_sigma));
    } else if (o.kind == "coupled") {
        oracle = std::make_unique<CoupledOracle>(make_separable(config.space, o.seed + seed_offset, o.noise_sigma),
                                                 o.epsilon, o.coupling_seed + seed_offset);
    } else if (o.kind == "tabular") {
        oracle = std::make_unique<TabularOracle>(load_tabular(config.space, o.table));
    } else {
        oracle = std::make_unique<bridge::BridgeOracle>(o.command, config.space, o.workers, o.timeout);
    }
    if (o.curve_rate > 0.0) {
        oracle = std::make_unique<LearningCurveWrapper>(std::move(oracle), o.curve_rate);
    }
    return oracle;
}

} // namespace cmabnas
