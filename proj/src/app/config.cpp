#include "setpar/app/config.hpp"

#include <charconv>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "setpar/app/io.hpp"
#include "setpar/errors.hpp"

namespace setpar::app {

namespace {

std::string clean(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::optional<std::string> raw(const ConfigTree& tree, const std::string& key) {
    const auto v = tree.get_optional<std::string>(ConfigTree::path_type(key, '.'));
    if (!v) return std::nullopt;
    return clean(*v);
}

std::string required(const ConfigTree& tree, const std::string& key) {
    auto v = raw(tree, key);
    if (!v || v->empty()) throw InputError("config field '" + key + "' is missing");
    return *v;
}

double to_double(const std::string& text, const std::string& key) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw InputError("config field '" + key + "' is not a number: '" + text + "'");
    }
}

template <class Int>
Int to_integer(const std::string& text, const std::string& key) {
    Int v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw InputError("config field '" + key + "' is not a nonnegative integer: '" + text + "'");
    }
    return v;
}

bool to_bool(const std::string& text, const std::string& key) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw InputError("config field '" + key + "' is not a boolean: '" + text + "'");
}

RegimeParams regime_from(const ConfigTree& tree, const std::string& section) {
    RegimeParams p;
    p.d = to_double(required(tree, section + ".d"), section + ".d");
    p.a = to_double(required(tree, section + ".a"), section + ".a");
    p.b = to_double(required(tree, section + ".b"), section + ".b");
    try {
        p.validate();
    } catch (const DomainError& e) {
        throw InputError("config section [" + section + "]: " + e.what());
    }
    return p;
}

}  // namespace

ConfigTree parse_config(const std::string& text, const std::string& source) {
    ConfigTree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw InputError(source + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    return tree;
}

ConfigTree load_config(const std::filesystem::path& path) {
    return parse_config(read_file(path), path.string());
}

std::vector<Count> parse_count_list(const std::string& text, const std::string& field) {
    std::vector<Count> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = clean(item);
        if (item.empty()) continue;
        out.push_back(to_integer<Count>(item, field));
    }
    if (out.empty()) throw InputError("field '" + field + "' must list at least one integer");
    return out;
}

SetparParams params_from(const ConfigTree& tree) {
    SetparParams p;
    p.r = to_integer<Count>(required(tree, "r"), "r");
    p.lower = regime_from(tree, "lower");
    p.upper = regime_from(tree, "upper");
    return p;
}

SimulationConfig simulation_config(const ConfigTree& tree) {
    SimulationConfig cfg;
    cfg.params = params_from(tree);
    cfg.n = to_integer<std::size_t>(required(tree, "n"), "n");
    if (cfg.n == 0) throw InputError("config field 'n' must be positive");
    cfg.seed = to_integer<std::uint64_t>(required(tree, "seed"), "seed");
    if (const auto v = raw(tree, "burn_in")) cfg.burn_in = to_integer<std::size_t>(*v, "burn_in");
    if (const auto v = raw(tree, "lambda_init")) {
        cfg.lambda_init = to_double(*v, "lambda_init");
        if (!(*cfg.lambda_init > 0.0)) throw InputError("config field 'lambda_init' must be positive");
    }
    return cfg;
}

void apply_lambda_init(const std::string& text, FitConfig& cfg, const std::string& field) {
    if (text == "mean") {
        cfg.lambda_init.reset();
        cfg.lambda_init_policy = LambdaInitPolicy::SampleMean;
    } else if (text == "first") {
        cfg.lambda_init.reset();
        cfg.lambda_init_policy = LambdaInitPolicy::FirstObservation;
    } else {
        cfg.lambda_init = to_double(text, field);
        if (!(*cfg.lambda_init > 0.0)) throw InputError("field '" + field + "' must be positive");
    }
}

FitConfig fit_config_from(const ConfigTree& tree, FitConfig cfg) {
    if (const auto v = raw(tree, "alpha1")) cfg.alpha1 = to_double(*v, "alpha1");
    if (const auto v = raw(tree, "alpha2")) cfg.alpha2 = to_double(*v, "alpha2");
    if (const auto v = raw(tree, "thresholds")) cfg.thresholds = parse_count_list(*v, "thresholds");
    if (const auto v = raw(tree, "lambda_init")) apply_lambda_init(*v, cfg, "lambda_init");
    if (const auto v = raw(tree, "epsilon")) cfg.epsilon = to_double(*v, "epsilon");
    if (const auto v = raw(tree, "tol")) cfg.optim.tol = to_double(*v, "tol");
    if (const auto v = raw(tree, "max_iter")) cfg.optim.max_iter = to_integer<int>(*v, "max_iter");
    if (const auto v = raw(tree, "starts")) cfg.starts = to_integer<int>(*v, "starts");
    if (const auto v = raw(tree, "warm_start")) cfg.warm_start = to_bool(*v, "warm_start");
    if (const auto v = raw(tree, "workers")) cfg.workers = to_integer<int>(*v, "workers");
    if (const auto v = raw(tree, "min_regime_obs")) {
        cfg.min_regime_obs = to_integer<std::size_t>(*v, "min_regime_obs");
    }
    try {
        cfg.validate();
    } catch (const DomainError& e) {
        throw InputError(std::string("fit configuration: ") + e.what());
    }
    return cfg;
}

McDesign design_from(const ConfigTree& tree) {
    McDesign d;
    d.truth = params_from(tree);
    for (const Count n : parse_count_list(required(tree, "sizes"), "sizes")) {
        d.sample_sizes.push_back(static_cast<std::size_t>(n));
    }
    d.replications = to_integer<std::size_t>(required(tree, "replications"), "replications");
    d.base_seed = to_integer<std::uint64_t>(required(tree, "seed"), "seed");
    if (const auto v = raw(tree, "burn_in")) d.burn_in = to_integer<std::size_t>(*v, "burn_in");
    if (const auto fit = tree.get_child_optional("fit")) d.fit = fit_config_from(*fit);
    try {
        d.validate();
    } catch (const DomainError& e) {
        throw InputError(std::string("design: ") + e.what());
    }
    return d;
}

}  // namespace setpar::app
