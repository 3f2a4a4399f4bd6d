#include "spikeloom/model_defaults.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "model_defaults.inc"

namespace spikeloom {

double ModelDefaults::get(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end())
        throw std::out_of_range("model defaults: missing key '" + key + "'");
    return it->second;
}

double ModelDefaults::get_or(const std::string& key, double fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

ModelDefaults parse_model_defaults(const std::string& text) {
    ModelDefaults d;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("model defaults: line " + std::to_string(lineno) +
                                     ": expected 'key = value'");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw std::runtime_error("model defaults: line " + std::to_string(lineno) +
                                     ": empty key or value");
        std::size_t used = 0;
        double num = 0.0;
        try {
            num = std::stod(val, &used);
        } catch (const std::exception&) {
            throw std::runtime_error("model defaults: line " + std::to_string(lineno) +
                                     ": '" + val + "' is not a number");
        }
        if (used != val.size())
            throw std::runtime_error("model defaults: line " + std::to_string(lineno) +
                                     ": trailing characters after number");
        if (key == "defaults_version") {
            d.version = static_cast<int>(num);
        } else {
            d.values[key] = num;
        }
    }
    if (d.version == 0) throw std::runtime_error("model defaults: missing defaults_version");
    return d;
}

ModelDefaults load_model_defaults(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open model defaults file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_model_defaults(ss.str());
}

const ModelDefaults& model_defaults() {
    static const ModelDefaults d = parse_model_defaults(kModelDefaultsText);
    return d;
}

}  // namespace spikeloom
