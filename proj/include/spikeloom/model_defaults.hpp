#pragma once

#include <map>
#include <string>

namespace spikeloom {

// Versioned key/value table of model parameter defaults (canonical published
// AdEx/HH sets plus the shipped LIF/synapse/interface values). The table is
// compiled in from data/model_defaults.conf; load_model_defaults() reads the
// same format from an external file.
struct ModelDefaults {
    int version = 0;
    std::map<std::string, double> values;

    double get(const std::string& key) const;
    double get_or(const std::string& key, double fallback) const;
};

const ModelDefaults& model_defaults();

ModelDefaults parse_model_defaults(const std::string& text);
ModelDefaults load_model_defaults(const std::string& path);

}  // namespace spikeloom
