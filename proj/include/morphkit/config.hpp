#pragma once

#include <map>

#include "morphkit/render.hpp"
#include "morphkit/trainer.hpp"

namespace morphkit {

// Flat `key = value` configuration with '#' comments. One schema drives
// parsing, validation, defaults and the generated help text, so the
// documented key list cannot drift from what is accepted.

enum class ConfigType { integer, unsigned64, real, vec3 };

struct ConfigKey {
    const char* name;
    ConfigType type;
    const char* default_value;
    const char* description;
};

inline const std::vector<ConfigKey>& config_schema() {
    static const std::vector<ConfigKey> schema = {
        {"seed", ConfigType::unsigned64, "0", "rng seed for init and timestep draws"},
        {"iterations", ConfigType::integer, "800", "optimization iterations"},
        {"learning_rate", ConfigType::real, "0.001", "adam learning rate"},
        {"adam_beta1", ConfigType::real, "0.9", "adam first-moment decay"},
        {"adam_beta2", ConfigType::real, "0.999", "adam second-moment decay"},
        {"adam_eps", ConfigType::real, "1e-8", "adam denominator epsilon"},
        {"lambda_geo", ConfigType::real, "1", "geodesic distortion weight"},
        {"lambda_arap", ConfigType::real, "1", "rigidity weight"},
        {"lambda_smooth", ConfigType::real, "0.1", "color smoothness weight"},
        {"lambda_align", ConfigType::real, "10", "terminal alignment weight"},
        {"geodesic_samples", ConfigType::integer, "500", "farthest-point samples per mesh for distance tables"},
        {"knn_k", ConfigType::integer, "8", "nearest-neighbor count for the hybrid graph"},
        {"sigma", ConfigType::real, "10", "assignment softmax temperature"},
        {"hidden_width", ConfigType::integer, "128", "feature network hidden width"},
        {"feature_dim", ConfigType::integer, "64", "feature network output width"},
        {"timestep_draws", ConfigType::integer, "4", "random rigidity timesteps per iteration"},
        {"arap_dt", ConfigType::real, "0.05", "rigidity finite timestep"},
        {"smooth_eps", ConfigType::real, "1e-4", "smoothness inverse-distance epsilon"},
        {"checkpoint_interval", ConfigType::integer, "100", "iterations between checkpoints"},
        {"frame_count", ConfigType::integer, "11", "exported timesteps including endpoints"},
        {"image_size", ConfigType::integer, "256", "render width and height in pixels"},
        {"camera_extent", ConfigType::real, "0.65", "orthographic half extent in normalized units"},
        {"camera_view", ConfigType::vec3, "0,0,-1", "camera view direction"},
        {"camera_up", ConfigType::vec3, "0,1,0", "camera up vector"},
        {"canny_low", ConfigType::real, "50", "canny low threshold (8-bit magnitude)"},
        {"canny_high", ConfigType::real, "150", "canny high threshold (8-bit magnitude)"},
        {"sh_view", ConfigType::vec3, "0,0,1", "canonical view direction for splat colors"},
    };
    return schema;
}

inline const ConfigKey* find_config_key(const std::string& name) {
    for (const auto& k : config_schema())
        if (name == k.name) return &k;
    return nullptr;
}

class Config {
public:
    Config() {
        for (const auto& k : config_schema()) values_[k.name] = k.default_value;
    }

    /// Validates and stores one assignment. `where` names the source (file
    /// line or command-line flag) for error messages.
    void set(const std::string& key, const std::string& value, const std::string& where) {
        const ConfigKey* k = find_config_key(key);
        if (!k) throw config_error(cat(where, ": unknown config key '", key, "'"));
        check_value(*k, value, where);
        values_[key] = value;
    }

    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw file_error(cat("cannot open file: ", path));
        std::string line;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            std::string where = cat(path, ":", line_no);
            size_t hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            size_t eq = line.find('=');
            bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
            if (blank) continue;
            if (eq == std::string::npos) throw config_error(cat(where, ": expected 'key = value'"));
            values_stage(line.substr(0, eq), line.substr(eq + 1), where);
        }
    }

    int64_t get_int(const std::string& key) const { return std::stoll(raw(key, ConfigType::integer)); }
    uint64_t get_uint(const std::string& key) const { return std::stoull(raw(key, ConfigType::unsigned64)); }
    double get_real(const std::string& key) const { return std::stod(raw(key, ConfigType::real)); }
    Vec3 get_vec3(const std::string& key) const { return parse_vec3(raw(key, ConfigType::vec3)); }

    TrainConfig train_config() const {
        TrainConfig cfg;
        cfg.iterations = int(get_int("iterations"));
        cfg.learning_rate = get_real("learning_rate");
        cfg.adam_beta1 = get_real("adam_beta1");
        cfg.adam_beta2 = get_real("adam_beta2");
        cfg.adam_eps = get_real("adam_eps");
        cfg.weights = {get_real("lambda_geo"), get_real("lambda_arap"), get_real("lambda_smooth"),
                       get_real("lambda_align")};
        cfg.geodesic_samples = int(get_int("geodesic_samples"));
        cfg.knn_k = int(get_int("knn_k"));
        cfg.sigma = get_real("sigma");
        cfg.hidden_width = int(get_int("hidden_width"));
        cfg.feature_dim = int(get_int("feature_dim"));
        cfg.timestep_draws = int(get_int("timestep_draws"));
        cfg.arap_dt = get_real("arap_dt");
        cfg.smooth_eps = get_real("smooth_eps");
        cfg.seed = get_uint("seed");
        cfg.checkpoint_interval = int(get_int("checkpoint_interval"));
        cfg.sh_view = get_vec3("sh_view");
        cfg.validate();
        return cfg;
    }

    Camera camera() const {
        Camera cam;
        cam.view = get_vec3("camera_view");
        cam.up = get_vec3("camera_up");
        cam.half_extent = get_real("camera_extent");
        cam.width = cam.height = int(get_int("image_size"));
        cam.validate();
        return cam;
    }

    /// Effective configuration, one deterministic `key = value` line per key.
    std::string echo() const {
        std::string out;
        for (const auto& k : config_schema()) out += cat(k.name, " = ", values_.at(k.name), "\n");
        return out;
    }

private:
    std::map<std::string, std::string> values_;

    void values_stage(std::string key, std::string value, const std::string& where) {
        auto trim = [](std::string& s) {
            size_t b = s.find_first_not_of(" \t\r");
            size_t e = s.find_last_not_of(" \t\r");
            s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
        };
        trim(key);
        trim(value);
        if (key.empty()) throw config_error(cat(where, ": empty key"));
        set(key, value, where);
    }

    const std::string& raw(const std::string& key, ConfigType expect) const {
        const ConfigKey* k = find_config_key(key);
        if (!k || k->type != expect) throw config_error(cat("config key '", key, "' type misuse"));
        return values_.at(key);
    }

    static Vec3 parse_vec3(const std::string& s) {
        Vec3 v;
        char extra;
        if (std::sscanf(s.c_str(), "%lf,%lf,%lf%c", &v.x, &v.y, &v.z, &extra) != 3)
            throw config_error(cat("bad vec3 value '", s, "'"));
        return v;
    }

    static void check_value(const ConfigKey& k, const std::string& value, const std::string& where) {
        try {
            size_t used = 0;
            switch (k.type) {
                case ConfigType::integer:
                    (void)std::stoll(value, &used);
                    if (used != value.size()) throw std::invalid_argument(value);
                    break;
                case ConfigType::unsigned64:
                    if (!value.empty() && value[0] == '-') throw std::invalid_argument(value);
                    (void)std::stoull(value, &used);
                    if (used != value.size()) throw std::invalid_argument(value);
                    break;
                case ConfigType::real:
                    (void)std::stod(value, &used);
                    if (used != value.size()) throw std::invalid_argument(value);
                    break;
                case ConfigType::vec3:
                    parse_vec3(value);
                    break;
            }
        } catch (const config_error&) {
            throw config_error(cat(where, ": key '", k.name, "': bad value '", value, "'"));
        } catch (const std::exception&) {
            throw config_error(cat(where, ": key '", k.name, "': bad value '", value, "'"));
        }
    }
};

}  // namespace morphkit
