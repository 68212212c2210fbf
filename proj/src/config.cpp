#include "mapflow/config.hpp"

#include "mapflow/errors.hpp"

#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

namespace mapflow {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("config: unknown key '" + where + "." + key + "'");
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config: bad value for '") + key + "'");
    }
}

void fail_unless(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError("config: " + msg);
}

ScenesConfig parse_scenes(const json& j) {
    check_keys(j, "scenes",
               {"size", "train_count", "enhancement_count", "test_count", "building_density",
                "building_min_side", "building_max_side", "road_width_min", "road_width_max",
                "roads_per_256px", "vegetation_density"});
    ScenesConfig s;
    s.size = get_or(j, "size", s.size);
    s.train_count = get_or(j, "train_count", s.train_count);
    s.enhancement_count = get_or(j, "enhancement_count", s.enhancement_count);
    s.test_count = get_or(j, "test_count", s.test_count);
    s.style.building_density = get_or(j, "building_density", s.style.building_density);
    s.style.building_min_side = get_or(j, "building_min_side", s.style.building_min_side);
    s.style.building_max_side = get_or(j, "building_max_side", s.style.building_max_side);
    s.style.road_width_min = get_or(j, "road_width_min", s.style.road_width_min);
    s.style.road_width_max = get_or(j, "road_width_max", s.style.road_width_max);
    s.style.roads_per_256px = get_or(j, "roads_per_256px", s.style.roads_per_256px);
    s.style.vegetation_density = get_or(j, "vegetation_density", s.style.vegetation_density);
    fail_unless(s.size >= 64, "scenes.size must be >= 64");
    fail_unless(s.train_count >= 1 && s.enhancement_count >= 1 && s.test_count >= 1,
                "scene counts must be >= 1");
    fail_unless(s.style.building_density > 0.0f && s.style.building_density < 0.5f,
                "scenes.building_density must be in (0, 0.5)");
    fail_unless(s.style.road_width_min >= 1 &&
                    s.style.road_width_max >= s.style.road_width_min,
                "scenes road widths must satisfy 1 <= min <= max");
    return s;
}

DegradationSpec parse_degradation(const json& j) {
    check_keys(j, "degradation", {"max_shift", "omit_prob", "road_width_px"});
    DegradationSpec d;
    d.max_shift = get_or(j, "max_shift", d.max_shift);
    d.omit_prob = get_or(j, "omit_prob", d.omit_prob);
    d.road_width_px = get_or(j, "road_width_px", d.road_width_px);
    fail_unless(d.max_shift >= 0, "degradation.max_shift must be >= 0");
    fail_unless(d.omit_prob >= 0.0f && d.omit_prob <= 1.0f,
                "degradation.omit_prob must be in [0, 1]");
    fail_unless(d.road_width_px >= 1, "degradation.road_width_px must be >= 1");
    return d;
}

void parse_coarse(const json& j, RunConfig& cfg) {
    check_keys(j, "coarse", {"provider", "degrader", "training"});
    const std::string provider = get_or<std::string>(j, "provider", "degrader");
    if (provider == "degrader")
        cfg.coarse_provider.kind = CoarseProviderConfig::Kind::Degrader;
    else if (provider == "network")
        cfg.coarse_provider.kind = CoarseProviderConfig::Kind::Network;
    else
        throw ConfigError("config: coarse.provider must be 'degrader' or 'network'");
    if (j.contains("degrader")) {
        const json& d = j.at("degrader");
        check_keys(d, "coarse.degrader", {"sigma", "noise_rate", "logit_magnitude"});
        cfg.coarse_provider.sigma = get_or(d, "sigma", cfg.coarse_provider.sigma);
        cfg.coarse_provider.noise_rate = get_or(d, "noise_rate", cfg.coarse_provider.noise_rate);
        cfg.coarse_provider.logit_magnitude =
            get_or(d, "logit_magnitude", cfg.coarse_provider.logit_magnitude);
        fail_unless(cfg.coarse_provider.sigma >= 0.0f, "coarse.degrader.sigma must be >= 0");
        fail_unless(cfg.coarse_provider.noise_rate >= 0.0f && cfg.coarse_provider.noise_rate < 1.0f,
                    "coarse.degrader.noise_rate must be in [0, 1)");
    }
    if (j.contains("training")) {
        const json& t = j.at("training");
        check_keys(t, "coarse.training", {"lr", "momentum", "l2", "steps", "batch", "patch"});
        CoarseTrainConfig& c = cfg.coarse_training;
        c.lr = get_or(t, "lr", c.lr);
        c.momentum = get_or(t, "momentum", c.momentum);
        c.l2 = get_or(t, "l2", c.l2);
        c.steps = get_or(t, "steps", c.steps);
        c.batch = get_or(t, "batch", c.batch);
        c.patch = get_or(t, "patch", c.patch);
        fail_unless(c.lr > 0.0f && c.steps >= 0 && c.batch >= 1 && c.patch >= 4 &&
                        c.patch % 4 == 0,
                    "coarse.training values out of range (patch must be a positive multiple of 4)");
    }
}

void parse_enhancer(const json& j, RunConfig& cfg) {
    check_keys(j, "enhancer",
               {"filters", "hidden", "iterations", "class_agnostic", "unshared", "training"});
    EnhancerConfig& e = cfg.enhancer;
    e.filters = get_or(j, "filters", e.filters);
    e.hidden = get_or(j, "hidden", e.hidden);
    e.iterations = get_or(j, "iterations", e.iterations);
    e.class_agnostic = get_or(j, "class_agnostic", e.class_agnostic);
    e.unshared = get_or(j, "unshared", e.unshared);
    fail_unless(e.filters >= 1 && e.hidden >= 1 && e.iterations >= 0,
                "enhancer values out of range");
    if (j.contains("training")) {
        const json& t = j.at("training");
        check_keys(t, "enhancer.training", {"lr", "steps", "batch", "patch"});
        EnhancerTrainConfig& c = cfg.enhancer_training;
        c.lr = get_or(t, "lr", c.lr);
        c.steps = get_or(t, "steps", c.steps);
        c.batch = get_or(t, "batch", c.batch);
        c.patch = get_or(t, "patch", c.patch);
        fail_unless(c.lr > 0.0f && c.steps >= 0 && c.batch >= 1 && c.patch >= 8,
                    "enhancer.training values out of range");
    }
}

void parse_baseline(const json& j, RunConfig& cfg) {
    check_keys(j, "baseline", {"scheme", "dt", "steps", "edge"});
    BaselineConfig& b = cfg.baseline;
    if (j.contains("scheme")) b.scheme = scheme_from_name(j.at("scheme").get<std::string>());
    b.dt = get_or(j, "dt", b.dt);
    b.steps = get_or(j, "steps", b.steps);
    fail_unless(b.dt > 0.0f && b.steps >= 0, "baseline.dt/steps out of range");
    if (j.contains("edge")) {
        const json& e = j.at("edge");
        check_keys(e, "baseline.edge", {"kind", "lambda", "presmooth_sigma"});
        const std::string kind = get_or<std::string>(e, "kind", "exponential");
        if (kind == "exponential")
            b.edge.kind = EdgeStopParams::Kind::Exponential;
        else if (kind == "rational")
            b.edge.kind = EdgeStopParams::Kind::Rational;
        else
            throw ConfigError("config: baseline.edge.kind must be 'exponential' or 'rational'");
        b.edge.lambda = get_or(e, "lambda", b.edge.lambda);
        b.edge.presmooth_sigma = get_or(e, "presmooth_sigma", b.edge.presmooth_sigma);
        fail_unless(b.edge.presmooth_sigma >= 0.0f, "baseline.edge.presmooth_sigma must be >= 0");
    }
}

} // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: JSON parse failure: ") + e.what());
    }
    check_keys(j, "<root>",
               {"seed", "output_dir", "strict", "scenes", "degradation", "coarse", "enhancer",
                "baseline"});
    RunConfig cfg;
    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
    cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);
    cfg.strict = get_or(j, "strict", cfg.strict);
    if (j.contains("scenes")) cfg.scenes = parse_scenes(j.at("scenes"));
    if (j.contains("degradation")) cfg.degradation = parse_degradation(j.at("degradation"));
    if (j.contains("coarse")) parse_coarse(j.at("coarse"), cfg);
    if (j.contains("enhancer")) parse_enhancer(j.at("enhancer"), cfg);
    if (j.contains("baseline")) parse_baseline(j.at("baseline"), cfg);
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    RunConfig cfg = parse_run_config(buf.str());
    if (const char* env = std::getenv("MAPFLOW_OUTPUT_DIR"); env != nullptr && *env != '\0')
        cfg.output_dir = env;
    return cfg;
}

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Heat: return "heat";
        case Scheme::PeronaMalik: return "perona_malik";
        case Scheme::Anisotropic: return "anisotropic";
        case Scheme::Gac: return "gac";
    }
    return "unknown";
}

Scheme scheme_from_name(const std::string& name) {
    if (name == "heat") return Scheme::Heat;
    if (name == "perona_malik") return Scheme::PeronaMalik;
    if (name == "anisotropic") return Scheme::Anisotropic;
    if (name == "gac") return Scheme::Gac;
    throw ConfigError("config: unknown scheme '" + name + "'");
}

} // namespace mapflow
