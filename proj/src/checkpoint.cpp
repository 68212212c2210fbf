#include "mapflow/checkpoint.hpp"

#include "mapflow/errors.hpp"
#include "mapflow/io.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace mapflow {

namespace fs = std::filesystem;
using nlohmann::json;

void save_checkpoint(const fs::path& dir, const ParamStore& ps) {
    fs::create_directories(dir);
    json manifest;
    manifest["step"] = ps.step();
    json params = json::object();
    std::set<std::string> state_names;
    for (int i = 0; i < ps.count(); ++i) {
        const Param& p = ps.at(i);
        params[p.name] = p.value.shape();
        write_tsr(dir / (p.name + ".tsr"), p.value);
        for (const auto& [sname, tensor] : p.state) {
            state_names.insert(sname);
            write_tsr(dir / (p.name + "." + sname + ".tsr"), tensor);
        }
    }
    manifest["params"] = std::move(params);
    manifest["state_names"] = state_names;
    std::ofstream f(dir / "manifest.json");
    if (!f) throw ConfigError("cannot write checkpoint manifest in " + dir.string());
    f << manifest.dump(2) << "\n";
}

void load_checkpoint(const fs::path& dir, ParamStore& ps) {
    std::ifstream f(dir / "manifest.json");
    if (!f) throw ConfigError("missing checkpoint manifest in " + dir.string());
    json manifest;
    try {
        f >> manifest;
    } catch (const json::exception& e) {
        throw ConfigError("bad checkpoint manifest: " + std::string(e.what()));
    }
    ps.set_step(manifest.at("step").get<std::int64_t>());
    const auto state_names = manifest.at("state_names").get<std::vector<std::string>>();
    for (const auto& [name, shape] : manifest.at("params").items()) {
        if (!ps.has(name)) throw ConfigError("checkpoint has unknown parameter " + name);
        Param& p = ps.at(name);
        Tensor v = read_tsr(dir / (name + ".tsr"));
        if (v.shape() != p.value.shape())
            throw ConfigError("checkpoint shape mismatch for " + name);
        p.value = std::move(v);
        for (const std::string& sname : state_names) {
            const fs::path sp = dir / (name + "." + sname + ".tsr");
            if (fs::exists(sp)) p.state[sname] = read_tsr(sp);
        }
    }
}

} // namespace mapflow
