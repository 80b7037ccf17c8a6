#include "scarseg/checkpoint.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "scarseg/log.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace scarseg {

static_assert(sizeof(float) == 4, "float must be 32-bit");

void save_checkpoint(const std::string& dir, const UNetConfig& cfg,
                     const UNetParams& params, const CheckpointMeta& meta) {
    cfg.validate();
    fs::create_directories(dir);
    const fs::path jpath = fs::path(dir) / "weights.json";
    const fs::path bpath = fs::path(dir) / "weights.bin";

    json manifest;
    manifest["format"] = "scarseg-checkpoint-v1";
    manifest["config"] = {{"in_channels", cfg.in_channels},
                          {"init_filters", cfg.init_filters},
                          {"depth", cfg.depth},
                          {"out_channels", cfg.out_channels}};
    manifest["seed"] = meta.seed;
    manifest["epoch"] = meta.epoch;
    manifest["val_loss"] = meta.val_loss;
    if (!meta.normalization.empty()) {
        json norm = json::array();
        for (const auto& r : meta.normalization)
            norm.push_back({{"min", r.min}, {"max", r.max}});
        manifest["normalization"] = norm;
    }

    json tensors = json::array();
    std::ofstream bin(bpath, std::ios::binary | std::ios::trunc);
    if (!bin) throw Error("nn_engine", "cannot write " + bpath.string());
    std::uint64_t offset = 0;
    visit_tensors(const_cast<UNetParams&>(params),
                  [&](const std::string& name, std::vector<float>& data,
                      const std::vector<int>& shape) {
                      tensors.push_back({{"name", name},
                                         {"shape", shape},
                                         {"offset", offset}});
                      bin.write(reinterpret_cast<const char*>(data.data()),
                                static_cast<std::streamsize>(data.size() * 4));
                      offset += data.size() * 4;
                  });
    bin.close();
    if (!bin) throw Error("nn_engine", "short write to " + bpath.string());
    manifest["tensors"] = std::move(tensors);
    manifest["payload_bytes"] = offset;

    std::ofstream out(jpath, std::ios::trunc);
    if (!out) throw Error("nn_engine", "cannot write " + jpath.string());
    out << manifest.dump(2) << "\n";
    out.close();
    if (!out) throw Error("nn_engine", "short write to " + jpath.string());
    log_debug("checkpoint saved to " + dir + " (" + std::to_string(offset) +
              " payload bytes)");
}

Checkpoint load_checkpoint(const std::string& path) {
    fs::path jpath(path);
    if (fs::is_directory(jpath)) jpath /= "weights.json";
    std::ifstream in(jpath);
    if (!in)
        throw Error("nn_engine", "cannot open checkpoint " + jpath.string());
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw Error("nn_engine",
                    "malformed manifest " + jpath.string() + ": " + e.what());
    }

    Checkpoint ck;
    try {
        const auto& c = manifest.at("config");
        ck.config.in_channels = c.at("in_channels").get<int>();
        ck.config.init_filters = c.at("init_filters").get<int>();
        ck.config.depth = c.at("depth").get<int>();
        ck.config.out_channels = c.at("out_channels").get<int>();
        ck.meta.seed = manifest.value("seed", std::uint64_t{0});
        ck.meta.epoch = manifest.value("epoch", -1);
        ck.meta.val_loss = manifest.value("val_loss", 0.0);
        if (manifest.contains("normalization"))
            for (const auto& r : manifest.at("normalization"))
                ck.meta.normalization.push_back(
                    {r.at("min").get<float>(), r.at("max").get<float>()});
    } catch (const json::exception& e) {
        throw Error("nn_engine", "manifest " + jpath.string() +
                                     " missing fields: " + e.what());
    }
    ck.config.validate();
    ck.params = build_params<float>(ck.config);

    const fs::path bpath = jpath.parent_path() / "weights.bin";
    std::ifstream bin(bpath, std::ios::binary);
    if (!bin) throw Error("nn_engine", "cannot open payload " + bpath.string());
    bin.seekg(0, std::ios::end);
    const std::uint64_t actual = static_cast<std::uint64_t>(bin.tellg());

    // index manifest tensors by name
    std::uint64_t expected = 0;
    const auto& tens = manifest.at("tensors");
    visit_tensors(ck.params, [&](const std::string& name,
                                 std::vector<float>& data,
                                 const std::vector<int>& shape) {
        const json* entry = nullptr;
        for (const auto& t : tens)
            if (t.at("name").get<std::string>() == name) {
                entry = &t;
                break;
            }
        if (!entry)
            throw Error("nn_engine",
                        "manifest is missing tensor '" + name + "'");
        const auto mshape = entry->at("shape").get<std::vector<int>>();
        if (mshape != shape)
            throw Error("nn_engine", "tensor '" + name +
                                         "' shape mismatch between manifest "
                                         "and architecture");
        const std::uint64_t off = entry->at("offset").get<std::uint64_t>();
        const std::uint64_t nbytes = data.size() * 4;
        if (off + nbytes > actual)
            throw Error("nn_engine", "payload truncated: tensor '" + name +
                                         "' extends past end of weights.bin");
        bin.seekg(static_cast<std::streamoff>(off));
        bin.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(nbytes));
        if (!bin)
            throw Error("nn_engine", "payload read failed for '" + name + "'");
        expected += nbytes;
    });
    if (expected != actual)
        throw Error("nn_engine",
                    "payload size mismatch: manifest implies " +
                        std::to_string(expected) + " bytes, file has " +
                        std::to_string(actual));
    return ck;
}

}  // namespace scarseg
