#include "bridgelab/serialize.hpp"

#include <filesystem>
#include <fstream>

namespace bridgelab {

void ArrayBundle::add(const std::string& name, NdArray arr) {
    if (has(name)) throw std::invalid_argument("ArrayBundle: duplicate array " + name);
    arrays_.emplace_back(name, std::move(arr));
}

bool ArrayBundle::has(const std::string& name) const {
    for (const auto& [n, a] : arrays_)
        if (n == name) return true;
    return false;
}

const NdArray& ArrayBundle::get(const std::string& name) const {
    for (const auto& [n, a] : arrays_)
        if (n == name) return a;
    throw std::invalid_argument("ArrayBundle: unknown array " + name);
}

void save_bundle(const ArrayBundle& bundle, const std::string& dir) {
    std::filesystem::create_directories(dir);
    Json manifest;
    manifest["schema_version"] = kBundleSchemaVersion;
    manifest["meta"] = bundle.meta;
    manifest["arrays"] = Json::array();

    std::ofstream bin(dir + "/arrays.bin", std::ios::binary | std::ios::trunc);
    if (!bin) throw std::runtime_error("save_bundle: cannot open " + dir + "/arrays.bin");
    uint64_t offset = 0;
    for (const auto& [name, arr] : bundle.arrays()) {
        uint64_t bytes = static_cast<uint64_t>(arr.data.size()) * sizeof(double);
        manifest["arrays"].push_back(
            {{"name", name}, {"shape", arr.shape}, {"dtype", "float64"}, {"offset", offset},
             {"bytes", bytes}});
        bin.write(reinterpret_cast<const char*>(arr.data.data()),
                  static_cast<std::streamsize>(bytes));
        offset += bytes;
    }
    bin.close();
    if (!bin) throw std::runtime_error("save_bundle: write failed for " + dir + "/arrays.bin");

    std::ofstream mf(dir + "/manifest.json", std::ios::trunc);
    if (!mf) throw std::runtime_error("save_bundle: cannot open " + dir + "/manifest.json");
    mf << manifest.dump(2) << "\n";
}

ArrayBundle load_bundle(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.json");
    if (!mf) throw std::runtime_error("load_bundle: cannot open " + dir + "/manifest.json");
    Json manifest;
    try {
        mf >> manifest;
    } catch (const Json::parse_error& e) {
        throw CorruptFileError("load_bundle: bad manifest in " + dir + ": " + e.what());
    }
    if (!manifest.contains("schema_version") ||
        manifest["schema_version"].get<int>() != kBundleSchemaVersion)
        throw CorruptFileError("load_bundle: unsupported schema version in " + dir);

    std::ifstream bin(dir + "/arrays.bin", std::ios::binary);
    if (!bin) throw std::runtime_error("load_bundle: cannot open " + dir + "/arrays.bin");
    bin.seekg(0, std::ios::end);
    const uint64_t file_size = static_cast<uint64_t>(bin.tellg());

    ArrayBundle out;
    out.meta = manifest.value("meta", Json::object());
    for (const auto& entry : manifest["arrays"]) {
        std::string name = entry.at("name").get<std::string>();
        std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        uint64_t offset = entry.at("offset").get<uint64_t>();
        uint64_t bytes = entry.at("bytes").get<uint64_t>();
        if (entry.at("dtype").get<std::string>() != "float64")
            throw CorruptFileError("load_bundle: unsupported dtype for " + name);
        NdArray arr(shape);
        if (static_cast<uint64_t>(arr.data.size()) * sizeof(double) != bytes ||
            offset + bytes > file_size)
            throw CorruptFileError("load_bundle: array " + name + " exceeds file bounds");
        bin.seekg(static_cast<std::streamoff>(offset));
        bin.read(reinterpret_cast<char*>(arr.data.data()), static_cast<std::streamsize>(bytes));
        if (!bin) throw CorruptFileError("load_bundle: short read for " + name);
        out.add(name, std::move(arr));
    }
    return out;
}

}  // namespace bridgelab
