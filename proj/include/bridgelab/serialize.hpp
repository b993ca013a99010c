#ifndef BRIDGELAB_SERIALIZE_HPP
#define BRIDGELAB_SERIALIZE_HPP

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bridgelab/nd.hpp"

namespace bridgelab {

using Json = nlohmann::json;

struct CorruptFileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// On-disk container used by datasets and checkpoints alike: DIR/manifest.json
// describes every array (name, shape, dtype, byte offset) plus free-form
// metadata; DIR/arrays.bin holds the raw float64 payloads back to back.
class ArrayBundle {
   public:
    Json meta;

    void add(const std::string& name, NdArray arr);
    bool has(const std::string& name) const;
    const NdArray& get(const std::string& name) const;
    const std::vector<std::pair<std::string, NdArray>>& arrays() const { return arrays_; }

   private:
    std::vector<std::pair<std::string, NdArray>> arrays_;
};

inline constexpr int kBundleSchemaVersion = 1;

void save_bundle(const ArrayBundle& bundle, const std::string& dir);
ArrayBundle load_bundle(const std::string& dir);

}  // namespace bridgelab

#endif
