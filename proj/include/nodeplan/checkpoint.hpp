#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "nodeplan/mlp.hpp"

namespace nodeplan {

inline constexpr int kCheckpointVersion = 1;

// Checkpoint JSON: format tag, version, layer sizes, activation, flat
// parameters, standardization constants and the training seed. Doubles are
// written in shortest round-trip form, so save/load is bit-exact.
nlohmann::json checkpoint_to_json(const MlpField& model);
MlpField checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const MlpField& model, const std::filesystem::path& path);
MlpField load_checkpoint(const std::filesystem::path& path);

}  // namespace nodeplan
