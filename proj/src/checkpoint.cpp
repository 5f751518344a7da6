#include "nodeplan/checkpoint.hpp"

#include "nodeplan/demo_io.hpp"
#include "nodeplan/error.hpp"

namespace nodeplan {

using nlohmann::json;

json checkpoint_to_json(const MlpField& model) {
  json j;
  j["format"] = "nodeplan-mlp";
  j["version"] = kCheckpointVersion;
  j["layer_sizes"] = model.layer_sizes();
  j["activation"] = to_string(model.activation());
  j["params"] = state_to_json(model.params());
  j["standardization"] = {{"mean", state_to_json(model.standardization().mean)},
                          {"scale", state_to_json(model.standardization().scale)}};
  j["seed"] = model.seed();
  return j;
}

MlpField checkpoint_from_json(const json& j) {
  try {
    if (j.value("format", std::string{}) != "nodeplan-mlp") {
      fail(ErrorKind::input, "checkpoint: not a nodeplan-mlp file");
    }
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      fail(ErrorKind::input, "checkpoint: unsupported version " + std::to_string(version));
    }
    MlpField m(j.at("layer_sizes").get<std::vector<int>>(),
               activation_from_string(j.at("activation").get<std::string>()));
    const auto& p = j.at("params");
    if (p.size() != static_cast<std::size_t>(m.num_params())) {
      fail(ErrorKind::input, "checkpoint: expected " + std::to_string(m.num_params()) + " parameters, found " +
                                 std::to_string(p.size()));
    }
    m.set_params(p.empty() ? Eigen::VectorXd() : state_from_json(p, "checkpoint params"));
    const auto& st = j.at("standardization");
    m.set_standardization({state_from_json(st.at("mean"), "checkpoint mean"),
                           state_from_json(st.at("scale"), "checkpoint scale")});
    m.set_seed(j.value("seed", std::uint64_t{0}));
    if (!m.params().allFinite()) fail(ErrorKind::input, "checkpoint: non-finite parameters");
    return m;
  } catch (const json::exception& e) {
    fail(ErrorKind::input, std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const MlpField& model, const std::filesystem::path& path) {
  write_text_file(path, checkpoint_to_json(model).dump() + "\n");
}

MlpField load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(parse_json(read_text_file(path), path.string()));
}

}  // namespace nodeplan
