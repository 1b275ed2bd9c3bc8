#include "xgad/checkpoint.hpp"

#include <json.hpp>

#include "xgad/tsv.hpp"

namespace xgad {
namespace {

using nlohmann::json;
constexpr const char* kFormat = "xgad-checkpoint-v1";

}  // namespace

void save_checkpoint(const ModelState& state, const std::filesystem::path& dir,
                     const CheckpointInfo& info) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const ModelShape shape = state.shape();
  json manifest = {
      {"format", kFormat},
      {"source_dim", shape.encoder.source_dim},
      {"target_dim", shape.encoder.target_dim},
      {"hidden_width", shape.encoder.hidden_width},
      {"output_width", shape.encoder.output_width},
      {"num_bases", shape.num_bases},
      {"use_prompts", state.use_prompts},
      {"independent_centers", state.centers.independent},
      {"seed", info.seed},
      {"phase", info.phase},
  };
  json entries = json::array();
  for (const ConstTensorRef& t : tensors(state)) {
    // Row-major text regardless of Eigen's storage order.
    const Matrix m = Eigen::Map<const Matrix>(t.data, t.rows, t.cols);
    const std::string body = matrix_to_tsv(m);
    const std::string file = t.name + ".tsv";
    write_file(dir / file, body);
    entries.push_back({{"name", t.name},
                       {"rows", t.rows},
                       {"cols", t.cols},
                       {"file", file},
                       {"sha256", sha256_hex(body)}});
  }
  manifest["tensors"] = std::move(entries);
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

ModelState load_checkpoint(const std::filesystem::path& dir, CheckpointInfo* info) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw CheckpointError("checkpoint integrity: " + manifest_path.string() + " is missing");
  }
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw CheckpointError("checkpoint integrity: manifest is not valid JSON: " +
                          std::string(e.what()));
  }

  ModelState state;
  try {
    if (manifest.at("format").get<std::string>() != kFormat) {
      throw CheckpointError("checkpoint integrity: unknown format tag");
    }
    ModelShape shape;
    shape.encoder.source_dim = manifest.at("source_dim").get<int>();
    shape.encoder.target_dim = manifest.at("target_dim").get<int>();
    shape.encoder.hidden_width = manifest.at("hidden_width").get<int>();
    shape.encoder.output_width = manifest.at("output_width").get<int>();
    shape.num_bases = manifest.at("num_bases").get<int>();
    RandomStream scratch(0);
    state = zeros_like(init_model(shape, scratch));
    state.use_prompts = manifest.at("use_prompts").get<bool>();
    state.centers.independent = manifest.at("independent_centers").get<bool>();
    if (info) {
      info->seed = manifest.at("seed").get<std::uint64_t>();
      info->phase = manifest.at("phase").get<std::string>();
    }

    const json& entries = manifest.at("tensors");
    auto refs = tensors(state);
    if (entries.size() != refs.size()) {
      throw CheckpointError("checkpoint integrity: expected " + std::to_string(refs.size()) +
                            " tensors, manifest lists " + std::to_string(entries.size()));
    }
    for (std::size_t k = 0; k < refs.size(); ++k) {
      const json& e = entries[k];
      TensorRef& t = refs[k];
      const std::string name = e.at("name").get<std::string>();
      if (name != t.name) {
        throw CheckpointError("checkpoint integrity: tensor " + std::to_string(k) + " is '" +
                              name + "', expected '" + t.name + "'");
      }
      if (e.at("rows").get<Eigen::Index>() != t.rows ||
          e.at("cols").get<Eigen::Index>() != t.cols) {
        throw CheckpointError("checkpoint integrity: shape of " + name +
                              " disagrees with the declared model widths");
      }
      const auto path = dir / e.at("file").get<std::string>();
      if (!std::filesystem::exists(path)) {
        throw CheckpointError("checkpoint integrity: missing tensor file " + path.string());
      }
      const std::string body = read_file(path);
      if (sha256_hex(body) != e.at("sha256").get<std::string>()) {
        throw CheckpointError("checkpoint integrity: digest mismatch for " + path.string());
      }
      const Matrix m = matrix_from_tsv(body, path);
      if (m.rows() != t.rows || m.cols() != t.cols) {
        throw CheckpointError("checkpoint integrity: " + path.string() + " holds a " +
                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                              " matrix");
      }
      Eigen::Map<Matrix>(t.data, t.rows, t.cols) = m;
    }
  } catch (const json::exception& e) {
    throw CheckpointError("checkpoint integrity: malformed manifest: " + std::string(e.what()));
  }
  return state;
}

}  // namespace xgad
