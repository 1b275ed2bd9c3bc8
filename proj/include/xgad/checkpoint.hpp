#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "xgad/model.hpp"

namespace xgad {

// Checkpoint directory failed its integrity checks (missing tensor, shape
// or digest mismatch, inconsistent manifest).
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointInfo {
  std::uint64_t seed = 0;
  std::string phase;
};

// Writes manifest.json plus one row-major TSV per tensor into `dir`.
void save_checkpoint(const ModelState& state, const std::filesystem::path& dir,
                     const CheckpointInfo& info);

ModelState load_checkpoint(const std::filesystem::path& dir, CheckpointInfo* info = nullptr);

}  // namespace xgad
