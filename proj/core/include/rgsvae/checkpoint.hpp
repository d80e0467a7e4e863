#pragma once

#include <stdexcept>
#include <string>

#include "rgsvae/train.hpp"

namespace rgsvae {

/// Structured failure while loading a checkpoint: bad magic, unsupported
/// version, truncation, or shapes that disagree with the model spec.
struct checkpoint_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr uint32_t kCheckpointVersion = 1;

/// File layout: magic "RGSVAE", format-version u32, record count u32, then
/// per record (name-length u32, name bytes, rank u32, dims u32 x rank,
/// payload of IEEE-754 doubles). All integers and payload words are
/// little-endian. Records are sorted by name, so save -> load -> save is
/// byte-identical.
void save_checkpoint(const TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

}  // namespace rgsvae
