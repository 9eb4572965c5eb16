#pragma once

#include <cstdint>
#include <filesystem>

#include "dnefc/network.hpp"
#include "dnefc/trainer.hpp"

namespace dnefc {

struct Checkpoint {
    NetworkSpec spec;
    FlatGenome parent;
    std::uint64_t generation = 0;
    std::uint64_t master_seed = 0;
    TrainConfig config;
    std::uint64_t perfect_streak = 0;

    TrainerState state() const { return TrainerState{parent, generation, perfect_streak}; }
};

// Layout (little-endian):
//   "DNEC0001"
//   u64 spec_json_bytes, spec JSON (UTF-8)
//   u64 param_count, param_count x f32
//   footer: u64 generation, u64 master_seed, f64 sigma, u64 episodes_per_generation,
//           f64 elite_fraction, u64 max_generations, u64 early_stop_patience,
//           u64 perfect_streak
//   "DNECEND0"
inline constexpr char kCheckpointMagic[9] = "DNEC0001";
inline constexpr char kCheckpointTrailer[9] = "DNECEND0";

/// Written to a temporary sibling and renamed into place, so a crash never
/// leaves a half-written checkpoint at `path`.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Throws FormatError on bad magic, truncation or trailing bytes.
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint make_checkpoint(const Trainer& trainer, const TrainerState& state);

} // namespace dnefc
