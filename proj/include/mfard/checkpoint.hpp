#pragma once

#include "mfard/mf_solver.hpp"
#include "mfard/rng.hpp"
#include "mfard/sgld.hpp"

#include <cstdint>
#include <filesystem>

namespace mfard {

// Versioned binary checkpoint. Layout (native little-endian):
//   "MFARDCKP" | u32 version | u32 kind | hyper | f64 sigma_b | i64 step |
//   i64 rows | i64 cols | W row-major | a | u8 has_bias [| b] | rng state text |
//   particles only: rho | f64 s_f | ARD config
inline constexpr char kCheckpointMagic[8] = {'M', 'F', 'A', 'R', 'D', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NetworkCheckpoint {
    ModelParams params;
    std::int64_t step = 0;
    Rng rng;
};

struct ParticleCheckpoint {
    ParticleState state;
    ArdConfig ard;
    std::int64_t step = 0;
    Rng rng;
};

void save_checkpoint(const std::filesystem::path& path, const NetworkCheckpoint& ck);
void save_checkpoint(const std::filesystem::path& path, const ParticleCheckpoint& ck);

// Throw InputDomainError on a bad magic, unknown version or kind mismatch.
NetworkCheckpoint load_network_checkpoint(const std::filesystem::path& path);
ParticleCheckpoint load_particle_checkpoint(const std::filesystem::path& path);

}  // namespace mfard
