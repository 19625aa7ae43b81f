#ifndef TENPROJ_CHECKPOINT_HPP
#define TENPROJ_CHECKPOINT_HPP

#include <filesystem>

#include "tenproj/model.hpp"

namespace tenproj {

// Layout (all integers little-endian):
//   8 bytes   magic "TENPROJ\0"
//   u32       version (1)
//   u32       layer count L
//   L times:  u32 kind, 3 x u32 input shape, 3 x u32 output shape,
//             u32 block count B, B x (u32 rows, u32 cols)
//   then, layer by layer and block by block in declaration order, the
//   parameter values as IEEE-754 binary64 little-endian, column-major.

inline constexpr char kCheckpointMagic[8] = {'T', 'E', 'N', 'P', 'R', 'O', 'J', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(NetworkModel& model, const std::filesystem::path& path);

/// Overwrites the parameters of `model`. Throws std::runtime_error if the
/// file is malformed or its layer table does not match the model.
void load_checkpoint(NetworkModel& model, const std::filesystem::path& path);

}  // namespace tenproj

#endif  // TENPROJ_CHECKPOINT_HPP
