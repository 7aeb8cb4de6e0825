#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>

namespace hyperpart {

using VertexID = uint32_t;
using NetID = uint32_t;
using BlockID = int32_t;
using CommunityID = uint32_t;

// Weights are validated to be positive on input; sums and gains need signed
// 64-bit headroom, so both share one signed representation.
using Weight = int64_t;
using Gain = int64_t;

inline constexpr VertexID kInvalidVertex = std::numeric_limits<VertexID>::max();
inline constexpr NetID kInvalidNet = std::numeric_limits<NetID>::max();
inline constexpr BlockID kInvalidBlock = -1;

}  // namespace hyperpart
