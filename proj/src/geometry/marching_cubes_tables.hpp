#pragma once

#include <array>
#include <cstdint>

namespace windmil::geometry::detail {

// Corner c of a cube sits at offset kCorner[c]; edge e joins kEdge[e][0] and
// kEdge[e][1]. kEdgeTable[case] flags the crossed edges and kTriTable[case]
// lists edge triples terminated by -1. Case bit c is set when corner c is
// below the iso value.
inline constexpr std::array<std::array<int, 3>, 8> kCorner = {{
    {0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1}, {0, 1, 0}, {1, 1, 0}, {1, 1, 1}, {0, 1, 1}}};

inline constexpr std::array<std::array<int, 2>, 12> kEdge = {{
    {0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6}, {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}}};

extern const std::array<std::uint16_t, 256> kEdgeTable;
extern const std::array<std::array<std::int8_t, 16>, 256> kTriTable;

}  // namespace windmil::geometry::detail
