#pragma once

#include <iosfwd>
#include <string>

#include "bricks/assembly.hpp"

namespace bricks {

inline constexpr int kLduPerStud = 20;
inline constexpr int kLduPerLevel = 24;

/// LDraw model of the assembly: one type-1 line per brick referencing part
/// 3001 (2x4 brick). LDraw's y axis points down, so world (x, y, z) maps to
/// LDraw (x, -z, y), which keeps the handedness.
void write_ldraw(std::ostream& out, const AssemblyGraph& graph, const std::string& name,
                 int color = 4);

}  // namespace bricks
