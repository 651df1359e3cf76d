#include "bricks/ldraw.hpp"

#include <ostream>

namespace bricks {

void write_ldraw(std::ostream& out, const AssemblyGraph& graph, const std::string& name, int color) {
  out << "0 " << name << "\n0 Name: " << name << ".ldr\n";
  for (const BrickPose& p : graph.nodes()) {
    // Part origin: centre of the top face; the long side lies along LDraw x.
    const int cx = p.anchor.x * kLduPerStud + p.span_x() * kLduPerStud / 2;
    const int cz = p.anchor.y * kLduPerStud + p.span_y() * kLduPerStud / 2;
    const int cy = -(p.anchor.z + 1) * kLduPerLevel;
    out << "1 " << color << ' ' << cx << ' ' << cy << ' ' << cz << ' ';
    if (p.dir == 0) {
      out << "1 0 0 0 1 0 0 0 1";
    } else {
      out << "0 0 1 0 1 0 -1 0 0";
    }
    out << " 3001.dat\n";
  }
  out << "0\n";
}

}  // namespace bricks
