#include <ostream>

#include "bbm/simulation.hpp"

namespace bbm {

void write_particles(std::ostream& out, const Realization& real) {
  const auto old_precision = out.precision(17);
  out << "index\tlabel\tparent\tbirth_time\tdeath_time\tbirth_position\t"
         "death_position\tchild_count\tkilled\n";
  const auto& arena = real.particles();
  for (std::size_t i = 0; i < arena.size(); ++i) {
    const ParticleRecord& r = arena[i];
    out << i << '\t' << real.label_string(static_cast<ParticleIndex>(i))
        << '\t'
        << (r.parent == kNoParent ? std::int64_t{-1}
                                  : static_cast<std::int64_t>(r.parent))
        << '\t' << r.birth_time << '\t' << r.death_time << '\t'
        << r.birth_position << '\t' << r.death_position << '\t'
        << r.child_count << '\t' << (r.killed ? 1 : 0) << '\n';
  }
  out.precision(old_precision);
}

void write_snapshots(std::ostream& out, const Realization& real) {
  const auto old_precision = out.precision(17);
  out << "time\tparticle\tposition\n";
  for (const Snapshot& snap : real.snapshots()) {
    for (const SnapshotEntry& e : snap.entries) {
      out << snap.time << '\t' << e.particle << '\t' << e.position << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace bbm
