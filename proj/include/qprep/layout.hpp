#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qprep {

// Five-way partition of the data qubits used by the preparation protocol.
// The two logical strings cross at the center; the four quadrants are
// assigned pinwheel-style so that each on-axis qubit lands in the quadrant
// counterclockwise of its arm. Regions I and III hold |+> qubits, II and IV
// hold |0>.
enum class Region : uint8_t { Center, I, II, III, IV };

inline const char* region_name(Region r) {
  switch (r) {
    case Region::Center: return "C";
    case Region::I: return "I";
    case Region::II: return "II";
    case Region::III: return "III";
    case Region::IV: return "IV";
  }
  return "?";
}

enum class StabKind : uint8_t { Z = 0, X = 1 };

struct Coord {
  int row = 0;
  int col = 0;
  bool operator==(const Coord&) const = default;
};

struct StabilizerSpec {
  StabKind kind;
  std::vector<uint32_t> support;  // data qubit ids, sorted
  uint32_t ancilla;               // ancilla qubit id
  int label;                      // 1-based ordinal within kind, row-major
  Coord plaq;                     // plaquette coordinate (row, col), row/col in [-1, d-1]
  bool deterministic = false;     // fixed first-round outcome for the prep product state

  // Data qubit at the given plaquette corner, or -1 if outside the grid.
  // Corners: 0=NW, 1=NE, 2=SW, 3=SE.
  int corner(int which, int distance) const {
    int r = plaq.row + (which >> 1);
    int c = plaq.col + (which & 1);
    if (r < 0 || r >= distance || c < 0 || c >= distance) return -1;
    return r * distance + c;
  }
};

// Distance-d rotated surface code with the id scheme:
//   data qubit (r, c)      -> id r*d + c
//   ancillas               -> d*d + k, Z-stabilizers first then X, each
//                             row-major over plaquette coordinates
// X-type boundaries sit on the top/bottom edges and Z-type on the left/right,
// so logical X runs vertically through the center column and logical Z
// horizontally through the center row.
struct SurfaceCodeLayout {
  int distance = 0;
  uint32_t num_data = 0;
  uint32_t num_qubits = 0;
  std::vector<StabilizerSpec> stabilizers;  // Z block then X block
  std::vector<Region> region;               // indexed by data qubit id
  std::vector<uint32_t> logical_x;          // center column, sorted
  std::vector<uint32_t> logical_z;          // center row, sorted
  std::vector<int> deterministic_stabs;     // indices into `stabilizers`

  uint32_t center() const {
    int m = (distance - 1) / 2;
    return static_cast<uint32_t>(m * distance + m);
  }

  Coord data_coord(uint32_t q) const {
    return {static_cast<int>(q) / distance, static_cast<int>(q) % distance};
  }

  bool is_data(uint32_t q) const { return q < num_data; }

  const StabilizerSpec& stab_of_ancilla(uint32_t anc) const {
    return stabilizers.at(anc - num_data);
  }

  // "Z3", "X1", ... as in the distance-3 figure labeling.
  std::string stab_name(int index) const {
    const auto& s = stabilizers[index];
    return std::string(s.kind == StabKind::X ? "X" : "Z") + std::to_string(s.label);
  }

  bool prepared_plus(uint32_t data_q) const {
    Region r = region[data_q];
    return r == Region::I || r == Region::III;
  }
};

inline SurfaceCodeLayout build_layout(int distance) {
  if (distance < 3 || distance % 2 == 0)
    throw std::invalid_argument("distance must be an odd integer >= 3");

  SurfaceCodeLayout L;
  L.distance = distance;
  L.num_data = static_cast<uint32_t>(distance * distance);
  const int d = distance;
  const int mid = (d - 1) / 2;

  // Region partition: the four diagonal wedges around the crossing point of
  // the logical strings. North/south wedges (I, III) take the |+> qubits and
  // include the main diagonal; east/west (II, IV) take |0> and the
  // anti-diagonal. This is what makes half of each stabilizer kind
  // deterministic at every distance.
  L.region.assign(L.num_data, Region::Center);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      uint32_t q = static_cast<uint32_t>(r * d + c);
      int u = r - mid, v = c - mid;
      if (u == 0 && v == 0) {
        L.region[q] = Region::Center;
      } else if (std::abs(u) > std::abs(v) || u == v) {
        L.region[q] = u < 0 ? Region::I : Region::III;
      } else {
        L.region[q] = v > 0 ? Region::II : Region::IV;
      }
    }
  }

  // Plaquette (pr, pc) covers data {pr,pr+1} x {pc,pc+1}; parity picks the
  // type (even sum = Z). Boundary rows keep X-type halves, boundary columns
  // keep Z-type halves.
  auto plaq_exists = [&](int pr, int pc, StabKind kind) {
    bool z_type = ((pr + pc) & 1) == 0;
    if (z_type != (kind == StabKind::Z)) return false;
    if (pr >= 0 && pr <= d - 2 && pc >= 0 && pc <= d - 2) return true;
    if ((pr == -1 || pr == d - 1) && pc >= 0 && pc <= d - 2) return kind == StabKind::X;
    if ((pc == -1 || pc == d - 1) && pr >= 0 && pr <= d - 2) return kind == StabKind::Z;
    return false;
  };

  for (StabKind kind : {StabKind::Z, StabKind::X}) {
    int label = 1;
    for (int pr = -1; pr <= d - 1; ++pr) {
      for (int pc = -1; pc <= d - 1; ++pc) {
        if (!plaq_exists(pr, pc, kind)) continue;
        StabilizerSpec s;
        s.kind = kind;
        s.plaq = {pr, pc};
        s.label = label++;
        for (int corner = 0; corner < 4; ++corner) {
          int q = s.corner(corner, d);
          if (q >= 0) s.support.push_back(static_cast<uint32_t>(q));
        }
        std::sort(s.support.begin(), s.support.end());
        L.stabilizers.push_back(std::move(s));
      }
    }
  }
  for (size_t i = 0; i < L.stabilizers.size(); ++i)
    L.stabilizers[i].ancilla = L.num_data + static_cast<uint32_t>(i);
  L.num_qubits = L.num_data + static_cast<uint32_t>(L.stabilizers.size());

  // Logical strings: X along the center column, Z along the center row.
  for (int r = 0; r < d; ++r) L.logical_x.push_back(static_cast<uint32_t>(r * d + mid));
  for (int c = 0; c < d; ++c) L.logical_z.push_back(static_cast<uint32_t>(mid * d + c));

  // Deterministic stabilizers: X-type with support entirely in the |+>
  // regions, Z-type entirely in the |0> regions.
  for (size_t i = 0; i < L.stabilizers.size(); ++i) {
    auto& s = L.stabilizers[i];
    bool det = true;
    for (uint32_t q : s.support) {
      bool plus = L.prepared_plus(q);
      bool want_plus = (s.kind == StabKind::X);
      if (L.region[q] == Region::Center || plus != want_plus) det = false;
    }
    s.deterministic = det;
    if (det) L.deterministic_stabs.push_back(static_cast<int>(i));
  }
  return L;
}

enum class PrepKind : uint8_t { Zero, Plus, Magic };

// Initial product state of the data qubits: |+> on I and III, |0> on II and
// IV, and the target single-qubit state on the center.
inline std::vector<PrepKind> initial_product_state(const SurfaceCodeLayout& L) {
  std::vector<PrepKind> prep(L.num_data, PrepKind::Zero);
  for (uint32_t q = 0; q < L.num_data; ++q) {
    if (L.region[q] == Region::Center)
      prep[q] = PrepKind::Magic;
    else if (L.prepared_plus(q))
      prep[q] = PrepKind::Plus;
  }
  return prep;
}

// Structured text export of the geometry, consumed by golden tests and
// handy when checking a layout by eye. Also documents the quadrant
// convention, which the protocol description leaves open.
inline std::string export_layout(const SurfaceCodeLayout& L) {
  std::ostringstream out;
  out << "layout distance=" << L.distance << "\n";
  out << "# regions: diagonal wedges around the center; I=north(+), II=east(0),\n";
  out << "# III=south(+), IV=west(0); main diagonal joins I/III, anti-diagonal II/IV\n";
  out << "data qubits:\n";
  for (uint32_t q = 0; q < L.num_data; ++q) {
    Coord c = L.data_coord(q);
    out << "  D" << q << " (" << c.row << "," << c.col << ") region="
        << region_name(L.region[q]) << "\n";
  }
  out << "stabilizers:\n";
  for (size_t i = 0; i < L.stabilizers.size(); ++i) {
    const auto& s = L.stabilizers[i];
    out << "  " << L.stab_name(static_cast<int>(i)) << " ancilla=" << s.ancilla
        << " plaq=(" << s.plaq.row << "," << s.plaq.col << ") support=[";
    for (size_t k = 0; k < s.support.size(); ++k)
      out << (k ? " " : "") << "D" << s.support[k];
    out << "]" << (s.deterministic ? " deterministic" : "") << "\n";
  }
  auto print_ids = [&](const char* name, const std::vector<uint32_t>& ids) {
    out << name << " = [";
    for (size_t k = 0; k < ids.size(); ++k) out << (k ? " " : "") << "D" << ids[k];
    out << "]\n";
  };
  print_ids("logical_x", L.logical_x);
  print_ids("logical_z", L.logical_z);
  return out.str();
}

}  // namespace qprep
