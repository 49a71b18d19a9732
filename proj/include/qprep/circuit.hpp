#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qprep/layout.hpp"

namespace qprep {

enum class GateSet : uint8_t { Cnot, Cz };
enum class Basis : uint8_t { X, Y, Z };
// Equatorial states (polar angle pi/2) need a single sqrt(X) plus a virtual
// Z rotation; everything else uses the two-gate sqrt(X).Z(pi-theta).sqrt(X).Z(phi)
// decomposition.
enum class MagicPrepKind : uint8_t { Equatorial, General };

inline const char* gate_set_name(GateSet g) { return g == GateSet::Cnot ? "CNOT" : "CZ"; }
inline const char* basis_name(Basis b) { return b == Basis::X ? "X" : (b == Basis::Y ? "Y" : "Z"); }

constexpr double kPi = 3.14159265358979323846;

enum class Op : uint8_t { Reset, PrepPlus, H, S, SqrtX, ZRot, Cnot, Cz, Measure, Tick };

struct Instruction {
  Op op = Op::Tick;
  uint32_t q0 = 0;
  uint32_t q1 = 0;          // second qubit for CNOT/CZ (CNOT: q0=control)
  Basis basis = Basis::Z;   // Measure only
  double angle = 0.0;       // ZRot only, in [0, 2*pi)
  bool magic_site = false;  // part of the magic-state preparation sequence

  bool is_two_qubit() const { return op == Op::Cnot || op == Op::Cz; }

  // Z rotations are virtual (frame bookkeeping on hardware) and error-free;
  // every other gate, reset and measurement is a noise site.
  bool noise_site() const {
    return op != Op::Tick && op != Op::ZRot;
  }

  bool operator==(const Instruction& o) const {
    return op == o.op && q0 == o.q0 && q1 == o.q1 && basis == o.basis &&
           std::abs(angle - o.angle) < 1e-12 && magic_site == o.magic_site;
  }
};

struct CircuitMeta {
  int distance = 0;
  GateSet gate_set = GateSet::Cnot;
  MagicPrepKind prep = MagicPrepKind::General;
  double theta = 0.0;
  double phi = 0.0;
  int rounds = 0;  // syndrome-extraction rounds, including the preparation round
  bool has_final = false;
  Basis final_basis = Basis::Z;
  bool extra_qubits = true;
  std::string schedule = "A:ne B:Xnw.Zse C:Xse.Znw D:sw";
};

struct Circuit {
  CircuitMeta meta;
  uint32_t num_qubits = 0;
  std::vector<Instruction> instructions;

  // Bookkeeping derived by finalize():
  std::vector<uint32_t> meas_qubit;             // measurement ordinal -> qubit
  std::vector<std::vector<int>> round_meas;     // [round][stab index] -> ordinal
  std::vector<int> final_meas;                  // data qubit -> ordinal or -1
  std::vector<Basis> final_meas_basis;          // data qubit -> basis
  std::vector<uint8_t> final_in_recon;          // data qubit usable for stabilizer reconstruction

  size_t num_measurements() const { return meas_qubit.size(); }

  void append(Instruction ins) { instructions.push_back(ins); }
  void tick() { instructions.push_back({}); }

  void finalize(const SurfaceCodeLayout& L);
};

namespace detail {

// Two-qubit layer schedule (four layers, "zigzag"): the corner of each
// plaquette touched per layer. X-type runs NE,NW,SE,SW and Z-type
// NE,SE,NW,SW; boundary stabilizers skip layers whose corner is missing.
// Corner codes: 0=NW 1=NE 2=SW 3=SE.
inline int schedule_corner(StabKind kind, int layer) {
  static const int x_order[4] = {1, 0, 3, 2};
  static const int z_order[4] = {1, 3, 0, 2};
  return kind == StabKind::X ? x_order[layer] : z_order[layer];
}

struct DataInteraction {
  int layer;
  bool x_type;
  uint32_t ancilla;
};

// Per-data-qubit interactions within one round, ordered by layer.
inline std::vector<std::vector<DataInteraction>> interactions_by_data(const SurfaceCodeLayout& L) {
  std::vector<std::vector<DataInteraction>> out(L.num_data);
  for (const auto& s : L.stabilizers) {
    for (int layer = 0; layer < 4; ++layer) {
      int q = s.corner(schedule_corner(s.kind, layer), L.distance);
      if (q < 0) continue;
      out[static_cast<size_t>(q)].push_back({layer, s.kind == StabKind::X, s.ancilla});
    }
  }
  for (auto& v : out)
    std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.layer < b.layer; });
  return out;
}

inline double norm_angle(double a) {
  a = std::fmod(a, 2 * kPi);
  if (a < 0) a += 2 * kPi;
  if (std::abs(a) < 1e-12 || std::abs(a - 2 * kPi) < 1e-12) return 0.0;
  return a;
}

// Emits one syndrome-extraction round. For the CZ set, data qubits get
// Hadamard basis changes around their X-type interactions, with adjacent
// H pairs inside the round merged away. The state-preparation Hadamards
// belong to the preparation stage and are never merged into the cycle.
inline void emit_round(Circuit& c, const SurfaceCodeLayout& L, bool first_round) {
  const GateSet gs = c.meta.gate_set;
  const auto interactions = interactions_by_data(L);

  if (gs == GateSet::Cnot) {
    c.tick();
    for (const auto& s : L.stabilizers) {
      if (s.kind == StabKind::X)
        c.append({Op::PrepPlus, s.ancilla});
      else if (!first_round)
        c.append({Op::Reset, s.ancilla});
    }
    for (int layer = 0; layer < 4; ++layer) {
      c.tick();
      for (const auto& s : L.stabilizers) {
        int q = s.corner(schedule_corner(s.kind, layer), L.distance);
        if (q < 0) continue;
        if (s.kind == StabKind::X)
          c.append({Op::Cnot, s.ancilla, static_cast<uint32_t>(q)});
        else
          c.append({Op::Cnot, static_cast<uint32_t>(q), s.ancilla});
      }
    }
    c.tick();
    for (const auto& s : L.stabilizers)
      c.append({Op::Measure, s.ancilla, 0, s.kind == StabKind::X ? Basis::X : Basis::Z});
    return;
  }

  // CZ set. Five single-qubit slots surround the four CZ layers.
  std::vector<std::vector<uint32_t>> h_slot(5);
  if (!first_round) {
    c.tick();
    for (const auto& s : L.stabilizers) c.append({Op::Reset, s.ancilla});
  }
  for (const auto& s : L.stabilizers) {
    h_slot[0].push_back(s.ancilla);
    h_slot[4].push_back(s.ancilla);
  }
  for (uint32_t q = 0; q < L.num_data; ++q) {
    const auto& inter = interactions[q];
    // Opening/closing H around each maximal run of X-type interactions.
    for (size_t i = 0; i < inter.size(); ++i) {
      if (!inter[i].x_type) continue;
      bool run_start = (i == 0) || !inter[i - 1].x_type;
      bool run_end = (i + 1 == inter.size()) || !inter[i + 1].x_type;
      if (run_start) h_slot[static_cast<size_t>(inter[i].layer)].push_back(q);
      if (run_end) h_slot[static_cast<size_t>(inter[i].layer) + 1].push_back(q);
    }
  }
  for (int layer = 0; layer <= 4; ++layer) {
    if (!h_slot[layer].empty()) {
      c.tick();
      std::sort(h_slot[layer].begin(), h_slot[layer].end());
      for (uint32_t q : h_slot[static_cast<size_t>(layer)]) c.append({Op::H, q});
    }
    if (layer == 4) break;
    c.tick();
    for (const auto& s : L.stabilizers) {
      int q = s.corner(schedule_corner(s.kind, layer), L.distance);
      if (q < 0) continue;
      c.append({Op::Cz, s.ancilla, static_cast<uint32_t>(q)});
    }
  }
  c.tick();
  for (const auto& s : L.stabilizers)
    c.append({Op::Measure, s.ancilla, 0, Basis::Z});
}

}  // namespace detail

inline MagicPrepKind magic_prep_kind_for(double theta) {
  return std::abs(theta - kPi / 2) < 1e-9 ? MagicPrepKind::Equatorial : MagicPrepKind::General;
}

// Builds the preparation circuit: initialize every qubit, prepare the
// region product state and the center target state, then run one full
// syndrome-extraction round and measure all ancillas.
inline Circuit build_prep_circuit(const SurfaceCodeLayout& L, double theta, double phi,
                                  GateSet gate_set, MagicPrepKind prep) {
  if (prep == MagicPrepKind::Equatorial && std::abs(theta - kPi / 2) > 1e-9)
    throw std::invalid_argument("equatorial preparation requires theta = pi/2");

  Circuit c;
  c.meta.distance = L.distance;
  c.meta.gate_set = gate_set;
  c.meta.prep = prep;
  c.meta.theta = theta;
  c.meta.phi = phi;
  c.num_qubits = L.num_qubits;

  const uint32_t center = L.center();
  for (uint32_t q = 0; q < L.num_qubits; ++q) c.append({Op::Reset, q});

  auto magic_gate = [&](Op op, double angle = 0.0) {
    c.tick();
    Instruction ins{op, center};
    ins.angle = detail::norm_angle(angle);
    ins.magic_site = true;
    if (op != Op::ZRot || ins.angle != 0.0) c.append(ins);
  };

  if (gate_set == GateSet::Cnot) {
    c.tick();
    for (uint32_t q = 0; q < L.num_data; ++q)
      if (L.prepared_plus(q)) c.append({Op::PrepPlus, q});
  } else {
    c.tick();
    for (uint32_t q = 0; q < L.num_data; ++q)
      if (L.prepared_plus(q)) c.append({Op::H, q});
  }
  magic_gate(Op::SqrtX);
  if (prep == MagicPrepKind::Equatorial) {
    magic_gate(Op::ZRot, phi + kPi / 2);
  } else {
    magic_gate(Op::ZRot, kPi - theta);
    magic_gate(Op::SqrtX);
    magic_gate(Op::ZRot, phi);
  }

  detail::emit_round(c, L, /*first_round=*/true);
  c.meta.rounds = 1;
  return c;
}

inline void append_syndrome_rounds(Circuit& c, const SurfaceCodeLayout& L, int k) {
  if (k < 0) throw std::invalid_argument("round count must be >= 0");
  if (c.meta.has_final) throw std::logic_error("cannot extend a circuit after final measurement");
  for (int i = 0; i < k; ++i) detail::emit_round(c, L, /*first_round=*/false);
  c.meta.rounds += k;
}

// Final transversal readout. X and Z measure every data qubit in that basis.
// The Y readout measures the center in Y, the logical-X arm in X and the
// logical-Z arm in Z; the remaining data qubits are measured in their
// region basis either way, but only count toward stabilizer reconstruction
// when `extra_qubits` is set.
inline void append_logical_measurement(Circuit& c, const SurfaceCodeLayout& L, Basis basis,
                                       bool extra_qubits = true) {
  if (c.meta.has_final) throw std::logic_error("final measurement already appended");
  c.tick();
  for (uint32_t q = 0; q < L.num_data; ++q) {
    Basis b = basis;
    if (basis == Basis::Y) {
      if (q == L.center())
        b = Basis::Y;
      else if (L.prepared_plus(q))
        b = Basis::X;
      else
        b = Basis::Z;
    }
    c.append({Op::Measure, q, 0, b});
  }
  c.meta.has_final = true;
  c.meta.final_basis = basis;
  c.meta.extra_qubits = extra_qubits;
}

inline void Circuit::finalize(const SurfaceCodeLayout& L) {
  meas_qubit.clear();
  round_meas.clear();
  final_meas.assign(L.num_data, -1);
  final_meas_basis.assign(L.num_data, Basis::Z);
  final_in_recon.assign(L.num_data, 0);

  std::vector<int> anc_occurrence(num_qubits, 0);
  std::vector<int> tick_use(num_qubits, -1);
  int tick_id = 0;
  for (const auto& ins : instructions) {
    if (ins.op == Op::Tick) {
      ++tick_id;
      continue;
    }
    auto touch = [&](uint32_t q) {
      if (q >= num_qubits) throw std::logic_error("qubit id out of range");
      if (tick_use[q] == tick_id)
        throw std::logic_error("qubit used twice within one timestep");
      tick_use[q] = tick_id;
    };
    touch(ins.q0);
    if (ins.is_two_qubit()) touch(ins.q1);
    if (ins.op != Op::Measure) continue;

    int ordinal = static_cast<int>(meas_qubit.size());
    meas_qubit.push_back(ins.q0);
    if (!L.is_data(ins.q0)) {
      int stab = static_cast<int>(ins.q0 - L.num_data);
      int round = anc_occurrence[ins.q0]++;
      if (static_cast<size_t>(round) >= round_meas.size())
        round_meas.emplace_back(L.stabilizers.size(), -1);
      if (round_meas[static_cast<size_t>(round)][static_cast<size_t>(stab)] != -1)
        throw std::logic_error("ancilla measured twice in one round");
      round_meas[static_cast<size_t>(round)][static_cast<size_t>(stab)] = ordinal;
    } else {
      final_meas[ins.q0] = ordinal;
      final_meas_basis[ins.q0] = ins.basis;
    }
  }
  for (const auto& round : round_meas)
    for (int m : round)
      if (m < 0) throw std::logic_error("incomplete syndrome round");
  meta.rounds = static_cast<int>(round_meas.size());

  if (meta.has_final) {
    for (uint32_t q = 0; q < L.num_data; ++q) {
      if (final_meas[q] < 0) continue;
      if (meta.final_basis == Basis::Y)
        final_in_recon[q] = (meta.extra_qubits && q != L.center()) ? 1 : 0;
      else
        final_in_recon[q] = 1;
    }
  }
}

// ---- Text format ----------------------------------------------------------
// One instruction per line, TICK lines separate timesteps, `# key=value`
// metadata header. Diff-friendly; parses back to an identical circuit.

inline std::string serialize_circuit(const Circuit& c) {
  std::ostringstream out;
  out.precision(17);
  out << "# distance=" << c.meta.distance << "\n";
  out << "# gate_set=" << gate_set_name(c.meta.gate_set) << "\n";
  out << "# prep=" << (c.meta.prep == MagicPrepKind::Equatorial ? "equatorial" : "general") << "\n";
  out << "# theta=" << c.meta.theta << "\n";
  out << "# phi=" << c.meta.phi << "\n";
  out << "# rounds=" << c.meta.rounds << "\n";
  out << "# qubits=" << c.num_qubits << "\n";
  if (c.meta.has_final) {
    out << "# final_basis=" << basis_name(c.meta.final_basis) << "\n";
    out << "# extra_qubits=" << (c.meta.extra_qubits ? 1 : 0) << "\n";
  }
  out << "# schedule=" << c.meta.schedule << "\n";
  for (const auto& ins : c.instructions) {
    switch (ins.op) {
      case Op::Tick: out << "TICK\n"; break;
      case Op::Reset: out << "RESET " << ins.q0 << "\n"; break;
      case Op::PrepPlus: out << "PREP_PLUS " << ins.q0 << "\n"; break;
      case Op::H: out << "H " << ins.q0 << "\n"; break;
      case Op::S: out << "S " << ins.q0 << "\n"; break;
      case Op::SqrtX: out << (ins.magic_site ? "SQRT_X* " : "SQRT_X ") << ins.q0 << "\n"; break;
      case Op::ZRot:
        out << (ins.magic_site ? "Z_ROT* " : "Z_ROT ") << ins.angle << " " << ins.q0 << "\n";
        break;
      case Op::Cnot: out << "CNOT " << ins.q0 << " " << ins.q1 << "\n"; break;
      case Op::Cz: out << "CZ " << ins.q0 << " " << ins.q1 << "\n"; break;
      case Op::Measure:
        out << "MEASURE " << basis_name(ins.basis) << " " << ins.q0 << "\n";
        break;
    }
  }
  return out.str();
}

inline Circuit parse_circuit(const std::string& text) {
  Circuit c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(2, eq - 2);
      std::string val = line.substr(eq + 1);
      if (key == "distance") c.meta.distance = std::stoi(val);
      else if (key == "gate_set") c.meta.gate_set = (val == "CZ") ? GateSet::Cz : GateSet::Cnot;
      else if (key == "prep")
        c.meta.prep = (val == "equatorial") ? MagicPrepKind::Equatorial : MagicPrepKind::General;
      else if (key == "theta") c.meta.theta = std::stod(val);
      else if (key == "phi") c.meta.phi = std::stod(val);
      else if (key == "rounds") c.meta.rounds = std::stoi(val);
      else if (key == "qubits") c.num_qubits = static_cast<uint32_t>(std::stoul(val));
      else if (key == "final_basis") {
        c.meta.has_final = true;
        c.meta.final_basis = val == "X" ? Basis::X : (val == "Y" ? Basis::Y : Basis::Z);
      } else if (key == "extra_qubits") c.meta.extra_qubits = val == "1";
      else if (key == "schedule") c.meta.schedule = val;
      continue;
    }
    std::istringstream ls(line);
    std::string name;
    ls >> name;
    Instruction ins;
    auto one_qubit = [&](Op op, bool magic = false) {
      ins.op = op;
      ins.magic_site = magic;
      ls >> ins.q0;
    };
    if (name == "TICK") { c.tick(); continue; }
    else if (name == "RESET") one_qubit(Op::Reset);
    else if (name == "PREP_PLUS") one_qubit(Op::PrepPlus);
    else if (name == "H") one_qubit(Op::H);
    else if (name == "S") one_qubit(Op::S);
    else if (name == "SQRT_X") one_qubit(Op::SqrtX);
    else if (name == "SQRT_X*") one_qubit(Op::SqrtX, true);
    else if (name == "Z_ROT" || name == "Z_ROT*") {
      ins.op = Op::ZRot;
      ins.magic_site = name.back() == '*';
      ls >> ins.angle >> ins.q0;
    } else if (name == "CNOT" || name == "CZ") {
      ins.op = name == "CNOT" ? Op::Cnot : Op::Cz;
      ls >> ins.q0 >> ins.q1;
    } else if (name == "MEASURE") {
      std::string b;
      ls >> b >> ins.q0;
      ins.op = Op::Measure;
      ins.basis = b == "X" ? Basis::X : (b == "Y" ? Basis::Y : Basis::Z);
    } else {
      throw std::runtime_error("unknown instruction: " + name);
    }
    if (ls.fail()) throw std::runtime_error("malformed instruction line: " + line);
    c.append(ins);
  }
  return c;
}

}  // namespace qprep
