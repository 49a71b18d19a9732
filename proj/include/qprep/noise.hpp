#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qprep/circuit.hpp"
#include "qprep/pauli.hpp"

namespace qprep {

struct NoiseParams {
  double p1 = 0.0;      // single-qubit depolarizing
  double p2 = 0.0;      // two-qubit depolarizing
  double p_init = 0.0;  // reset/preparation flip
  double p_meas = 0.0;  // measurement flip (projecting)
  std::optional<double> uniform;

  static NoiseParams uniform_rate(double p) {
    NoiseParams n;
    n.uniform = p;
    return n;
  }

  NoiseParams resolved() const {
    NoiseParams n = *this;
    if (uniform) n.p1 = n.p2 = n.p_init = n.p_meas = *uniform;
    n.uniform.reset();
    for (double p : {n.p1, n.p2, n.p_init, n.p_meas})
      if (p < 0.0 || p > 1.0) throw std::invalid_argument("noise probability outside [0, 1]");
    return n;
  }

  bool zero() const {
    NoiseParams n = resolved();
    return n.p1 == 0 && n.p2 == 0 && n.p_init == 0 && n.p_meas == 0;
  }
};

enum class ChannelKind : uint8_t { Depolarize1, Depolarize2, InitFlip, MeasFlip };

struct Channel {
  size_t instr_index;
  ChannelKind kind;
  double p;  // total error probability of the channel
};

// A circuit with exactly one noise channel per noise-site instruction.
// Channels sit after gates and resets, and before measurements.
struct NoisyCircuit {
  Circuit circuit;
  std::vector<Channel> channels;
  NoiseParams params;  // resolved

  // channel index per instruction, -1 for none
  std::vector<int> channel_of_instr;
};

inline NoisyCircuit apply_noise(const Circuit& circuit, const NoiseParams& params) {
  NoisyCircuit nc;
  nc.circuit = circuit;
  nc.params = params.resolved();
  nc.channel_of_instr.assign(circuit.instructions.size(), -1);
  for (size_t i = 0; i < circuit.instructions.size(); ++i) {
    const auto& ins = circuit.instructions[i];
    if (!ins.noise_site()) continue;
    Channel ch{i, ChannelKind::MeasFlip, 0.0};
    switch (ins.op) {
      case Op::Reset:
      case Op::PrepPlus:
        ch.kind = ChannelKind::InitFlip;
        ch.p = nc.params.p_init;
        break;
      case Op::H:
      case Op::S:
      case Op::SqrtX:
        ch.kind = ChannelKind::Depolarize1;
        ch.p = nc.params.p1;
        break;
      case Op::Cnot:
      case Op::Cz:
        ch.kind = ChannelKind::Depolarize2;
        ch.p = nc.params.p2;
        break;
      case Op::Measure:
        ch.kind = ChannelKind::MeasFlip;
        ch.p = nc.params.p_meas;
        break;
      default:
        continue;
    }
    nc.channel_of_instr[i] = static_cast<int>(nc.channels.size());
    nc.channels.push_back(ch);
  }
  return nc;
}

// The measurement flip is modeled as a basis-anticommuting Pauli applied
// just before an ideal measurement, i.e. the outcome flips and the qubit
// projects to the flipped state.
inline Pauli meas_flip_pauli(Basis b) {
  return b == Basis::X ? Pauli::Z : Pauli::X;
}

struct FaultTerm {
  PauliString pauli;
  double prob;
  std::string label;
};

// Elementary fault terms of a channel: 3 equally weighted Paulis for 1q
// depolarizing, 15 for 2q, single flips for init/measure.
inline std::vector<FaultTerm> channel_terms(const NoisyCircuit& nc, size_t channel_index) {
  const Channel& ch = nc.channels[channel_index];
  const Instruction& ins = nc.circuit.instructions[ch.instr_index];
  std::vector<FaultTerm> terms;
  auto pauli_name = [](Pauli p) { return std::string(1, pauli_char(p)); };
  switch (ch.kind) {
    case ChannelKind::Depolarize1:
      for (uint8_t v = 1; v <= 3; ++v) {
        PauliString p;
        p.set(ins.q0, static_cast<Pauli>(v));
        terms.push_back({p, ch.p / 3.0, pauli_name(static_cast<Pauli>(v))});
      }
      break;
    case ChannelKind::Depolarize2:
      for (uint8_t v = 1; v < 16; ++v) {
        PauliString p;
        if (v >> 2) p.set(ins.q0, static_cast<Pauli>(v >> 2));
        if (v & 3) p.set(ins.q1, static_cast<Pauli>(v & 3));
        terms.push_back({p, ch.p / 15.0,
                         pauli_name(static_cast<Pauli>(v >> 2)) + pauli_name(static_cast<Pauli>(v & 3))});
      }
      break;
    case ChannelKind::InitFlip: {
      PauliString p;
      p.set(ins.q0, ins.op == Op::PrepPlus ? Pauli::Z : Pauli::X);
      terms.push_back({p, ch.p, "flip"});
      break;
    }
    case ChannelKind::MeasFlip: {
      PauliString p;
      p.set(ins.q0, meas_flip_pauli(ins.basis));
      terms.push_back({p, ch.p, "flip"});
      break;
    }
  }
  return terms;
}

}  // namespace qprep
