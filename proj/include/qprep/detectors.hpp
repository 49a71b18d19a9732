#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qprep/frame.hpp"
#include "qprep/layout.hpp"
#include "qprep/noise.hpp"

namespace qprep {

enum class DetKind : uint8_t { Round0, Time, FinalRecon };

struct Detector {
  DetKind kind;
  int round;  // Round0: 0; Time: r (compares rounds r-1 and r); FinalRecon: last round
  int stab;   // stabilizer index in layout order
  std::vector<int> meas;  // measurement ordinals whose parity defines the detector
};

struct ObservableDef {
  std::string name;
  std::vector<int> meas;
};

struct DemFault {
  double p = 0.0;
  std::vector<int> dets;   // sorted detector indices flipped
  uint32_t obs = 0;        // observable flip mask
  std::string site;        // provenance of the first merged term
  int merged = 1;          // number of elementary terms merged in
};

enum class PostSelectMode : uint8_t { PrepRound, TwoRounds };

struct DetectorModel {
  std::vector<Detector> detectors;
  std::vector<ObservableDef> observables;
  std::vector<DemFault> faults;
  int rounds = 0;

  // incidence: measurement ordinal -> detectors containing it
  std::vector<std::vector<int>> det_of_meas;
  std::vector<std::vector<int>> obs_of_meas;

  void build_incidence(size_t num_meas) {
    det_of_meas.assign(num_meas, {});
    obs_of_meas.assign(num_meas, {});
    for (size_t d = 0; d < detectors.size(); ++d)
      for (int m : detectors[d].meas) det_of_meas[static_cast<size_t>(m)].push_back(static_cast<int>(d));
    for (size_t o = 0; o < observables.size(); ++o)
      for (int m : observables[o].meas) obs_of_meas[static_cast<size_t>(m)].push_back(static_cast<int>(o));
  }
};

// Detector definitions for a finalized circuit:
//   - round 0 has detectors only for the deterministic stabilizers,
//   - every later round compares consecutive outcomes of each stabilizer,
//   - the final readout reconstructs stabilizers from data measurements and
//     compares them against the last syndrome round.
inline DetectorModel build_detector_model(const Circuit& c, const SurfaceCodeLayout& L) {
  if (c.round_meas.empty()) throw std::invalid_argument("circuit has no syndrome rounds");
  if (static_cast<int>(L.num_qubits) != static_cast<int>(c.num_qubits))
    throw std::invalid_argument("layout does not match circuit");
  DetectorModel dm;
  dm.rounds = static_cast<int>(c.round_meas.size());

  for (int s : L.deterministic_stabs)
    dm.detectors.push_back({DetKind::Round0, 0, s, {c.round_meas[0][static_cast<size_t>(s)]}});

  for (int r = 1; r < dm.rounds; ++r) {
    for (size_t s = 0; s < L.stabilizers.size(); ++s) {
      dm.detectors.push_back({DetKind::Time, r, static_cast<int>(s),
                              {c.round_meas[static_cast<size_t>(r - 1)][s], c.round_meas[static_cast<size_t>(r)][s]}});
    }
  }

  if (c.meta.has_final) {
    int last = dm.rounds - 1;
    for (size_t s = 0; s < L.stabilizers.size(); ++s) {
      const auto& spec = L.stabilizers[s];
      Basis want = spec.kind == StabKind::X ? Basis::X : Basis::Z;
      bool ok = true;
      for (uint32_t q : spec.support) {
        if (c.final_meas[q] < 0 || !c.final_in_recon[q] || c.final_meas_basis[q] != want) ok = false;
      }
      if (!ok) continue;
      Detector det{DetKind::FinalRecon, last, static_cast<int>(s), {}};
      for (uint32_t q : spec.support) det.meas.push_back(c.final_meas[q]);
      det.meas.push_back(c.round_meas[static_cast<size_t>(last)][s]);
      dm.detectors.push_back(std::move(det));
    }

    ObservableDef obs;
    switch (c.meta.final_basis) {
      case Basis::X: {
        obs.name = "LX";
        for (uint32_t q : L.logical_x) obs.meas.push_back(c.final_meas[q]);
        break;
      }
      case Basis::Z: {
        obs.name = "LZ";
        for (uint32_t q : L.logical_z) obs.meas.push_back(c.final_meas[q]);
        break;
      }
      case Basis::Y: {
        obs.name = "LY";
        obs.meas.push_back(c.final_meas[L.center()]);
        for (uint32_t q : L.logical_x)
          if (q != L.center()) obs.meas.push_back(c.final_meas[q]);
        for (uint32_t q : L.logical_z)
          if (q != L.center()) obs.meas.push_back(c.final_meas[q]);
        break;
      }
    }
    dm.observables.push_back(std::move(obs));
  }

  dm.build_incidence(c.num_measurements());
  return dm;
}

// Detectors a given post-selection mode conditions on: the deterministic
// stabilizers of the preparation round, plus the first round-to-round
// comparison in TWO_ROUNDS mode. Post-selection uses syndrome measurements
// only; the readout reconstruction stays out of scope (it serves decoding).
inline std::vector<int> post_selection_scope(const DetectorModel& dm, PostSelectMode mode) {
  int scope_rounds = mode == PostSelectMode::PrepRound ? 1 : 2;
  std::vector<int> out;
  for (size_t d = 0; d < dm.detectors.size(); ++d) {
    const auto& det = dm.detectors[d];
    bool in = false;
    switch (det.kind) {
      case DetKind::Round0: in = true; break;
      case DetKind::Time: in = det.round <= scope_rounds - 1; break;
      case DetKind::FinalRecon: in = false; break;
    }
    if (in) out.push_back(static_cast<int>(d));
  }
  return out;
}

// Maps a single fault's measurement flips to flipped detectors/observables.
inline void fault_signature(const DetectorModel& dm, const FaultEffect& eff,
                            std::vector<int>& dets, uint32_t& obs) {
  std::vector<int> det_parity(dm.detectors.size(), 0);
  uint32_t obs_parity = 0;
  for (size_t m = 0; m < eff.meas_flips.size(); ++m) {
    if (!eff.meas_flips[m]) continue;
    for (int d : dm.det_of_meas[m]) det_parity[static_cast<size_t>(d)] ^= 1;
    for (int o : dm.obs_of_meas[m]) obs_parity ^= 1u << o;
  }
  dets.clear();
  for (size_t d = 0; d < det_parity.size(); ++d)
    if (det_parity[d]) dets.push_back(static_cast<int>(d));
  obs = obs_parity;
}

inline std::string channel_site_name(const NoisyCircuit& nc, size_t channel_index,
                                     const std::string& term_label) {
  const Channel& ch = nc.channels[channel_index];
  const Instruction& ins = nc.circuit.instructions[ch.instr_index];
  std::ostringstream s;
  switch (ins.op) {
    case Op::Reset: s << "R"; break;
    case Op::PrepPlus: s << "RX"; break;
    case Op::H: s << "H"; break;
    case Op::S: s << "S"; break;
    case Op::SqrtX: s << "SX"; break;
    case Op::Cnot: s << "CNOT"; break;
    case Op::Cz: s << "CZ"; break;
    case Op::Measure: s << "M"; break;
    default: s << "?"; break;
  }
  s << "@" << ch.instr_index << "[" << ins.q0;
  if (ins.is_two_qubit()) s << "," << ins.q1;
  s << "]:" << term_label;
  return s.str();
}

// Derives the fault list of the detector error model by propagating every
// elementary channel term; identical (detectors, observables) signatures are
// merged with independent-odds combination.
inline void attach_faults(DetectorModel& dm, const NoisyCircuit& nc) {
  std::map<std::pair<std::vector<int>, uint32_t>, size_t> index;
  for (size_t ci = 0; ci < nc.channels.size(); ++ci) {
    const Channel& ch = nc.channels[ci];
    if (ch.p <= 0.0) continue;
    bool before = ch.kind == ChannelKind::MeasFlip;
    for (const auto& term : channel_terms(nc, ci)) {
      FaultEffect eff = propagate_fault(nc.circuit, ch.instr_index, term.pauli, before);
      std::vector<int> dets;
      uint32_t obs = 0;
      fault_signature(dm, eff, dets, obs);
      if (dets.empty() && obs == 0) continue;
      auto key = std::make_pair(dets, obs);
      auto it = index.find(key);
      if (it == index.end()) {
        index.emplace(key, dm.faults.size());
        dm.faults.push_back({term.prob, dets, obs, channel_site_name(nc, ci, term.label), 1});
      } else {
        DemFault& f = dm.faults[it->second];
        f.p = f.p * (1 - term.prob) + term.prob * (1 - f.p);
        f.merged += 1;
      }
    }
  }
}

inline std::string export_detector_model(const DetectorModel& dm, const SurfaceCodeLayout& L) {
  std::ostringstream out;
  out << "# detectors=" << dm.detectors.size() << " observables=" << dm.observables.size()
      << " faults=" << dm.faults.size() << " rounds=" << dm.rounds << "\n";
  for (size_t d = 0; d < dm.detectors.size(); ++d) {
    const auto& det = dm.detectors[d];
    const char* kind = det.kind == DetKind::Round0 ? "round0"
                       : det.kind == DetKind::Time ? "time"
                                                   : "final";
    out << "detector D" << d << " " << kind << " round=" << det.round << " stab="
        << L.stab_name(det.stab) << " meas=[";
    for (size_t i = 0; i < det.meas.size(); ++i) out << (i ? " " : "") << det.meas[i];
    out << "]\n";
  }
  for (const auto& obs : dm.observables) {
    out << "observable " << obs.name << " meas=[";
    for (size_t i = 0; i < obs.meas.size(); ++i) out << (i ? " " : "") << obs.meas[i];
    out << "]\n";
  }
  out.precision(12);
  for (const auto& f : dm.faults) {
    out << "fault p=" << f.p << " dets=[";
    for (size_t i = 0; i < f.dets.size(); ++i) out << (i ? " " : "") << "D" << f.dets[i];
    out << "] obs=" << f.obs << " merged=" << f.merged << " site=" << f.site << "\n";
  }
  return out.str();
}

}  // namespace qprep
