#pragma once

#include <complex>
#include <sstream>
#include <string>
#include <vector>

#include "qprep/detectors.hpp"
#include "qprep/frame.hpp"
#include "qprep/rational.hpp"

namespace qprep {

enum class MagicType : uint8_t { HType, TType };

inline const char* magic_type_name(MagicType t) { return t == MagicType::HType ? "H" : "T"; }

enum class FaultClass : uint8_t { Detected, Logical, Harmless };

struct LedgerEntry {
  std::string site;
  std::string term;
  FaultClass cls;
  Rational weight;  // contribution if Logical
};

// Exact first-order coefficients of the undetected logical error rate
// p_L = a p1 + b p2 + c p_init under post-selection on the first
// `post_rounds` rounds.
struct CoefficientReport {
  Rational a, b, c;
  GateSet gate_set;
  MagicType magic_type;
  int distance = 0;
  int post_rounds = 0;
  uint64_t detected = 0, logical = 0, harmless = 0;
  std::vector<LedgerEntry> ledger;
};

inline double predict_first_order(const CoefficientReport& r, const NoiseParams& params) {
  NoiseParams p = params.resolved();
  return r.a.to_double() * p.p1 + r.b.to_double() * p.p2 + r.c.to_double() * p.p_init;
}

namespace detail {

using cplx = std::complex<double>;

struct Qubit1 {
  cplx a{1, 0}, b{0, 0};  // amplitudes of |0>, |1>

  void sqrt_x() {
    // exp(-i pi X / 4) = ((1, -i), (-i, 1)) / sqrt(2)
    cplx na = (a + cplx(0, -1) * b) / std::sqrt(2.0);
    cplx nb = (cplx(0, -1) * a + b) / std::sqrt(2.0);
    a = na;
    b = nb;
  }
  void zrot(double angle) { b *= std::exp(cplx(0, angle)); }

  // |<psi|P|psi>| = 1 iff the Pauli stabilizes the state up to phase.
  bool stabilized_by(Pauli p) const {
    cplx amp{0, 0};
    switch (p) {
      case Pauli::I: return true;
      case Pauli::X: amp = std::conj(a) * b + std::conj(b) * a; break;
      case Pauli::Y: amp = std::conj(a) * cplx(0, -1) * b + std::conj(b) * cplx(0, 1) * a; break;
      case Pauli::Z: amp = std::conj(a) * a - std::conj(b) * b; break;
    }
    return std::abs(std::abs(amp) - 1.0) < 1e-9;
  }
};

// Pure-state trace of the center qubit through the preparation sequence:
// state right after each instruction index that acts on the center before
// the first syndrome layer.
inline std::vector<std::pair<size_t, Qubit1>> magic_state_trace(const Circuit& c, uint32_t center) {
  std::vector<std::pair<size_t, Qubit1>> trace;
  Qubit1 q;
  for (size_t i = 0; i < c.instructions.size(); ++i) {
    const auto& ins = c.instructions[i];
    if (ins.q0 != center) continue;
    if (ins.op == Op::Reset) {
      q = Qubit1{};
      trace.push_back({i, q});
    } else if (ins.magic_site && ins.op == Op::SqrtX) {
      q.sqrt_x();
      trace.push_back({i, q});
    } else if (ins.magic_site && ins.op == Op::ZRot) {
      q.zrot(ins.angle);
      trace.push_back({i, q});
    } else {
      break;  // first non-preparation use of the center
    }
  }
  return trace;
}

inline bool odd_overlap_z(const std::vector<uint8_t>& residual, const std::vector<uint32_t>& qs) {
  int parity = 0;
  for (uint32_t q : qs) parity ^= (residual[q] >> 1) & 1;
  return parity;
}

inline bool odd_overlap_x(const std::vector<uint8_t>& residual, const std::vector<uint32_t>& qs) {
  int parity = 0;
  for (uint32_t q : qs) parity ^= residual[q] & 1;
  return parity;
}

}  // namespace detail

// Enumerates every single p1/p2/p_init fault term of the preparation circuit
// with `post_rounds` syndrome rounds, classifies each as DETECTED (flips a
// post-selected detector), LOGICAL (undetected and anticommuting with a
// logical string, or corrupting the magic qubit before encoding) or
// HARMLESS, and accumulates the exact coefficients.
inline CoefficientReport enumerate_coefficients(const SurfaceCodeLayout& L, GateSet gate_set,
                                                MagicType magic_type, int post_rounds,
                                                bool keep_ledger = false) {
  if (post_rounds < 1 || post_rounds > 2)
    throw std::invalid_argument("post_rounds must be 1 or 2");

  // Representative generic angles; the classification is angle-independent
  // away from the cardinal points, and the coefficients must not depend on
  // the target state within its type.
  double theta = magic_type == MagicType::HType ? kPi / 2 : 0.867234517;
  double phi = 0.543219876;
  MagicPrepKind kind =
      magic_type == MagicType::HType ? MagicPrepKind::Equatorial : MagicPrepKind::General;

  Circuit c = build_prep_circuit(L, theta, phi, gate_set, kind);
  append_syndrome_rounds(c, L, post_rounds - 1);
  c.finalize(L);

  NoiseParams np;
  np.p1 = np.p2 = np.p_init = 0.5;  // placeholder; enumeration is symbolic
  NoisyCircuit nc = apply_noise(c, np);
  DetectorModel dm = build_detector_model(c, L);

  const uint32_t center = L.center();
  auto trace = detail::magic_state_trace(c, center);
  auto state_after = [&](size_t instr_index) -> const detail::Qubit1* {
    for (const auto& [idx, st] : trace)
      if (idx == instr_index) return &st;
    return nullptr;
  };

  CoefficientReport report;
  report.gate_set = gate_set;
  report.magic_type = magic_type;
  report.distance = L.distance;
  report.post_rounds = post_rounds;

  for (size_t ci = 0; ci < nc.channels.size(); ++ci) {
    const Channel& ch = nc.channels[ci];
    if (ch.kind == ChannelKind::MeasFlip) continue;  // no first-order p_meas term

    Rational weight = ch.kind == ChannelKind::Depolarize1   ? Rational(1, 3)
                      : ch.kind == ChannelKind::Depolarize2 ? Rational(1, 15)
                                                            : Rational(1);

    const detail::Qubit1* pre_encoding = state_after(ch.instr_index);
    for (const auto& term : channel_terms(nc, ci)) {
      FaultClass cls;
      if (pre_encoding) {
        // Fault on the magic qubit before encoding: never detected (the
        // deterministic stabilizers do not touch the center and a static
        // data error repeats its syndrome), logical iff it moves the state.
        cls = pre_encoding->stabilized_by(term.pauli.at(center)) ? FaultClass::Harmless
                                                                 : FaultClass::Logical;
      } else {
        FaultEffect eff = propagate_fault(c, ch.instr_index, term.pauli, false);
        std::vector<int> dets;
        uint32_t obs = 0;
        fault_signature(dm, eff, dets, obs);
        if (!dets.empty()) {
          cls = FaultClass::Detected;
        } else {
          bool flips_x = detail::odd_overlap_z(eff.residual, L.logical_x);
          bool flips_z = detail::odd_overlap_x(eff.residual, L.logical_z);
          cls = (flips_x || flips_z) ? FaultClass::Logical : FaultClass::Harmless;
        }
      }
      switch (cls) {
        case FaultClass::Detected: ++report.detected; break;
        case FaultClass::Harmless: ++report.harmless; break;
        case FaultClass::Logical:
          ++report.logical;
          if (ch.kind == ChannelKind::Depolarize1) report.a += weight;
          else if (ch.kind == ChannelKind::Depolarize2) report.b += weight;
          else report.c += weight;
          break;
      }
      if (keep_ledger) {
        report.ledger.push_back({channel_site_name(nc, ci, term.label), term.label, cls,
                                 cls == FaultClass::Logical ? weight : Rational(0)});
      }
    }
  }
  return report;
}

// Closed-form coefficients from the published tables, used as golden values.
inline Rational table_a(GateSet gs, MagicType mt, int d, int rounds) {
  if (gs == GateSet::Cnot) return mt == MagicType::HType ? Rational(2, 3) : Rational(5, 3);
  if (rounds == 1) return Rational((mt == MagicType::HType ? 10 : 13) + 4 * d, 3);
  return Rational((mt == MagicType::HType ? 4 : 7) + 3 * d, 3);
}

inline Rational table_b(int d, int rounds) {
  if (rounds == 1) return d == 3 ? Rational(94, 15) : Rational(38 + 20 * d, 15);
  return Rational(2 + 12 * d, 15);
}

inline Rational table_c() { return Rational(1); }

inline std::string export_report(const CoefficientReport& r) {
  std::ostringstream out;
  out << "distance=" << r.distance << " gate_set=" << gate_set_name(r.gate_set)
      << " type=" << magic_type_name(r.magic_type) << " rounds=" << r.post_rounds << "\n";
  out << "a=" << r.a.str() << " b=" << r.b.str() << " c=" << r.c.str() << "\n";
  out << "detected=" << r.detected << " logical=" << r.logical << " harmless=" << r.harmless << "\n";
  for (const auto& e : r.ledger) {
    const char* cls = e.cls == FaultClass::Detected ? "DETECTED"
                      : e.cls == FaultClass::Logical ? "LOGICAL"
                                                     : "HARMLESS";
    out << e.site << " " << cls;
    if (e.cls == FaultClass::Logical) out << " " << e.weight.str();
    out << "\n";
  }
  return out.str();
}

}  // namespace qprep
