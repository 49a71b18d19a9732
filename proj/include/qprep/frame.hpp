#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "qprep/noise.hpp"
#include "qprep/rng.hpp"
#include "qprep/tableau.hpp"

namespace qprep {

// Measurement flip bits relative to the noiseless reference, bit-packed over
// shots: row m holds `words` 64-shot words for measurement ordinal m.
struct MeasFlipTable {
  size_t num_meas = 0;
  size_t words = 0;
  std::vector<uint64_t> bits;

  void resize(size_t meas, size_t w) {
    num_meas = meas;
    words = w;
    bits.assign(meas * w, 0);
  }
  uint64_t* row(size_t m) { return bits.data() + m * words; }
  const uint64_t* row(size_t m) const { return bits.data() + m * words; }
};

// Pauli-frame Monte Carlo sampler, 64 shots per machine word. Gauge
// randomization (a 50% Z after every reset, X after every |+> prep) makes
// nondeterministic measurements come out correctly distributed and
// correlated, so sampling stays exact for stabilizer circuits.
class FrameSampler {
 public:
  explicit FrameSampler(const NoisyCircuit& nc, size_t words_per_block = 16)
      : nc_(nc), words_(words_per_block) {}

  size_t shots_per_block() const { return words_ * 64; }

  // Deterministic in (seed, block_index) regardless of how blocks are
  // distributed over workers.
  void sample_block(uint64_t seed, uint64_t block_index, MeasFlipTable& out) {
    const Circuit& c = nc_.circuit;
    const size_t nshots = shots_per_block();
    out.resize(c.num_measurements(), words_);
    x_.assign(c.num_qubits * words_, 0);
    z_.assign(c.num_qubits * words_, 0);
    Prng rng(seed, block_index);

    size_t meas = 0;
    for (size_t i = 0; i < c.instructions.size(); ++i) {
      const Instruction& ins = c.instructions[i];
      int ch = nc_.channel_of_instr[i];
      if (ins.op == Op::Measure && ch >= 0)
        apply_channel(nc_.channels[static_cast<size_t>(ch)], ins, rng, nshots);
      apply_gate(ins, rng, out, meas);
      if (ins.op != Op::Measure && ch >= 0)
        apply_channel(nc_.channels[static_cast<size_t>(ch)], ins, rng, nshots);
    }
  }

 private:
  uint64_t* xrow(uint32_t q) { return x_.data() + q * words_; }
  uint64_t* zrow(uint32_t q) { return z_.data() + q * words_; }

  void apply_gate(const Instruction& ins, Prng& rng, MeasFlipTable& out, size_t& meas) {
    uint64_t* xq = ins.op == Op::Tick ? nullptr : xrow(ins.q0);
    uint64_t* zq = ins.op == Op::Tick ? nullptr : zrow(ins.q0);
    switch (ins.op) {
      case Op::Tick:
        break;
      case Op::Reset:
        for (size_t w = 0; w < words_; ++w) {
          xq[w] = 0;
          zq[w] = rng.next();  // gauge
        }
        break;
      case Op::PrepPlus:
        for (size_t w = 0; w < words_; ++w) {
          zq[w] = 0;
          xq[w] = rng.next();  // gauge
        }
        break;
      case Op::H:
        for (size_t w = 0; w < words_; ++w) std::swap(xq[w], zq[w]);
        break;
      case Op::S:
        for (size_t w = 0; w < words_; ++w) zq[w] ^= xq[w];
        break;
      case Op::SqrtX:
        for (size_t w = 0; w < words_; ++w) xq[w] ^= zq[w];
        break;
      case Op::ZRot: {
        int k = frame_zrot_turns(ins, xq, words_);
        if (k & 1)
          for (size_t w = 0; w < words_; ++w) zq[w] ^= xq[w];
        break;
      }
      case Op::Cnot: {
        uint64_t* xt = xrow(ins.q1);
        uint64_t* zt = zrow(ins.q1);
        for (size_t w = 0; w < words_; ++w) {
          xt[w] ^= xq[w];
          zq[w] ^= zt[w];
        }
        break;
      }
      case Op::Cz: {
        uint64_t* xb = xrow(ins.q1);
        uint64_t* zb = zrow(ins.q1);
        for (size_t w = 0; w < words_; ++w) {
          uint64_t xa = xq[w];
          zq[w] ^= xb[w];
          zb[w] ^= xa;
        }
        break;
      }
      case Op::Measure: {
        uint64_t* dst = out.row(meas++);
        switch (ins.basis) {
          case Basis::Z:
            for (size_t w = 0; w < words_; ++w) dst[w] = xq[w];
            break;
          case Basis::X:
            for (size_t w = 0; w < words_; ++w) dst[w] = zq[w];
            break;
          case Basis::Y:
            for (size_t w = 0; w < words_; ++w) dst[w] = xq[w] ^ zq[w];
            break;
        }
        break;
      }
    }
  }

  // Generic-angle Z rotations appear only in the magic preparation, before
  // any fault can reach them; a frame with X support there would be a logic
  // error.
  static int frame_zrot_turns(const Instruction& ins, const uint64_t* xq, size_t words) {
    double q = ins.angle / (kPi / 2);
    int k = static_cast<int>(std::lround(q));
    if (std::abs(q - k) <= 1e-9) return ((k % 4) + 4) % 4;
    for (size_t w = 0; w < words; ++w)
      if (xq[w]) throw std::runtime_error("frame reached a non-Clifford Z rotation");
    return 0;
  }

  template <typename F>
  void for_each_error(Prng& rng, double p, size_t nshots, F&& f) {
    if (p <= 0.0) return;
    uint64_t pos = rng.next_geometric_skip(p);
    while (pos < nshots) {
      f(pos);
      uint64_t skip = rng.next_geometric_skip(p);
      if (skip == UINT64_MAX) break;
      pos += 1 + skip;
    }
  }

  void flip(uint64_t* row, uint64_t shot) { row[shot / 64] ^= 1ULL << (shot % 64); }

  void apply_pauli_bit(uint32_t q, uint8_t v, uint64_t shot) {
    if (v & 1) flip(xrow(q), shot);
    if (v & 2) flip(zrow(q), shot);
  }

  void apply_channel(const Channel& ch, const Instruction& ins, Prng& rng, size_t nshots) {
    switch (ch.kind) {
      case ChannelKind::Depolarize1:
        for_each_error(rng, ch.p, nshots, [&](uint64_t s) {
          apply_pauli_bit(ins.q0, static_cast<uint8_t>(1 + rng.next_below(3)), s);
        });
        break;
      case ChannelKind::Depolarize2:
        for_each_error(rng, ch.p, nshots, [&](uint64_t s) {
          uint8_t v = static_cast<uint8_t>(1 + rng.next_below(15));
          if (v >> 2) apply_pauli_bit(ins.q0, v >> 2, s);
          if (v & 3) apply_pauli_bit(ins.q1, v & 3, s);
        });
        break;
      case ChannelKind::InitFlip: {
        uint8_t v = ins.op == Op::PrepPlus ? 2 : 1;  // Z on |+>, X on |0>
        for_each_error(rng, ch.p, nshots, [&](uint64_t s) { apply_pauli_bit(ins.q0, v, s); });
        break;
      }
      case ChannelKind::MeasFlip: {
        uint8_t v = meas_flip_pauli(ins.basis) == Pauli::Z ? 2 : 1;
        for_each_error(rng, ch.p, nshots, [&](uint64_t s) { apply_pauli_bit(ins.q0, v, s); });
        break;
      }
    }
  }

  const NoisyCircuit& nc_;
  size_t words_;
  std::vector<uint64_t> x_, z_;
};

// Deterministic single-fault propagation (one shot, no noise, no gauge).
// The fault is applied before its instruction for measurement-flip sites and
// after it otherwise, matching where the channels sit.
struct FaultEffect {
  std::vector<uint8_t> meas_flips;          // per measurement ordinal
  std::vector<uint8_t> residual;            // per qubit, (x|z<<1) at end of circuit
};

inline FaultEffect propagate_fault(const Circuit& c, size_t instr_index, const PauliString& fault,
                                   bool before_instr) {
  FaultEffect eff;
  eff.meas_flips.assign(c.num_measurements(), 0);
  eff.residual.assign(c.num_qubits, 0);
  std::vector<uint8_t> fx(c.num_qubits, 0), fz(c.num_qubits, 0);
  auto inject = [&]() {
    for (const auto& [q, p] : fault.ops()) {
      uint8_t v = static_cast<uint8_t>(p);
      fx[q] ^= v & 1;
      fz[q] ^= (v >> 1) & 1;
    }
  };
  size_t meas = 0;
  for (size_t i = 0; i < c.instructions.size(); ++i) {
    const Instruction& ins = c.instructions[i];
    if (i == instr_index && before_instr) inject();
    switch (ins.op) {
      case Op::Tick:
        break;
      case Op::Reset:
      case Op::PrepPlus:
        fx[ins.q0] = 0;
        fz[ins.q0] = 0;
        break;
      case Op::H:
        std::swap(fx[ins.q0], fz[ins.q0]);
        break;
      case Op::S:
        fz[ins.q0] ^= fx[ins.q0];
        break;
      case Op::SqrtX:
        fx[ins.q0] ^= fz[ins.q0];
        break;
      case Op::ZRot: {
        double qq = ins.angle / (kPi / 2);
        int k = static_cast<int>(std::lround(qq));
        bool cardinal = std::abs(qq - k) <= 1e-9;
        if (!cardinal && fx[ins.q0])
          throw std::runtime_error("fault frame reached a non-Clifford Z rotation");
        if (cardinal && (k & 1)) fz[ins.q0] ^= fx[ins.q0];
        break;
      }
      case Op::Cnot:
        fx[ins.q1] ^= fx[ins.q0];
        fz[ins.q0] ^= fz[ins.q1];
        break;
      case Op::Cz: {
        uint8_t xa = fx[ins.q0];
        fz[ins.q0] ^= fx[ins.q1];
        fz[ins.q1] ^= xa;
        break;
      }
      case Op::Measure: {
        uint8_t flipbit = 0;
        switch (ins.basis) {
          case Basis::Z: flipbit = fx[ins.q0]; break;
          case Basis::X: flipbit = fz[ins.q0]; break;
          case Basis::Y: flipbit = fx[ins.q0] ^ fz[ins.q0]; break;
        }
        eff.meas_flips[meas++] = flipbit;
        break;
      }
    }
    if (i == instr_index && !before_instr) inject();
  }
  for (uint32_t q = 0; q < c.num_qubits; ++q)
    eff.residual[q] = static_cast<uint8_t>(fx[q] | (fz[q] << 1));
  return eff;
}

}  // namespace qprep
