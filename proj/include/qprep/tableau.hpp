#pragma once

#include <bit>
#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qprep/circuit.hpp"
#include "qprep/pauli.hpp"

namespace qprep {

// Aaronson-Gottesman stabilizer tableau with destabilizers, rows bit-packed
// into 64-bit words. Rows 0..n-1 are destabilizers, n..2n-1 stabilizers.
class Tableau {
 public:
  explicit Tableau(size_t n)
      : n_(n), words_((n + 63) / 64), xs_(2 * n * words_, 0), zs_(2 * n * words_, 0), sign_(2 * n, 0) {
    for (size_t i = 0; i < n; ++i) {
      xs_[i * words_ + i / 64] |= 1ULL << (i % 64);          // destabilizer i = X_i
      zs_[(n + i) * words_ + i / 64] |= 1ULL << (i % 64);    // stabilizer i = Z_i
    }
  }

  size_t num_qubits() const { return n_; }

  void h(size_t q) {
    size_t w = q / 64;
    uint64_t m = 1ULL << (q % 64);
    for (size_t r = 0; r < 2 * n_; ++r) {
      uint64_t& x = xs_[r * words_ + w];
      uint64_t& z = zs_[r * words_ + w];
      uint64_t xb = x & m, zb = z & m;
      sign_[r] ^= (xb != 0) && (zb != 0);  // Y -> -Y
      if ((xb != 0) != (zb != 0)) { x ^= m; z ^= m; }
    }
  }

  void s(size_t q) {  // X->Y, Y->-X, Z->Z
    size_t w = q / 64;
    uint64_t m = 1ULL << (q % 64);
    for (size_t r = 0; r < 2 * n_; ++r) {
      uint64_t x = xs_[r * words_ + w] & m;
      uint64_t& z = zs_[r * words_ + w];
      sign_[r] ^= (x != 0) && ((z & m) != 0);
      z ^= x;
    }
  }

  void z(size_t q) {  // X->-X, Y->-Y
    size_t w = q / 64;
    uint64_t m = 1ULL << (q % 64);
    for (size_t r = 0; r < 2 * n_; ++r) sign_[r] ^= (xs_[r * words_ + w] & m) != 0;
  }

  void x(size_t q) {  // Z->-Z, Y->-Y
    size_t w = q / 64;
    uint64_t m = 1ULL << (q % 64);
    for (size_t r = 0; r < 2 * n_; ++r) sign_[r] ^= (zs_[r * words_ + w] & m) != 0;
  }

  void sdg(size_t q) { s(q); z(q); }

  void sqrt_x(size_t q) {  // X->X, Y->Z, Z->-Y
    size_t w = q / 64;
    uint64_t m = 1ULL << (q % 64);
    for (size_t r = 0; r < 2 * n_; ++r) {
      uint64_t& x = xs_[r * words_ + w];
      uint64_t z = zs_[r * words_ + w] & m;
      sign_[r] ^= (z != 0) && ((x & m) == 0);
      x ^= z;
    }
  }

  void cnot(size_t c, size_t t) {
    size_t wc = c / 64, wt = t / 64;
    uint64_t mc = 1ULL << (c % 64), mt = 1ULL << (t % 64);
    for (size_t r = 0; r < 2 * n_; ++r) {
      bool xc = xs_[r * words_ + wc] & mc;
      bool zc = zs_[r * words_ + wc] & mc;
      bool xt = xs_[r * words_ + wt] & mt;
      bool zt = zs_[r * words_ + wt] & mt;
      sign_[r] ^= xc && zt && (xt == zc);
      if (xc) xs_[r * words_ + wt] ^= mt;
      if (zt) zs_[r * words_ + wc] ^= mc;
    }
  }

  void cz(size_t a, size_t b) {
    h(b);
    cnot(a, b);
    h(b);
  }

  void zrot_quarter(size_t q, int k) {
    switch (((k % 4) + 4) % 4) {
      case 0: break;
      case 1: s(q); break;
      case 2: z(q); break;
      case 3: sdg(q); break;
    }
  }

  // Z-basis measurement; `forced` picks the outcome when it is random.
  // Returns (outcome bit, deterministic flag). Bit b means eigenvalue (-1)^b.
  std::pair<bool, bool> measure_z(size_t q, bool forced) {
    size_t w = q / 64;
    uint64_t m = 1ULL << (q % 64);
    size_t p = 2 * n_;
    for (size_t r = n_; r < 2 * n_; ++r) {
      if (xs_[r * words_ + w] & m) { p = r; break; }
    }
    if (p < 2 * n_) {
      for (size_t r = 0; r < 2 * n_; ++r) {
        if (r != p && r != p - n_ && (xs_[r * words_ + w] & m)) row_mul(r, p);
      }
      copy_row(p - n_, p);
      zero_row(p);
      zs_[p * words_ + w] |= m;
      sign_[p] = forced;
      return {forced, false};
    }
    scratch_clear();
    for (size_t r = 0; r < n_; ++r) {
      if (xs_[r * words_ + w] & m) scratch_mul(r + n_);
    }
    return {scratch_sign_, true};
  }

  std::pair<bool, bool> measure_basis(Basis b, size_t q, bool forced) {
    switch (b) {
      case Basis::Z: return measure_z(q, forced);
      case Basis::X: {
        h(q);
        auto r = measure_z(q, forced);
        h(q);
        return r;
      }
      case Basis::Y: {
        sdg(q);
        h(q);
        auto r = measure_z(q, forced);
        h(q);
        s(q);
        return r;
      }
    }
    throw std::logic_error("bad basis");
  }

  void reset_z(size_t q) {
    auto [bit, det] = measure_z(q, false);
    (void)det;
    if (bit) x(q);
  }

  void reset_plus(size_t q) {
    reset_z(q);
    h(q);
  }

  // Applies a sparse Pauli as an error (global phase ignored).
  void apply_pauli(const PauliString& p) {
    for (const auto& [q, op] : p.ops()) {
      uint8_t v = static_cast<uint8_t>(op);
      if (v & 1) x(q);
      if (v & 2) z(q);
    }
  }

  // Expectation of a Hermitian Pauli observable: +1/-1 deterministic, 0 random.
  int expectation(const PauliString& obs) {
    if (obs.phase() != 0 && obs.phase() != 2)
      throw std::invalid_argument("non-Hermitian observable");
    for (size_t r = n_; r < 2 * n_; ++r) {
      if (anticommutes_row(r, obs)) return 0;
    }
    scratch_clear();
    for (size_t r = 0; r < n_; ++r) {
      if (anticommutes_row(r, obs)) scratch_mul(r + n_);
    }
    PauliString residual = scratch_pauli();
    if (residual.ops() != obs.ops())
      throw std::logic_error("expectation: observable not in stabilizer span");
    int sign = scratch_sign_ ? -1 : 1;
    if (obs.phase() == 2) sign = -sign;
    return sign;
  }

 private:
  bool anticommutes_row(size_t r, const PauliString& obs) const {
    int anti = 0;
    for (const auto& [q, op] : obs.ops()) {
      uint8_t v = static_cast<uint8_t>(op);
      bool ox = v & 1, oz = (v >> 1) & 1;
      bool rx = xs_[r * words_ + q / 64] >> (q % 64) & 1;
      bool rz = zs_[r * words_ + q / 64] >> (q % 64) & 1;
      anti ^= (rx && oz) ^ (rz && ox);
    }
    return anti;
  }

  void copy_row(size_t dst, size_t src) {
    for (size_t w = 0; w < words_; ++w) {
      xs_[dst * words_ + w] = xs_[src * words_ + w];
      zs_[dst * words_ + w] = zs_[src * words_ + w];
    }
    sign_[dst] = sign_[src];
  }

  void zero_row(size_t r) {
    for (size_t w = 0; w < words_; ++w) {
      xs_[r * words_ + w] = 0;
      zs_[r * words_ + w] = 0;
    }
    sign_[r] = 0;
  }

  void row_mul(size_t h, size_t i) {
    int phase = 2 * (sign_[h] + sign_[i]);
    for (size_t w = 0; w < words_; ++w) {
      uint64_t x1 = xs_[h * words_ + w], z1 = zs_[h * words_ + w];
      uint64_t x2 = xs_[i * words_ + w], z2 = zs_[i * words_ + w];
      phase += phase_contrib(x1, z1, x2, z2);
      xs_[h * words_ + w] = x1 ^ x2;
      zs_[h * words_ + w] = z1 ^ z2;
    }
    phase &= 3;
    assert(phase == 0 || phase == 2);
    sign_[h] = (phase == 2);
  }

  // i-exponent (mod 4, as +1/-1 counts) from multiplying (x1,z1)*(x2,z2).
  static int phase_contrib(uint64_t x1, uint64_t z1, uint64_t x2, uint64_t z2) {
    uint64_t plus = (x2 & z2 & z1 & ~x1) | (x2 & ~z2 & z1 & x1) | (~x2 & z2 & x1 & ~z1);
    uint64_t minus = (x2 & z2 & x1 & ~z1) | (x2 & ~z2 & z1 & ~x1) | (~x2 & z2 & x1 & z1);
    return std::popcount(plus) - std::popcount(minus);
  }

  void scratch_clear() {
    scratch_x_.assign(words_, 0);
    scratch_z_.assign(words_, 0);
    scratch_sign_ = false;
  }

  void scratch_mul(size_t row) {
    int phase = 2 * (int(scratch_sign_) + sign_[row]);
    for (size_t w = 0; w < words_; ++w) {
      uint64_t x1 = scratch_x_[w], z1 = scratch_z_[w];
      uint64_t x2 = xs_[row * words_ + w], z2 = zs_[row * words_ + w];
      phase += phase_contrib(x1, z1, x2, z2);
      scratch_x_[w] = x1 ^ x2;
      scratch_z_[w] = z1 ^ z2;
    }
    phase &= 3;
    assert(phase == 0 || phase == 2);
    scratch_sign_ = (phase == 2);
  }

  PauliString scratch_pauli() const {
    PauliString p;
    for (size_t q = 0; q < n_; ++q) {
      bool xb = scratch_x_[q / 64] >> (q % 64) & 1;
      bool zb = scratch_z_[q / 64] >> (q % 64) & 1;
      if (xb || zb) p.set(static_cast<uint32_t>(q), static_cast<Pauli>((xb ? 1 : 0) | (zb ? 2 : 0)));
    }
    return p;
  }

  size_t n_, words_;
  std::vector<uint64_t> xs_, zs_;
  std::vector<uint8_t> sign_;
  std::vector<uint64_t> scratch_x_, scratch_z_;
  bool scratch_sign_ = false;
};

// Zero-noise tableau execution of a circuit. Random measurement outcomes are
// collapsed to 0, so the returned bits are one valid sample; the flags mark
// which outcomes are deterministic.
struct Reference {
  std::vector<uint8_t> bits;
  std::vector<uint8_t> deterministic;
};

inline int zrot_quarter_turns(double angle) {
  double q = angle / (kPi / 2);
  int k = static_cast<int>(std::lround(q));
  if (std::abs(q - k) > 1e-9)
    throw std::invalid_argument("non-cardinal Z rotation in stabilizer simulation");
  return k;
}

inline void apply_instruction(Tableau& t, const Instruction& ins, bool forced,
                              std::pair<bool, bool>* meas_out = nullptr) {
  switch (ins.op) {
    case Op::Tick: break;
    case Op::Reset: t.reset_z(ins.q0); break;
    case Op::PrepPlus: t.reset_plus(ins.q0); break;
    case Op::H: t.h(ins.q0); break;
    case Op::S: t.s(ins.q0); break;
    case Op::SqrtX: t.sqrt_x(ins.q0); break;
    case Op::ZRot: t.zrot_quarter(ins.q0, zrot_quarter_turns(ins.angle)); break;
    case Op::Cnot: t.cnot(ins.q0, ins.q1); break;
    case Op::Cz: t.cz(ins.q0, ins.q1); break;
    case Op::Measure: {
      auto r = t.measure_basis(ins.basis, ins.q0, forced);
      if (meas_out) *meas_out = r;
      break;
    }
  }
}

inline Reference reference_run(const Circuit& c) {
  Tableau t(c.num_qubits);
  Reference ref;
  ref.bits.reserve(c.num_measurements());
  for (const auto& ins : c.instructions) {
    std::pair<bool, bool> m{false, false};
    apply_instruction(t, ins, /*forced=*/false, &m);
    if (ins.op == Op::Measure) {
      ref.bits.push_back(m.first);
      ref.deterministic.push_back(m.second);
    }
  }
  return ref;
}

// Tableau re-run that injects one Pauli error after instruction
// `site_index`. Random outcomes are forced to `forced_bits`, so passing the
// frame-predicted bits checks every deterministic outcome against frame
// propagation: the returned bits equal `forced_bits` exactly iff the two
// engines agree.
inline std::vector<uint8_t> tableau_run_with_fault(const Circuit& c, size_t site_index,
                                                   const PauliString& fault,
                                                   const std::vector<uint8_t>& forced_bits) {
  Tableau t(c.num_qubits);
  std::vector<uint8_t> bits;
  for (size_t i = 0; i < c.instructions.size(); ++i) {
    const auto& ins = c.instructions[i];
    std::pair<bool, bool> m{false, false};
    bool forced = ins.op == Op::Measure && forced_bits[bits.size()];
    apply_instruction(t, ins, forced, &m);
    if (ins.op == Op::Measure) bits.push_back(m.first);
    if (i == site_index) t.apply_pauli(fault);
  }
  return bits;
}

}  // namespace qprep
