#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace qprep {

// Single-qubit Pauli encoded as (x, z) bits: 00=I, 10=X, 11=Y, 01=Z.
enum class Pauli : uint8_t { I = 0, X = 1, Y = 3, Z = 2 };

inline char pauli_char(Pauli p) {
  switch (p) {
    case Pauli::I: return 'I';
    case Pauli::X: return 'X';
    case Pauli::Y: return 'Y';
    case Pauli::Z: return 'Z';
  }
  return '?';
}

// Sparse multi-qubit Pauli with a global phase i^phase.
class PauliString {
 public:
  PauliString() = default;

  Pauli at(uint32_t q) const {
    auto it = ops_.find(q);
    return it == ops_.end() ? Pauli::I : it->second;
  }

  void set(uint32_t q, Pauli p) {
    if (p == Pauli::I)
      ops_.erase(q);
    else
      ops_[q] = p;
  }

  const std::map<uint32_t, Pauli>& ops() const { return ops_; }
  uint8_t phase() const { return phase_; }
  bool identity() const { return ops_.empty(); }
  size_t weight() const { return ops_.size(); }

  // Left-multiplies by `o`: *this <- o * (*this), tracking i^k phases.
  void mul_left(const PauliString& o) {
    PauliString r = o;
    r.mul_right(*this);
    *this = r;
  }

  // Right-multiplies: *this <- (*this) * o.
  void mul_right(const PauliString& o) {
    phase_ = (phase_ + o.phase_) & 3;
    for (const auto& [q, p] : o.ops_) {
      uint8_t a = static_cast<uint8_t>(at(q));
      uint8_t b = static_cast<uint8_t>(p);
      // i^k from multiplying single-qubit paulis a*b, with bits (x, z).
      phase_ = (phase_ + mul_phase(a, b)) & 3;
      uint8_t c = a ^ b;
      set(q, static_cast<Pauli>(c));
    }
  }

  bool commutes_with(const PauliString& o) const {
    int anti = 0;
    for (const auto& [q, p] : ops_) {
      uint8_t a = static_cast<uint8_t>(p);
      uint8_t b = static_cast<uint8_t>(o.at(q));
      uint8_t ax = a & 1, az = (a >> 1) & 1;
      uint8_t bx = b & 1, bz = (b >> 1) & 1;
      anti ^= (ax & bz) ^ (az & bx);
    }
    return anti == 0;
  }

  std::string str() const {
    static const char* phases[] = {"+", "+i", "-", "-i"};
    std::string out = phases[phase_];
    if (ops_.empty()) return out + "I";
    for (const auto& [q, p] : ops_) {
      out += pauli_char(p);
      out += std::to_string(q);
    }
    return out;
  }

 private:
  // Phase exponent of i in the product a*b for single-qubit paulis
  // encoded as x + 2z. Table indexed [a][b].
  static uint8_t mul_phase(uint8_t a, uint8_t b) {
    // rows/cols: 0=I, 1=X, 2=Z, 3=Y
    static const uint8_t table[4][4] = {
        {0, 0, 0, 0},   // I*
        {0, 0, 3, 1},   // X*: X*Z=-iY, X*Y=iZ
        {0, 1, 0, 3},   // Z*: Z*X=iY, Z*Y=-iX
        {0, 3, 1, 0},   // Y*: Y*X=-iZ, Y*Z=iX
    };
    return table[a][b];
  }

  std::map<uint32_t, Pauli> ops_;
  uint8_t phase_ = 0;
};

}  // namespace qprep
