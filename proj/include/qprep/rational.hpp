#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qprep {

// Exact rational arithmetic for the first-order coefficient accumulation.
// Denominators here are tiny (3, 15 and products of table formulas), so a
// checked 64-bit representation is exact for everything this project sums;
// any overflow throws instead of silently wrapping.
class Rational {
 public:
  Rational() : num_(0), den_(1) {}
  Rational(long long n) : num_(n), den_(1) {}
  Rational(long long n, long long d) : num_(n), den_(d) {
    if (den_ == 0) throw std::invalid_argument("Rational: zero denominator");
    normalize();
  }

  long long num() const { return num_; }
  long long den() const { return den_; }

  Rational operator+(const Rational& o) const {
    return Rational(checked(__int128(num_) * o.den_ + __int128(o.num_) * den_),
                    checked(__int128(den_) * o.den_), raw_tag{});
  }
  Rational operator-(const Rational& o) const {
    return *this + Rational(-o.num_, o.den_);
  }
  Rational operator*(const Rational& o) const {
    return Rational(checked(__int128(num_) * o.num_),
                    checked(__int128(den_) * o.den_), raw_tag{});
  }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }

  bool operator==(const Rational& o) const {
    return num_ == o.num_ && den_ == o.den_;
  }
  bool operator!=(const Rational& o) const { return !(*this == o); }
  bool operator<(const Rational& o) const {
    return __int128(num_) * o.den_ < __int128(o.num_) * den_;
  }

  double to_double() const { return double(num_) / double(den_); }

  std::string str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

 private:
  struct raw_tag {};
  Rational(long long n, long long d, raw_tag) : num_(n), den_(d) { normalize(); }

  static long long checked(__int128 v) {
    if (v > INT64_MAX || v < INT64_MIN) throw std::overflow_error("Rational overflow");
    return static_cast<long long>(v);
  }

  void normalize() {
    if (den_ < 0) { num_ = -num_; den_ = -den_; }
    long long g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) { num_ /= g; den_ /= g; }
    if (num_ == 0) den_ = 1;
  }

  long long num_, den_;
};

}  // namespace qprep
