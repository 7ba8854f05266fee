#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <string>

#include "tensorrank/error.hpp"

namespace tensorrank {

// Exact rational over int64 with overflow detection. Design-matrix entries
// are small integers, so elimination never comes near the limits; if it
// does, NumericError is thrown rather than silently wrapping.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t n) : num_(n) {}  // NOLINT(google-explicit-constructor)
  Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) { normalize(); }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_zero() const { return num_ == 0; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string to_string() const { return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_); }

  friend Rational operator+(Rational a, Rational b) {
    const std::int64_t g = std::gcd(a.den_, b.den_);
    return {add(mul(a.num_, b.den_ / g), mul(b.num_, a.den_ / g)), mul(a.den_ / g, b.den_)};
  }
  friend Rational operator-(Rational a) { return {sub(0, a.num_), a.den_}; }
  friend Rational operator-(Rational a, Rational b) { return a + (-b); }
  friend Rational operator*(Rational a, Rational b) {
    const std::int64_t g1 = std::gcd(a.num_, b.den_), g2 = std::gcd(b.num_, a.den_);
    return {mul(a.num_ / (g1 ? g1 : 1), b.num_ / (g2 ? g2 : 1)), mul(a.den_ / (g2 ? g2 : 1), b.den_ / (g1 ? g1 : 1))};
  }
  friend Rational operator/(Rational a, Rational b) {
    if (b.num_ == 0) throw NumericError("rational division by zero");
    return a * Rational(b.den_, b.num_);
  }
  Rational& operator+=(Rational o) { return *this = *this + o; }
  Rational& operator-=(Rational o) { return *this = *this - o; }
  Rational& operator*=(Rational o) { return *this = *this * o; }

  friend bool operator==(const Rational&, const Rational&) = default;

 private:
  static std::int64_t mul(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw NumericError("rational overflow");
    return r;
  }
  static std::int64_t add(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw NumericError("rational overflow");
    return r;
  }
  static std::int64_t sub(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_sub_overflow(a, b, &r)) throw NumericError("rational overflow");
    return r;
  }
  void normalize() {
    if (den_ == 0) throw NumericError("rational with zero denominator");
    if (den_ < 0) {
      num_ = sub(0, num_);
      den_ = sub(0, den_);
    }
    const std::int64_t g = std::gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace tensorrank
