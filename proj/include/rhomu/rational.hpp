#pragma once

// Exact rational arithmetic on a 64-bit numerator/denominator pair.
// Every product and sum runs through __int128 and narrows back with a range
// check, so overflow throws instead of silently wrapping. The quantities in
// this codebase (cycle sums, value-iteration tables, weight entries) stay
// tiny; the checks are a tripwire, not a cost center.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rhomu {

class Rational {
 public:
  constexpr Rational() : num_(0), den_(1) {}
  Rational(long long n) : num_(n), den_(1) {}  // NOLINT: implicit by design
  Rational(long long n, long long d) : num_(n), den_(d) {
    if (den_ == 0) throw std::domain_error("rational: zero denominator");
    reduce();
  }

  // Accepts "-3", "7/2", "0". Whitespace is not trimmed.
  static Rational parse(std::string_view s) {
    auto bad = [&] {
      throw std::invalid_argument("rational: cannot parse '" + std::string(s) + "'");
    };
    long long n = 0, d = 1;
    auto slash = s.find('/');
    std::string_view ns = s.substr(0, slash);
    if (ns.empty()) bad();
    auto r = std::from_chars(ns.data(), ns.data() + ns.size(), n);
    if (r.ec != std::errc() || r.ptr != ns.data() + ns.size()) bad();
    if (slash != std::string_view::npos) {
      std::string_view ds = s.substr(slash + 1);
      if (ds.empty()) bad();
      auto r2 = std::from_chars(ds.data(), ds.data() + ds.size(), d);
      if (r2.ec != std::errc() || r2.ptr != ds.data() + ds.size()) bad();
    }
    return Rational(n, d);
  }

  long long num() const { return num_; }
  long long den() const { return den_; }
  bool is_zero() const { return num_ == 0; }
  int sign() const { return num_ > 0 ? 1 : num_ < 0 ? -1 : 0; }

  std::string str() const {
    std::string s = std::to_string(num_);
    if (den_ != 1) s += "/" + std::to_string(den_);
    return s;
  }

  Rational operator-() const {
    Rational r;
    r.num_ = narrow(-static_cast<__int128>(num_));
    r.den_ = den_;
    return r;
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return make(static_cast<__int128>(a.num_) * b.den_ +
                    static_cast<__int128>(b.num_) * a.den_,
                static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return make(static_cast<__int128>(a.num_) * b.num_,
                static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("rational: division by zero");
    return make(static_cast<__int128>(a.num_) * b.den_,
                static_cast<__int128>(a.den_) * b.num_);
  }

  Rational& operator+=(const Rational& b) { return *this = *this + b; }
  Rational& operator-=(const Rational& b) { return *this = *this - b; }
  Rational& operator*=(const Rational& b) { return *this = *this * b; }
  Rational& operator/=(const Rational& b) { return *this = *this / b; }

  // Denominators are positive, so cross-multiplication keeps the order.
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
  }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
  friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

  Rational abs() const { return num_ < 0 ? -*this : *this; }

 private:
  static __int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }
  static long long narrow(__int128 v) {
    if (v > INT64_MAX || v < INT64_MIN) throw std::overflow_error("rational: overflow");
    return static_cast<long long>(v);
  }
  static Rational make(__int128 n, __int128 d) {
    if (d < 0) {
      n = -n;
      d = -d;
    }
    __int128 g = gcd128(n, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    Rational r;
    r.num_ = narrow(n);
    r.den_ = narrow(d == 0 ? 1 : d);
    if (d == 0) throw std::domain_error("rational: zero denominator");
    return r;
  }
  void reduce() {
    Rational r = make(num_, den_);
    num_ = r.num_;
    den_ = r.den_;
  }

  long long num_, den_;
};

}  // namespace rhomu

template <>
struct std::hash<rhomu::Rational> {
  size_t operator()(const rhomu::Rational& r) const {
    return std::hash<long long>()(r.num()) * 1000003u ^ std::hash<long long>()(r.den());
  }
};
