#pragma once
// Prime-field symbols and the source polarization transform.
//
// The transform is the n-fold Kronecker power of the 2x2 kernel
//   [1 0]
//   [1 1]
// applied in NATURAL index order: there is no bit-reversal permutation
// anywhere in this codebase. For x of length N = 2^n, u = transform(x)
// satisfies u[0 : N/2] = transform(x_lo + x_hi) and u[N/2 : N] =
// transform(x_hi), where x_lo, x_hi are the two halves of x and the sum is
// componentwise mod q. All index sets elsewhere are defined in this
// ordering; indices are 0-based throughout.

#include <cstdint>
#include <span>
#include <vector>

#include "polarcov/common.hpp"

namespace polarcov::field {

// Deterministic trial division; intended for small moduli.
bool is_prime(std::uint32_t m) noexcept;

// Scalar in [0, q) for a prime modulus q, validated at construction.
class Symbol {
 public:
  Symbol(std::uint16_t value, std::uint16_t modulus);
  std::uint16_t value() const noexcept { return value_; }
  std::uint16_t modulus() const noexcept { return modulus_; }
  bool operator==(const Symbol&) const = default;

 private:
  std::uint16_t value_;
  std::uint16_t modulus_;
};

// Sequence of symbols sharing one prime modulus.
class SymbolVector {
 public:
  SymbolVector(std::vector<std::uint16_t> values, std::uint16_t modulus);
  static SymbolVector zeros(std::size_t count, std::uint16_t modulus);

  std::size_t size() const noexcept { return values_.size(); }
  std::uint16_t modulus() const noexcept { return modulus_; }
  std::uint16_t operator[](std::size_t i) const { return values_[i]; }
  void set(std::size_t i, std::uint16_t v);
  std::span<const std::uint16_t> values() const noexcept { return values_; }
  std::vector<std::uint16_t>& raw() noexcept { return values_; }

  bool operator==(const SymbolVector&) const = default;

 private:
  std::vector<std::uint16_t> values_;
  std::uint16_t modulus_;
};

// u = x * G_n, butterfly passes, O(N log N). Length must be a power of two.
SymbolVector polar_transform(const SymbolVector& x);

// x such that polar_transform(x) = u; inverse kernel [[1,0],[q-1,1]].
SymbolVector polar_inverse(const SymbolVector& u);

// In-place raw variants used by hot paths. data.size() must be a power of two.
void polar_transform_inplace(std::span<std::uint16_t> data, std::uint16_t q);
void polar_inverse_inplace(std::span<std::uint16_t> data, std::uint16_t q);

}  // namespace polarcov::field
