#include "polarcov/field.hpp"

#include <string>

namespace polarcov::field {

bool is_prime(std::uint32_t m) noexcept {
  if (m < 2) return false;
  if (m % 2 == 0) return m == 2;
  for (std::uint32_t d = 3; d * d <= m; d += 2) {
    if (m % d == 0) return false;
  }
  return true;
}

namespace {

void check_modulus(std::uint16_t q) {
  if (!is_prime(q)) {
    throw ValidationError("modulus " + std::to_string(q) + " is not prime");
  }
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

Symbol::Symbol(std::uint16_t value, std::uint16_t modulus)
    : value_(value), modulus_(modulus) {
  check_modulus(modulus);
  if (value >= modulus) {
    throw ValidationError("symbol value " + std::to_string(value) +
                          " outside [0, " + std::to_string(modulus) + ")");
  }
}

SymbolVector::SymbolVector(std::vector<std::uint16_t> values,
                           std::uint16_t modulus)
    : values_(std::move(values)), modulus_(modulus) {
  check_modulus(modulus);
  for (std::uint16_t v : values_) {
    if (v >= modulus) {
      throw ValidationError("symbol value " + std::to_string(v) +
                            " outside [0, " + std::to_string(modulus) + ")");
    }
  }
}

SymbolVector SymbolVector::zeros(std::size_t count, std::uint16_t modulus) {
  return SymbolVector(std::vector<std::uint16_t>(count, 0), modulus);
}

void SymbolVector::set(std::size_t i, std::uint16_t v) {
  if (v >= modulus_) {
    throw ValidationError("symbol value " + std::to_string(v) +
                          " outside [0, " + std::to_string(modulus_) + ")");
  }
  values_[i] = v;
}

void polar_transform_inplace(std::span<std::uint16_t> data, std::uint16_t q) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) {
    throw LengthError("polar transform requires a power-of-two length, got " +
                      std::to_string(n));
  }
  for (std::size_t half = n / 2; half >= 1; half /= 2) {
    for (std::size_t block = 0; block < n; block += 2 * half) {
      for (std::size_t i = 0; i < half; ++i) {
        data[block + i] = static_cast<std::uint16_t>(
            (data[block + i] + data[block + half + i]) % q);
      }
    }
  }
}

void polar_inverse_inplace(std::span<std::uint16_t> data, std::uint16_t q) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) {
    throw LengthError("polar transform requires a power-of-two length, got " +
                      std::to_string(n));
  }
  for (std::size_t half = n / 2; half >= 1; half /= 2) {
    for (std::size_t block = 0; block < n; block += 2 * half) {
      for (std::size_t i = 0; i < half; ++i) {
        data[block + i] = static_cast<std::uint16_t>(
            (data[block + i] + q - data[block + half + i]) % q);
      }
    }
  }
}

SymbolVector polar_transform(const SymbolVector& x) {
  SymbolVector out = x;
  polar_transform_inplace(out.raw(), out.modulus());
  return out;
}

SymbolVector polar_inverse(const SymbolVector& u) {
  SymbolVector out = u;
  polar_inverse_inplace(out.raw(), out.modulus());
  return out;
}

}  // namespace polarcov::field
