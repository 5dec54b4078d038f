#pragma once

#include "dyngame/random.hpp"
#include "dyngame/types.hpp"

#include <cstdint>
#include <stdexcept>

namespace dyngame {

/// Decimal chromosome layout. Each variable takes one sign digit (0-4 means
/// positive, 5-9 negative) followed by `magnitude_digits` digits, of which the
/// first `decimal_position` sit before the decimal point.
struct EncodingScheme {
  int magnitude_digits = 6;
  int decimal_position = 1;
  std::size_t variable_count = 0;
  /// Per-player variable ranges; must partition [0, variable_count).
  std::vector<Slice> player_slices;

  EncodingScheme() = default;
  EncodingScheme(int magnitude_digits, int decimal_position, std::size_t variable_count,
                 std::vector<Slice> player_slices = {});

  std::size_t digits_per_variable() const { return static_cast<std::size_t>(1 + magnitude_digits); }
  std::size_t length() const { return variable_count * digits_per_variable(); }
  /// Grid spacing 10^(decimal_position - magnitude_digits).
  double quantum() const;
  /// Largest representable magnitude.
  double max_magnitude() const;
  /// Gene (digit) range covering a player's variables.
  Slice gene_slice(int player) const;

  void validate() const;
};

class EncodingRangeError : public std::out_of_range {
 public:
  EncodingRangeError(const std::string& what, std::size_t variable) : std::out_of_range(what), variable_(variable) {}
  std::size_t variable() const { return variable_; }

 private:
  std::size_t variable_;
};

struct Chromosome {
  std::vector<std::uint8_t> digits;

  friend bool operator==(const Chromosome&, const Chromosome&) = default;
};

Vector decode(const Chromosome& chromosome, const EncodingScheme& scheme);

/// Rounds half away from zero onto the grid; sign digit is 0 or 5.
/// Throws EncodingRangeError naming the first variable that does not fit.
Chromosome encode(const Vector& values, const EncodingScheme& scheme);

/// Samples each variable uniformly in [lower, upper] and encodes it.
Chromosome random_chromosome(const EncodingScheme& scheme, const Vector& lower, const Vector& upper, Rng& rng);

}  // namespace dyngame
