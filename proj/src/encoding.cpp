#include "dyngame/encoding.hpp"

#include <cmath>

namespace dyngame {

namespace {

// Exact for exponents up to 22.
double pow10(int e) {
  double p = 1.0;
  for (int i = 0; i < (e < 0 ? -e : e); ++i) p *= 10.0;
  return p;
}

// Grid value n * 10^(dp - md), computed by a single correctly rounded operation.
double grid_value(std::int64_t n, int exponent) {
  return exponent >= 0 ? static_cast<double>(n) * pow10(exponent) : static_cast<double>(n) / pow10(-exponent);
}

}  // namespace

EncodingScheme::EncodingScheme(int md, int dp, std::size_t count, std::vector<Slice> slices)
    : magnitude_digits(md), decimal_position(dp), variable_count(count), player_slices(std::move(slices)) {
  if (player_slices.empty()) player_slices.push_back({0, variable_count});
  validate();
}

double EncodingScheme::quantum() const { return grid_value(1, decimal_position - magnitude_digits); }

double EncodingScheme::max_magnitude() const {
  return grid_value(static_cast<std::int64_t>(pow10(magnitude_digits)) - 1, decimal_position - magnitude_digits);
}

Slice EncodingScheme::gene_slice(int player) const {
  const Slice& v = player_slices.at(player);
  return {v.offset * digits_per_variable(), v.size * digits_per_variable()};
}

void EncodingScheme::validate() const {
  if (magnitude_digits < 1 || magnitude_digits > 17)
    throw std::invalid_argument("magnitude_digits must be in 1..17, got " + std::to_string(magnitude_digits));
  if (decimal_position < 0 || decimal_position > magnitude_digits)
    throw std::invalid_argument("decimal_position must be in 0..magnitude_digits, got " +
                                std::to_string(decimal_position));
  if (variable_count < 1) throw std::invalid_argument("variable_count must be positive");
  std::size_t next = 0;
  for (const Slice& s : player_slices) {
    if (s.offset != next) throw std::invalid_argument("player slices must partition the variables without gaps");
    next = s.end();
  }
  if (next != variable_count) throw std::invalid_argument("player slices must cover every variable");
}

Vector decode(const Chromosome& c, const EncodingScheme& scheme) {
  const std::size_t width = scheme.digits_per_variable();
  if (c.digits.size() != scheme.length())
    throw std::invalid_argument("chromosome has " + std::to_string(c.digits.size()) + " digits, expected " +
                                std::to_string(scheme.length()));
  const int exponent = scheme.decimal_position - scheme.magnitude_digits;
  Vector values(static_cast<Eigen::Index>(scheme.variable_count));
  for (std::size_t v = 0; v < scheme.variable_count; ++v) {
    const std::uint8_t* d = c.digits.data() + v * width;
    std::int64_t magnitude = 0;
    for (std::size_t j = 1; j < width; ++j) {
      if (d[j] > 9) throw std::invalid_argument("chromosome digit out of range at variable " + std::to_string(v));
      magnitude = magnitude * 10 + d[j];
    }
    if (d[0] > 9) throw std::invalid_argument("chromosome digit out of range at variable " + std::to_string(v));
    const double value = grid_value(magnitude, exponent);
    values[static_cast<Eigen::Index>(v)] = d[0] <= 4 ? value : -value;
  }
  return values;
}

Chromosome encode(const Vector& values, const EncodingScheme& scheme) {
  if (values.size() != static_cast<Eigen::Index>(scheme.variable_count))
    throw DimensionError("encode: got " + std::to_string(values.size()) + " values, expected " +
                         std::to_string(scheme.variable_count));
  const std::size_t width = scheme.digits_per_variable();
  const int exponent = scheme.decimal_position - scheme.magnitude_digits;
  const double limit = pow10(scheme.magnitude_digits);

  Chromosome c;
  c.digits.assign(scheme.length(), 0);
  for (std::size_t v = 0; v < scheme.variable_count; ++v) {
    const double x = values[static_cast<Eigen::Index>(v)];
    const double scaled = exponent >= 0 ? std::abs(x) / pow10(exponent) : std::abs(x) * pow10(-exponent);
    const double rounded = std::round(scaled);
    if (!std::isfinite(x) || rounded >= limit)
      throw EncodingRangeError("encode: variable " + std::to_string(v) + " = " + std::to_string(x) +
                                   " exceeds the representable magnitude " + std::to_string(scheme.max_magnitude()),
                               v);
    auto magnitude = static_cast<std::int64_t>(rounded);
    std::uint8_t* d = c.digits.data() + v * width;
    d[0] = (x < 0 && magnitude != 0) ? 5 : 0;
    for (std::size_t j = width - 1; j >= 1; --j) {
      d[j] = static_cast<std::uint8_t>(magnitude % 10);
      magnitude /= 10;
    }
  }
  return c;
}

Chromosome random_chromosome(const EncodingScheme& scheme, const Vector& lower, const Vector& upper, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(scheme.variable_count);
  if (lower.size() != n || upper.size() != n) throw DimensionError("random_chromosome: bounds have the wrong size");
  const double max_mag = scheme.max_magnitude();
  Vector values(n);
  for (Eigen::Index v = 0; v < n; ++v) {
    if (!(lower[v] <= upper[v]))
      throw std::invalid_argument("random_chromosome: empty bounds for variable " + std::to_string(v));
    if (std::abs(lower[v]) > max_mag || std::abs(upper[v]) > max_mag)
      throw EncodingRangeError("random_chromosome: bounds of variable " + std::to_string(v) +
                                   " exceed the representable magnitude",
                               static_cast<std::size_t>(v));
    values[v] = uniform_in(rng, lower[v], upper[v]);
  }
  return encode(values, scheme);
}

}  // namespace dyngame
