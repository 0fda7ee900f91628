#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace reslab {

// Exact rationals for everything that feeds a characterization claim.
using Rational = mpq_class;

// Thrown for violated preconditions and malformed inputs. The CLI maps this
// to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Accepts "p", "p/q", and plain decimals such as "-0.125" (converted exactly).
Rational parse_rational(std::string_view text);
std::string to_string(const Rational& q);
inline double to_double(const Rational& q) { return q.get_d(); }

Rational binomial(int n, int k);
Rational factorial(int n);

// Size cap for LPs and enumerations, read from RESLAB_SIZE_BUDGET. Defaults
// to 5e7 when unset.
std::uint64_t size_budget();

}  // namespace reslab
