#include "reslab/predicate.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "json.hpp"

namespace reslab {

std::string assignment_to_string(Assignment x, int k) {
  std::string s(k, '+');
  for (int i = 0; i < k; ++i) {
    if ((x >> i) & 1u) s[i] = '-';
  }
  return s;
}

Assignment assignment_from_string(std::string_view s, int k) {
  if (static_cast<int>(s.size()) != k) {
    throw Error("assignment string '" + std::string(s) + "' has length " +
                std::to_string(s.size()) + ", expected " + std::to_string(k));
  }
  Assignment x = 0;
  for (int i = 0; i < k; ++i) {
    if (s[i] == '-') {
      x |= Assignment{1} << i;
    } else if (s[i] != '+') {
      throw Error("invalid character '" + std::string(1, s[i]) + "' in assignment string");
    }
  }
  return x;
}

FourierSpectrum::FourierSpectrum(int k, std::vector<Rational> coeffs)
    : k_(k), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != (std::size_t{1} << k)) throw Error("spectrum size mismatch");
  for (SubsetMask s = 1; s < coeffs_.size(); ++s) {
    if (sgn(coeffs_[s]) != 0) support_.push_back(s);
  }
}

Rational FourierSpectrum::evaluate(Assignment x) const {
  Rational total = coeffs_[0];
  for (SubsetMask s : support_) {
    if (character(s, x) > 0) {
      total += coeffs_[s];
    } else {
      total -= coeffs_[s];
    }
  }
  return total;
}

namespace {

// In-place Walsh-Hadamard butterfly on integer sums.
std::vector<long> walsh_hadamard(const std::vector<bool>& table) {
  std::vector<long> a(table.begin(), table.end());
  for (std::size_t h = 1; h < a.size(); h <<= 1) {
    for (std::size_t i = 0; i < a.size(); i += h << 1) {
      for (std::size_t j = i; j < i + h; ++j) {
        long u = a[j], v = a[j + h];
        a[j] = u + v;
        a[j + h] = u - v;
      }
    }
  }
  return a;
}

}  // namespace

Predicate::Predicate(int k, std::vector<bool> table) : k_(k), table_(std::move(table)) {
  if (k < 1 || k > kMaxArity) {
    throw Error("arity " + std::to_string(k) + " outside [1, " + std::to_string(kMaxArity) + "]");
  }
  if (table_.size() != table_size()) throw Error("truth table length must be 2^k");
  num_satisfying_ = std::count(table_.begin(), table_.end(), true);
  auto sums = walsh_hadamard(table_);
  std::vector<Rational> coeffs(sums.size());
  Rational scale(1, static_cast<unsigned long>(table_size()));
  for (std::size_t s = 0; s < sums.size(); ++s) coeffs[s] = Rational(sums[s]) * scale;
  spectrum_ = std::make_shared<const FourierSpectrum>(k, std::move(coeffs));
}

Predicate Predicate::from_satisfying(int k, const std::vector<std::string>& satisfying) {
  if (k < 1 || k > kMaxArity) throw Error("arity out of range");
  std::vector<bool> table(std::size_t{1} << k, false);
  for (const auto& s : satisfying) {
    Assignment x = assignment_from_string(s, k);
    if (table[x]) throw Error("duplicate satisfying string '" + s + "'");
    table[x] = true;
  }
  return Predicate(k, std::move(table));
}

Predicate Predicate::from_assignments(int k, const std::vector<Assignment>& satisfying) {
  std::vector<bool> table(std::size_t{1} << k, false);
  for (Assignment x : satisfying) {
    if (x >= table.size()) throw Error("assignment index out of range");
    table[x] = true;
  }
  return Predicate(k, std::move(table));
}

std::vector<Assignment> Predicate::satisfying() const {
  std::vector<Assignment> out;
  for (Assignment x = 0; x < table_.size(); ++x) {
    if (table_[x]) out.push_back(x);
  }
  return out;
}

Predicate parse_predicate(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("predicate file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("k") || !j.contains("satisfying")) {
    throw Error("predicate file needs fields \"k\" and \"satisfying\"");
  }
  if (!j["k"].is_number_integer() || !j["satisfying"].is_array()) {
    throw Error("predicate fields have the wrong type");
  }
  std::vector<std::string> sat;
  for (const auto& s : j["satisfying"]) {
    if (!s.is_string()) throw Error("satisfying entries must be strings");
    sat.push_back(s.get<std::string>());
  }
  return Predicate::from_satisfying(j["k"].get<int>(), sat);
}

std::string serialize_predicate(const Predicate& f) {
  nlohmann::json j;
  j["k"] = f.arity();
  j["satisfying"] = nlohmann::json::array();
  for (Assignment x : f.satisfying()) j["satisfying"].push_back(assignment_to_string(x, f.arity()));
  return j.dump();
}

Rational density(const Predicate& f) {
  Rational r(static_cast<unsigned long>(f.num_satisfying()),
             static_cast<unsigned long>(f.table_size()));
  r.canonicalize();
  return r;
}

FourierSpectrum fourier(const Predicate& f) { return f.spectrum(); }

FourierSpectrum fourier_naive(const Predicate& f) {
  const std::size_t n = f.table_size();
  std::vector<Rational> coeffs(n);
  for (SubsetMask s = 0; s < n; ++s) {
    long total = 0;
    for (Assignment x = 0; x < n; ++x) {
      if (f(x)) total += character(s, x);
    }
    coeffs[s] = Rational(total, static_cast<unsigned long>(n));
    coeffs[s].canonicalize();
  }
  return FourierSpectrum(f.arity(), std::move(coeffs));
}

Assignment permute_assignment(Assignment x, const std::vector<int>& perm) {
  Assignment y = 0;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if ((x >> perm[i]) & 1u) y |= Assignment{1} << i;
  }
  return y;
}

bool is_symmetric(const Predicate& f) {
  // Adjacent transpositions generate the symmetric group.
  const int k = f.arity();
  for (int i = 0; i + 1 < k; ++i) {
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::swap(perm[i], perm[i + 1]);
    for (Assignment x = 0; x < f.table_size(); ++x) {
      if (f(x) != f(permute_assignment(x, perm))) return false;
    }
  }
  return true;
}

namespace predicates {

namespace {
template <class Pred>
Predicate build(int k, Pred pred) {
  std::vector<bool> table(std::size_t{1} << k);
  for (Assignment x = 0; x < table.size(); ++x) table[x] = pred(x);
  return Predicate(k, std::move(table));
}
}  // namespace

Predicate parity(int k) {
  return build(k, [](Assignment x) { return (__builtin_popcount(x) & 1) == 0; });
}

Predicate majority(int k) {
  if (k % 2 == 0) throw Error("majority needs odd arity");
  return build(k, [k](Assignment x) { return 2 * __builtin_popcount(x) < k; });
}

Predicate disjunction(int k) {
  return build(k, [](Assignment x) { return x != 0; });
}

Predicate two_lin() { return parity(2); }

Predicate constant_one(int k) {
  return build(k, [](Assignment) { return true; });
}

}  // namespace predicates

}  // namespace reslab
