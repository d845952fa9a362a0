#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace adinfer {

/// Dense real-valued function over an ordered set of discrete variables.
///
/// The scope is kept sorted by variable id and values are stored row-major
/// with the last scope variable varying fastest. An empty scope is a single
/// scalar. Tables are immutable after construction; all operations return
/// new tables and are safe to call concurrently.
class FactorTable {
 public:
  // scalar table (empty scope); defaults to the multiplicative identity
  FactorTable() : values_(1, 1.0) {}
  static FactorTable scalar(double value);

  // scope given in canonical (sorted) order
  FactorTable(std::vector<std::string> vars, std::vector<int> sizes,
              std::vector<double> values);

  // every entry set to `value`
  static FactorTable constant(std::vector<std::string> vars, std::vector<int> sizes,
                              double value);

  // scope given in arbitrary order with values laid out in that order
  // (last declared variable fastest); reordered to canonical form
  static FactorTable from_declared(const std::vector<std::string>& vars,
                                   const std::vector<int>& sizes,
                                   const std::vector<double>& values);

  const std::vector<std::string>& vars() const { return vars_; }
  const std::vector<int>& sizes() const { return sizes_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  int arity() const { return static_cast<int>(vars_.size()); }
  bool has_var(const std::string& id) const;
  int domain_of(const std::string& id) const;  // -1 when absent

  double total_mass() const;
  double at(std::size_t flat) const { return values_[flat]; }

  // flat index <-> per-variable states, in scope order
  std::size_t index_of(std::span<const int> states) const;
  std::vector<int> states_of(std::size_t flat) const;
  double value_at(std::span<const int> states) const { return values_[index_of(states)]; }

  FactorTable multiply(const FactorTable& other) const;
  FactorTable marginalize(std::span<const std::string> keep) const;
  FactorTable marginalize(const std::vector<std::string>& keep) const {
    return marginalize(std::span<const std::string>(keep));
  }
  FactorTable normalize() const;
  FactorTable scaled(double c) const;

  bool same_scope(const FactorTable& other) const {
    return vars_ == other.vars_ && sizes_ == other.sizes_;
  }
  bool bitwise_equal(const FactorTable& other) const {
    return same_scope(other) && values_ == other.values_;
  }
  // elementwise |a-b| <= max(atol, rtol * max(|a|, |b|)); scopes must match
  bool approx_equal(const FactorTable& other, double rtol = 1e-9,
                    double atol = 1e-12) const;

 private:
  void check_invariants() const;

  std::vector<std::string> vars_;  // strictly increasing
  std::vector<int> sizes_;         // parallel to vars_
  std::vector<double> values_;     // prod(sizes_) entries, last var fastest
};

FactorTable multiply(const FactorTable& a, const FactorTable& b);
FactorTable marginalize(const FactorTable& t, std::span<const std::string> keep);
FactorTable normalize(const FactorTable& t);

}  // namespace adinfer
