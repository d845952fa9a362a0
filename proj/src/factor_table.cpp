#include "adinfer/factor_table.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace adinfer {

namespace {

std::vector<std::size_t> strides_for(const std::vector<int>& sizes) {
  std::vector<std::size_t> s(sizes.size());
  std::size_t acc = 1;
  for (int i = static_cast<int>(sizes.size()) - 1; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = acc;
    acc *= static_cast<std::size_t>(sizes[static_cast<std::size_t>(i)]);
  }
  return s;
}

std::size_t total_size(const std::vector<int>& sizes) {
  std::size_t n = 1;
  for (int d : sizes) n *= static_cast<std::size_t>(d);
  return n;
}

}  // namespace

FactorTable FactorTable::scalar(double value) {
  return FactorTable({}, {}, {value});
}

FactorTable::FactorTable(std::vector<std::string> vars, std::vector<int> sizes,
                         std::vector<double> values)
    : vars_(std::move(vars)), sizes_(std::move(sizes)), values_(std::move(values)) {
  check_invariants();
}

void FactorTable::check_invariants() const {
  if (vars_.size() != sizes_.size())
    throw std::invalid_argument("factor table: scope/size arity mismatch");
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (sizes_[i] < 1) throw std::invalid_argument("factor table: domain size must be >= 1");
    if (i > 0 && !(vars_[i - 1] < vars_[i]))
      throw std::invalid_argument("factor table: scope must be strictly increasing, got '" +
                                  vars_[i - 1] + "' before '" + vars_[i] + "'");
  }
  if (values_.size() != total_size(sizes_))
    throw std::invalid_argument("factor table: expected " +
                                std::to_string(total_size(sizes_)) + " values, got " +
                                std::to_string(values_.size()));
  for (double v : values_) {
    if (std::isnan(v) || v < 0.0)
      throw std::invalid_argument("factor table: values must be non-negative reals");
  }
}

FactorTable FactorTable::constant(std::vector<std::string> vars, std::vector<int> sizes,
                                  double value) {
  std::size_t n = total_size(sizes);
  return FactorTable(std::move(vars), std::move(sizes), std::vector<double>(n, value));
}

FactorTable FactorTable::from_declared(const std::vector<std::string>& vars,
                                       const std::vector<int>& sizes,
                                       const std::vector<double>& values) {
  std::vector<std::size_t> order(vars.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return vars[a] < vars[b]; });

  std::vector<std::string> svars(vars.size());
  std::vector<int> ssizes(vars.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    svars[i] = vars[order[i]];
    ssizes[i] = sizes[order[i]];
  }
  bool sorted = true;
  for (std::size_t i = 0; i < order.size(); ++i)
    if (order[i] != i) sorted = false;
  if (sorted) return FactorTable(std::move(svars), std::move(ssizes), values);

  if (values.size() != total_size(sizes))
    throw std::invalid_argument("factor table: expected " +
                                std::to_string(total_size(sizes)) + " values, got " +
                                std::to_string(values.size()));

  // gather: walk canonical layout, pick from the declared layout
  std::vector<std::size_t> declared_strides = strides_for(sizes);
  std::vector<std::size_t> src_stride(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) src_stride[i] = declared_strides[order[i]];

  std::size_t n = values.size();
  std::vector<double> out(n);
  std::vector<int> state(order.size(), 0);
  std::size_t src = 0;
  for (std::size_t dst = 0;;) {
    out[dst] = values[src];
    if (++dst == n) break;
    for (int p = static_cast<int>(order.size()) - 1;; --p) {
      auto up = static_cast<std::size_t>(p);
      if (++state[up] < ssizes[up]) {
        src += src_stride[up];
        break;
      }
      state[up] = 0;
      src -= src_stride[up] * static_cast<std::size_t>(ssizes[up] - 1);
    }
  }
  return FactorTable(std::move(svars), std::move(ssizes), std::move(out));
}

bool FactorTable::has_var(const std::string& id) const {
  return std::binary_search(vars_.begin(), vars_.end(), id);
}

int FactorTable::domain_of(const std::string& id) const {
  auto it = std::lower_bound(vars_.begin(), vars_.end(), id);
  if (it == vars_.end() || *it != id) return -1;
  return sizes_[static_cast<std::size_t>(it - vars_.begin())];
}

double FactorTable::total_mass() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

std::size_t FactorTable::index_of(std::span<const int> states) const {
  if (states.size() != vars_.size())
    throw std::invalid_argument("factor table: assignment arity mismatch");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (states[i] < 0 || states[i] >= sizes_[i])
      throw std::invalid_argument("factor table: state out of range for '" + vars_[i] + "'");
    idx = idx * static_cast<std::size_t>(sizes_[i]) + static_cast<std::size_t>(states[i]);
  }
  return idx;
}

std::vector<int> FactorTable::states_of(std::size_t flat) const {
  std::vector<int> st(vars_.size());
  for (int i = static_cast<int>(vars_.size()) - 1; i >= 0; --i) {
    auto ui = static_cast<std::size_t>(i);
    st[ui] = static_cast<int>(flat % static_cast<std::size_t>(sizes_[ui]));
    flat /= static_cast<std::size_t>(sizes_[ui]);
  }
  return st;
}

FactorTable FactorTable::multiply(const FactorTable& other) const {
  const FactorTable& a = *this;
  const FactorTable& b = other;

  std::vector<std::string> mvars;
  std::vector<int> msizes;
  std::size_t ia = 0, ib = 0;
  while (ia < a.vars_.size() || ib < b.vars_.size()) {
    bool take_a;
    if (ia == a.vars_.size())
      take_a = false;
    else if (ib == b.vars_.size())
      take_a = true;
    else if (a.vars_[ia] == b.vars_[ib]) {
      if (a.sizes_[ia] != b.sizes_[ib])
        throw std::invalid_argument("multiply: domain size mismatch on '" + a.vars_[ia] + "'");
      take_a = true;
    } else
      take_a = a.vars_[ia] < b.vars_[ib];
    if (take_a) {
      if (ib < b.vars_.size() && b.vars_[ib] == a.vars_[ia]) ++ib;
      mvars.push_back(a.vars_[ia]);
      msizes.push_back(a.sizes_[ia]);
      ++ia;
    } else {
      mvars.push_back(b.vars_[ib]);
      msizes.push_back(b.sizes_[ib]);
      ++ib;
    }
  }

  std::vector<std::size_t> sa_all = strides_for(a.sizes_), sb_all = strides_for(b.sizes_);
  std::vector<std::size_t> sa(mvars.size(), 0), sb(mvars.size(), 0);
  for (std::size_t i = 0; i < mvars.size(); ++i) {
    auto ita = std::lower_bound(a.vars_.begin(), a.vars_.end(), mvars[i]);
    if (ita != a.vars_.end() && *ita == mvars[i])
      sa[i] = sa_all[static_cast<std::size_t>(ita - a.vars_.begin())];
    auto itb = std::lower_bound(b.vars_.begin(), b.vars_.end(), mvars[i]);
    if (itb != b.vars_.end() && *itb == mvars[i])
      sb[i] = sb_all[static_cast<std::size_t>(itb - b.vars_.begin())];
  }

  std::size_t n = total_size(msizes);
  std::vector<double> out(n);
  std::vector<int> state(mvars.size(), 0);
  std::size_t pa = 0, pb = 0;
  for (std::size_t idx = 0;;) {
    out[idx] = a.values_[pa] * b.values_[pb];
    if (++idx == n) break;
    for (int p = static_cast<int>(mvars.size()) - 1;; --p) {
      auto up = static_cast<std::size_t>(p);
      if (++state[up] < msizes[up]) {
        pa += sa[up];
        pb += sb[up];
        break;
      }
      state[up] = 0;
      pa -= sa[up] * static_cast<std::size_t>(msizes[up] - 1);
      pb -= sb[up] * static_cast<std::size_t>(msizes[up] - 1);
    }
  }
  return FactorTable(std::move(mvars), std::move(msizes), std::move(out));
}

FactorTable FactorTable::marginalize(std::span<const std::string> keep) const {
  std::vector<std::string> kvars(keep.begin(), keep.end());
  std::sort(kvars.begin(), kvars.end());
  kvars.erase(std::unique(kvars.begin(), kvars.end()), kvars.end());

  std::vector<int> ksizes(kvars.size());
  for (std::size_t i = 0; i < kvars.size(); ++i) {
    int d = domain_of(kvars[i]);
    if (d < 0) throw std::invalid_argument("marginalize: '" + kvars[i] + "' not in scope");
    ksizes[i] = d;
  }

  std::vector<std::size_t> out_strides = strides_for(ksizes);
  std::vector<std::size_t> os(vars_.size(), 0);  // per input var, stride into output
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    auto it = std::lower_bound(kvars.begin(), kvars.end(), vars_[i]);
    if (it != kvars.end() && *it == vars_[i])
      os[i] = out_strides[static_cast<std::size_t>(it - kvars.begin())];
  }

  std::vector<double> out(total_size(ksizes), 0.0);
  std::vector<int> state(vars_.size(), 0);
  std::size_t oi = 0;
  std::size_t n = values_.size();
  for (std::size_t idx = 0;;) {
    out[oi] += values_[idx];
    if (++idx == n) break;
    for (int p = static_cast<int>(vars_.size()) - 1;; --p) {
      auto up = static_cast<std::size_t>(p);
      if (++state[up] < sizes_[up]) {
        oi += os[up];
        break;
      }
      state[up] = 0;
      oi -= os[up] * static_cast<std::size_t>(sizes_[up] - 1);
    }
  }
  return FactorTable(std::move(kvars), std::move(ksizes), std::move(out));
}

FactorTable FactorTable::normalize() const {
  double mass = total_mass();
  if (!(mass > 0.0)) throw std::invalid_argument("normalize: table has zero mass");
  return scaled(1.0 / mass);
}

FactorTable FactorTable::scaled(double c) const {
  std::vector<double> out(values_);
  for (double& v : out) v *= c;
  return FactorTable(vars_, sizes_, std::move(out));
}

bool FactorTable::approx_equal(const FactorTable& other, double rtol, double atol) const {
  if (!same_scope(other)) return false;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    double x = values_[i], y = other.values_[i];
    double tol = std::max(atol, rtol * std::max(std::fabs(x), std::fabs(y)));
    if (std::fabs(x - y) > tol) return false;
  }
  return true;
}

FactorTable multiply(const FactorTable& a, const FactorTable& b) { return a.multiply(b); }

FactorTable marginalize(const FactorTable& t, std::span<const std::string> keep) {
  return t.marginalize(keep);
}

FactorTable normalize(const FactorTable& t) { return t.normalize(); }

}  // namespace adinfer
