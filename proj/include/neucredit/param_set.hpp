#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "neucredit/matrix.hpp"

namespace neucredit {

/// Named, shaped parameter collection. Iteration follows insertion order, which
/// also fixes the flattening order.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Matrix value;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  /// Adds a tensor; throws std::invalid_argument on a duplicate name.
  void add(std::string name, Matrix value);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  Matrix& at(const std::string& name);
  const Matrix& at(const std::string& name) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  Entry& entry(std::size_t i) { return entries_[i]; }

  std::vector<double> flatten() const;
  /// Overwrites values from a flat vector produced by flatten() on a set of the
  /// same layout.
  void unflatten(const std::vector<double>& flat);

  /// Same names and shapes, all values zero.
  ParamSet zeros_like() const;
  bool same_layout(const ParamSet& other) const;

  friend bool operator==(const ParamSet& a, const ParamSet& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace neucredit
