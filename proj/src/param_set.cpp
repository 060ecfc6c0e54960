#include "neucredit/param_set.hpp"

namespace neucredit {

void ParamSet::add(std::string name, Matrix value) {
  if (index_.count(name) != 0) throw std::invalid_argument("ParamSet: duplicate name " + name);
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(value)});
}

Matrix& ParamSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("ParamSet: no parameter named " + name);
  return entries_[it->second].value;
}

const Matrix& ParamSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("ParamSet: no parameter named " + name);
  return entries_[it->second].value;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> flat;
  flat.reserve(scalar_count());
  for (const auto& e : entries_) flat.insert(flat.end(), e.value.values().begin(), e.value.values().end());
  return flat;
}

void ParamSet::unflatten(const std::vector<double>& flat) {
  if (flat.size() != scalar_count()) {
    throw DimensionError("ParamSet::unflatten: expected " + std::to_string(scalar_count()) +
                         " values, got " + std::to_string(flat.size()));
  }
  std::size_t pos = 0;
  for (auto& e : entries_) {
    for (auto& v : e.value.values()) v = flat[pos++];
  }
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const auto& e : entries_) out.add(e.name, Matrix(e.value.rows(), e.value.cols()));
  return out;
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name ||
        !entries_[i].value.same_shape(other.entries_[i].value))
      return false;
  }
  return true;
}

}  // namespace neucredit
