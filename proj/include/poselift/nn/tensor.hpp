#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace poselift {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Derived>
std::string shape_str(const Eigen::EigenBase<Derived>& m) {
  return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

// Named tensors of one model. Entries are ordered by name, which fixes the
// iteration order for optimizers, checkpoints and checksums.
class ParamSet {
 public:
  struct Entry {
    Matrix value;
    bool trainable = true;
  };

  void add(const std::string& name, Matrix value, bool trainable = true) {
    if (entries_.count(name) != 0) throw std::invalid_argument("duplicate tensor '" + name + "'");
    entries_.emplace(name, Entry{std::move(value), trainable});
  }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }

  const Matrix& operator[](const std::string& name) const { return entry(name).value; }
  Matrix& at(const std::string& name) { return entry(name).value; }

  const Entry& entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("no tensor named '" + name + "'");
    return it->second;
  }
  Entry& entry(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("no tensor named '" + name + "'");
    return it->second;
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // Names of trainable tensors whose name starts with any of the prefixes
  // (all trainable tensors when prefixes is empty).
  std::vector<std::string> trainable_names(const std::vector<std::string>& prefixes = {}) const;

  // Total number of scalar values, optionally restricted to trainable ones.
  std::size_t scalar_count(bool trainable_only = false) const;

  // Copy of the entries whose name starts with any of the prefixes.
  ParamSet subset(const std::vector<std::string>& prefixes) const;

  // Overwrite matching entries from other (names must exist here).
  void assign_from(const ParamSet& other);

  // FNV-1a over names and raw value bytes of the selected tensors.
  std::uint64_t checksum(const std::vector<std::string>& prefixes = {}) const;

  bool operator==(const ParamSet& other) const;

 private:
  std::map<std::string, Entry> entries_;
};

bool has_prefix(std::string_view name, const std::vector<std::string>& prefixes);

}  // namespace poselift
