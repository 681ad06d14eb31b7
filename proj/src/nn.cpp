#include "poselift/nn/adam.hpp"
#include "poselift/nn/layers.hpp"
#include "poselift/nn/tensor.hpp"

#include <cmath>
#include <cstring>

namespace poselift {

bool has_prefix(std::string_view name, const std::vector<std::string>& prefixes) {
  if (prefixes.empty()) return true;
  for (const auto& p : prefixes)
    if (name.substr(0, p.size()) == p) return true;
  return false;
}

std::vector<std::string> ParamSet::trainable_names(const std::vector<std::string>& prefixes) const {
  std::vector<std::string> out;
  for (const auto& [name, e] : entries_)
    if (e.trainable && has_prefix(name, prefixes)) out.push_back(name);
  return out;
}

std::size_t ParamSet::scalar_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_)
    if (!trainable_only || e.trainable) n += static_cast<std::size_t>(e.value.size());
  return n;
}

ParamSet ParamSet::subset(const std::vector<std::string>& prefixes) const {
  ParamSet out;
  for (const auto& [name, e] : entries_)
    if (has_prefix(name, prefixes)) out.entries_.emplace(name, e);
  return out;
}

void ParamSet::assign_from(const ParamSet& other) {
  for (const auto& [name, e] : other.entries_) {
    Entry& mine = entry(name);
    if (mine.value.rows() != e.value.rows() || mine.value.cols() != e.value.cols())
      throw DimensionError("assign_from: '" + name + "' " + shape_str(mine.value) + " vs " + shape_str(e.value));
    mine.value = e.value;
  }
}

std::uint64_t ParamSet::checksum(const std::vector<std::string>& prefixes) const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& [name, e] : entries_) {
    if (!has_prefix(name, prefixes)) continue;
    mix(name.data(), name.size());
    mix(e.value.data(), sizeof(double) * static_cast<std::size_t>(e.value.size()));
  }
  return h;
}

bool ParamSet::operator==(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (auto a = entries_.begin(), b = other.entries_.begin(); a != entries_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.trainable != b->second.trainable) return false;
    const Matrix& x = a->second.value;
    const Matrix& y = b->second.value;
    if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
    if (std::memcmp(x.data(), y.data(), sizeof(double) * static_cast<std::size_t>(x.size())) != 0) return false;
  }
  return true;
}

void add_fc_params(ParamSet& params, const std::string& prefix, Eigen::Index in, Eigen::Index out, Rng& rng) {
  params.add(prefix + ".W", xavier_uniform(out, in, rng));
  params.add(prefix + ".b", Matrix::Zero(out, 1));
}

void add_lstm_params(ParamSet& params, const std::string& prefix, Eigen::Index in, Eigen::Index hidden,
                     Rng& rng) {
  for (int k = 0; k < 4; ++k) {
    params.add(lstm_tensor_name(prefix, 'W', k), xavier_uniform(hidden, in, rng));
    params.add(lstm_tensor_name(prefix, 'U', k), xavier_uniform(hidden, hidden, rng));
    params.add(lstm_tensor_name(prefix, 'b', k),
               k == kForgetGate ? Matrix::Ones(hidden, 1) : Matrix::Zero(hidden, 1));
  }
}

void add_batchnorm_params(ParamSet& params, const std::string& prefix, Eigen::Index features) {
  params.add(prefix + ".gamma", Matrix::Ones(features, 1));
  params.add(prefix + ".beta", Matrix::Zero(features, 1));
  params.add(prefix + ".mean", Matrix::Zero(features, 1), false);
  params.add(prefix + ".var", Matrix::Ones(features, 1), false);
}

Var batchnorm_layer(Graph& g, Var x, const ParamSet& params, const std::string& prefix, BatchNormMode mode,
                    ParamSet* sink) {
  BatchNormRunning<double> running{params[prefix + ".mean"], params[prefix + ".var"]};
  BatchNormRunning<double> updated;
  Var gamma = g.param(prefix + ".gamma", params[prefix + ".gamma"]);
  Var beta = g.param(prefix + ".beta", params[prefix + ".beta"]);
  Var y = batchnorm_forward(g, x, gamma, beta, running, mode, sink ? &updated : nullptr);
  if (sink && mode == BatchNormMode::train) {
    sink->at(prefix + ".mean") = updated.mean;
    sink->at(prefix + ".var") = updated.var;
  }
  return y;
}

AdamState::AdamState(const ParamSet& params, const std::vector<std::string>& names, AdamHyper h) : hyper(h) {
  for (const auto& name : names) {
    const Matrix& p = params[name];
    m.emplace(name, Matrix::Zero(p.rows(), p.cols()));
    v.emplace(name, Matrix::Zero(p.rows(), p.cols()));
  }
}

void adam_step(ParamSet& params, const std::map<std::string, Matrix>& grads, AdamState& s) {
  for (const auto& [name, m] : s.m) {
    auto it = grads.find(name);
    if (it == grads.end()) throw std::out_of_range("adam_step: no gradient for '" + name + "'");
    if (it->second.rows() != m.rows() || it->second.cols() != m.cols())
      throw DimensionError("adam_step: gradient for '" + name + "' is " + shape_str(it->second) +
                           ", parameter is " + shape_str(m));
  }
  ++s.step;
  const double t = static_cast<double>(s.step);
  const double c1 = 1.0 - std::pow(s.hyper.beta1, t);
  const double c2 = 1.0 - std::pow(s.hyper.beta2, t);
  for (auto& [name, m] : s.m) {
    const Matrix& g = grads.at(name);
    Matrix& v = s.v.at(name);
    m = s.hyper.beta1 * m + (1.0 - s.hyper.beta1) * g;
    v = s.hyper.beta2 * v + (1.0 - s.hyper.beta2) * g.cwiseAbs2();
    params.at(name).array() -= s.hyper.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + s.hyper.eps);
  }
}

}  // namespace poselift
