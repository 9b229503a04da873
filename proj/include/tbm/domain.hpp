#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tbm/error.hpp"
#include "tbm/subset.hpp"

namespace tbm {

inline constexpr std::size_t kDefaultMaxConfigurations = std::size_t{1} << 20;

namespace detail {
inline std::atomic<std::size_t>& max_configurations_slot() {
  static std::atomic<std::size_t> bound{kDefaultMaxConfigurations};
  return bound;
}
}  // namespace detail

// Process-wide bound on the number of configurations of any product frame.
inline std::size_t max_configurations() { return detail::max_configurations_slot().load(); }
inline void set_max_configurations(std::size_t bound) { detail::max_configurations_slot().store(bound); }

// A variable with a finite, ordered frame of outcome labels.
class Variable {
 public:
  Variable() = default;

  Variable(std::string id, std::vector<std::string> frame) : id_(std::move(id)), frame_(std::move(frame)) {
    if (id_.empty()) throw DomainError("variable id must not be empty");
    if (frame_.size() < 2)
      throw DomainError("variable '" + id_ + "' needs at least two outcomes");
    std::unordered_set<std::string> seen;
    for (const auto& label : frame_) {
      if (label.empty()) throw DomainError("variable '" + id_ + "' has an empty outcome label");
      if (!seen.insert(label).second)
        throw DomainError("variable '" + id_ + "' repeats outcome '" + label + "'");
    }
  }

  const std::string& id() const noexcept { return id_; }
  const std::vector<std::string>& frame() const noexcept { return frame_; }
  std::size_t frame_size() const noexcept { return frame_.size(); }

  std::optional<std::size_t> find(const std::string& label) const {
    auto it = std::find(frame_.begin(), frame_.end(), label);
    if (it == frame_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - frame_.begin());
  }

  std::size_t index_of(const std::string& label) const {
    if (auto i = find(label)) return *i;
    throw DomainError("'" + label + "' is not an outcome of variable '" + id_ + "'");
  }

  friend bool operator==(const Variable&, const Variable&) = default;

 private:
  std::string id_;
  std::vector<std::string> frame_;
};

// An ordered set of variables and its enumerated product frame.
//
// Variables are kept sorted by id; that order is canonical for configuration
// indices. Configuration index = sum(label_index[k] * stride[k]) with the
// last variable varying fastest. The empty domain has exactly one
// configuration (the empty tuple).
class Domain {
 public:
  Domain() : rep_(empty_rep()) {}

  explicit Domain(std::vector<Variable> variables) : Domain(std::move(variables), max_configurations()) {}

  Domain(std::vector<Variable> variables, std::size_t max_size) {
    std::sort(variables.begin(), variables.end(),
              [](const Variable& a, const Variable& b) { return a.id() < b.id(); });
    for (std::size_t i = 1; i < variables.size(); ++i)
      if (variables[i].id() == variables[i - 1].id())
        throw DomainError("duplicate variable '" + variables[i].id() + "' in domain");

    auto rep = std::make_shared<Rep>();
    rep->strides.assign(variables.size(), 1);
    std::size_t size = 1;
    for (std::size_t i = variables.size(); i-- > 0;) {
      rep->strides[i] = size;
      const std::size_t n = variables[i].frame_size();
      if (size > max_size / n) throw size_error(variables, max_size);
      size *= n;
    }
    if (size > max_size) throw size_error(variables, max_size);
    rep->size = size;
    rep->variables = std::move(variables);
    rep_ = std::move(rep);
  }

  Domain(std::initializer_list<Variable> variables) : Domain(std::vector<Variable>(variables)) {}

  const std::vector<Variable>& variables() const noexcept { return rep_->variables; }
  std::size_t arity() const noexcept { return rep_->variables.size(); }
  std::size_t size() const noexcept { return rep_->size; }
  std::size_t stride(std::size_t position) const { return rep_->strides.at(position); }
  bool empty() const noexcept { return rep_->variables.empty(); }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(arity());
    for (const auto& v : variables()) out.push_back(v.id());
    return out;
  }

  std::optional<std::size_t> position(const std::string& id) const {
    const auto& vs = variables();
    auto it = std::lower_bound(vs.begin(), vs.end(), id,
                               [](const Variable& v, const std::string& key) { return v.id() < key; });
    if (it == vs.end() || it->id() != id) return std::nullopt;
    return static_cast<std::size_t>(it - vs.begin());
  }

  bool contains(const std::string& id) const { return position(id).has_value(); }

  const Variable& variable(const std::string& id) const {
    if (auto p = position(id)) return variables()[*p];
    throw DomainError("variable '" + id + "' is not in domain " + to_string());
  }

  // Labels are given in canonical (sorted-id) order.
  std::size_t index_of(std::span<const std::string> labels) const {
    if (labels.size() != arity())
      throw DomainError("configuration has " + std::to_string(labels.size()) + " labels, domain " +
                        to_string() + " needs " + std::to_string(arity()));
    std::size_t index = 0;
    for (std::size_t k = 0; k < labels.size(); ++k)
      index += variables()[k].index_of(labels[k]) * rep_->strides[k];
    return index;
  }

  std::size_t index_of(std::initializer_list<std::string> labels) const {
    return index_of(std::span<const std::string>(labels.begin(), labels.size()));
  }

  std::size_t label_index(std::size_t config, std::size_t position) const {
    return (config / rep_->strides[position]) % variables()[position].frame_size();
  }

  std::vector<std::string> labels_at(std::size_t config) const {
    std::vector<std::string> out;
    out.reserve(arity());
    for (std::size_t k = 0; k < arity(); ++k) out.push_back(variables()[k].frame()[label_index(config, k)]);
    return out;
  }

  Subset empty_set() const { return Subset(size()); }
  Subset full() const { return Subset::full(size()); }

  // Set of the listed configurations (each in canonical label order).
  Subset subset(std::initializer_list<std::vector<std::string>> configs) const {
    return subset(std::span<const std::vector<std::string>>(configs.begin(), configs.size()));
  }

  Subset subset(std::span<const std::vector<std::string>> configs) const {
    Subset s(size());
    for (const auto& c : configs) s.set(index_of(c));
    return s;
  }

  // All configurations with `id` set to `label`.
  Subset cylinder(const std::string& id, const std::string& label) const {
    const auto pos = position(id);
    if (!pos) throw DomainError("variable '" + id + "' is not in domain " + to_string());
    const std::size_t want = variables()[*pos].index_of(label);
    Subset s(size());
    for (std::size_t c = 0; c < size(); ++c)
      if (label_index(c, *pos) == want) s.set(c);
    return s;
  }

  bool is_subdomain_of(const Domain& other) const {
    for (const auto& v : variables()) {
      auto p = other.position(v.id());
      if (!p || other.variables()[*p] != v) return false;
    }
    return true;
  }

  Domain union_with(const Domain& other) const {
    if (rep_ == other.rep_) return *this;
    std::vector<Variable> merged = variables();
    for (const auto& v : other.variables()) {
      if (auto p = position(v.id())) {
        if (variables()[*p] != v)
          throw DomainError("variable '" + v.id() + "' appears with two different frames");
      } else {
        merged.push_back(v);
      }
    }
    return Domain(std::move(merged));
  }

  Domain without(const std::string& id) const {
    std::vector<Variable> kept;
    for (const auto& v : variables())
      if (v.id() != id) kept.push_back(v);
    return Domain(std::move(kept));
  }

  std::string to_string() const {
    std::string s = "{";
    for (std::size_t k = 0; k < arity(); ++k) {
      if (k) s += ",";
      s += variables()[k].id();
    }
    return s + "}";
  }

  // "{(yes,+),(no,-)}"; single-variable domains print bare labels.
  std::string format(const Subset& set) const {
    std::string s = "{";
    bool first = true;
    set.for_each([&](std::size_t c) {
      if (!first) s += ",";
      first = false;
      const auto labels = labels_at(c);
      if (labels.size() == 1) {
        s += labels[0];
      } else {
        s += "(";
        for (std::size_t k = 0; k < labels.size(); ++k) s += (k ? "," : "") + labels[k];
        s += ")";
      }
    });
    return s + "}";
  }

  friend bool operator==(const Domain& a, const Domain& b) {
    return a.rep_ == b.rep_ || a.variables() == b.variables();
  }

 private:
  struct Rep {
    std::vector<Variable> variables;
    std::vector<std::size_t> strides;
    std::size_t size = 1;
  };

  static std::shared_ptr<const Rep> empty_rep() {
    static const auto rep = std::make_shared<const Rep>();
    return rep;
  }

  static DomainSizeError size_error(const std::vector<Variable>& variables, std::size_t max_size) {
    std::string ids;
    for (const auto& v : variables) ids += (ids.empty() ? "" : ",") + v.id();
    return DomainSizeError("product frame of {" + ids + "} exceeds the bound of " + std::to_string(max_size) +
                           " configurations");
  }

  std::shared_ptr<const Rep> rep_;
};

// For every configuration of `from`, the index of its projection in `to`.
// Requires `to` to be a subdomain of `from`.
inline std::vector<std::uint32_t> projection_map(const Domain& from, const Domain& to) {
  if (!to.is_subdomain_of(from))
    throw DomainError("domain " + to.to_string() + " is not a subdomain of " + from.to_string());
  std::vector<std::size_t> pos_in_from;
  pos_in_from.reserve(to.arity());
  for (const auto& v : to.variables()) pos_in_from.push_back(*from.position(v.id()));

  std::vector<std::uint32_t> map(from.size());
  for (std::size_t c = 0; c < from.size(); ++c) {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < to.arity(); ++k) idx += from.label_index(c, pos_in_from[k]) * to.stride(k);
    map[c] = static_cast<std::uint32_t>(idx);
  }
  return map;
}

// A set of configurations tied to its domain.
struct ConfigurationSet {
  Domain domain;
  Subset members;

  ConfigurationSet(Domain d, Subset m) : domain(std::move(d)), members(std::move(m)) {
    if (members.size() != domain.size()) throw DomainError("configuration set does not match its domain");
  }

  bool contains(std::span<const std::string> labels) const { return members.test(domain.index_of(labels)); }
  std::size_t size() const { return members.count(); }
  std::string to_string() const { return domain.format(members); }

  friend bool operator==(const ConfigurationSet&, const ConfigurationSet&) = default;
};

}  // namespace tbm
