#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace dgib {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

enum class ErrorCode {
  io,       // missing or unreadable file
  parse,    // malformed input data
  config,   // bad configuration key or value
  shape,    // dimension inconsistency
  domain,   // argument outside the defined domain
  data,     // semantically invalid data (unknown entity, exhausted sampler, ...)
  numeric   // non-finite values where finiteness is required
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

// Interning table mapping names to dense integer ids. Iteration order is the
// interning order, which all downstream determinism relies on.
struct Vocab {
  std::vector<std::string> names;
  std::unordered_map<std::string, std::int32_t> index;

  std::int32_t intern(const std::string& name) {
    auto it = index.find(name);
    if (it != index.end()) return it->second;
    auto id = static_cast<std::int32_t>(names.size());
    names.push_back(name);
    index.emplace(name, id);
    return id;
  }

  std::int32_t lookup(const std::string& name) const {
    auto it = index.find(name);
    return it == index.end() ? -1 : it->second;
  }

  bool contains(const std::string& name) const { return index.count(name) != 0; }

  std::int32_t size() const { return static_cast<std::int32_t>(names.size()); }

  const std::string& name(std::int32_t id) const { return names.at(static_cast<std::size_t>(id)); }
};

struct Triple {
  EntityId head;
  RelationId relation;
  EntityId tail;
};

struct LabeledPair {
  EntityId u;
  EntityId v;
  int label;  // 0 or 1
};

inline bool same_pair(const LabeledPair& a, const LabeledPair& b) {
  return (a.u == b.u && a.v == b.v) || (a.u == b.v && a.v == b.u);
}

}  // namespace dgib
