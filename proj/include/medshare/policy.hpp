#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "medshare/serial.hpp"

namespace medshare::policy {

// Canonical attribute token: trimmed, ASCII-case-folded, non-empty, no
// internal whitespace. Canonicalization is idempotent so registration and
// policy text can never disagree on formatting alone.
class Attribute {
 public:
  // Throws std::invalid_argument if the trimmed token is empty or contains
  // whitespace.
  static Attribute canonicalize(const std::string& raw);

  const std::string& name() const { return name_; }
  auto operator<=>(const Attribute&) const = default;

 private:
  explicit Attribute(std::string name) : name_(std::move(name)) {}
  std::string name_;
};

using AttributeSet = std::set<Attribute>;

// Threshold-gate policy tree. AND and OR are threshold gates with t = n and
// t = 1; the parser desugars them.
struct PolicyNode {
  // leaf iff children empty
  std::optional<Attribute> attribute;     // set on leaves
  uint32_t threshold = 0;                 // set on gates, 1 <= t <= children
  std::vector<PolicyNode> children;

  bool is_leaf() const { return children.empty(); }

  static PolicyNode leaf(Attribute a) { return {std::move(a), 0, {}}; }
  static PolicyNode gate(uint32_t t, std::vector<PolicyNode> ch) { return {std::nullopt, t, std::move(ch)}; }
};

struct AccessPolicy {
  PolicyNode root;
  std::string source;  // original DSL text when parsed, for export/reporting

  size_t leaf_count() const;
  AttributeSet leaf_attributes() const;
};

// k-level privilege structure; levels[0] is T_1, the most privileged.
struct PrivilegeStructure {
  std::vector<AccessPolicy> levels;

  size_t k() const { return levels.size(); }
};

class ParseError : public std::invalid_argument {
 public:
  ParseError(const std::string& what, size_t position)
      : std::invalid_argument(what + " at position " + std::to_string(position)), position(position) {}
  size_t position;
};

// Grammar: expr := attr | AND(expr,...) | OR(expr,...) | THRESH(t, expr,...)
// Leaf attributes are canonicalized. Throws ParseError with the offending
// position; THRESH with t < 1 or t > arity is rejected.
AccessPolicy parse_policy(const std::string& text);

// True iff attrs satisfies the tree: a leaf holds when its attribute is in
// attrs, a gate when at least `threshold` children hold. Total function.
bool satisfy(const AccessPolicy& policy, const AttributeSet& attrs);
bool satisfy(const PolicyNode& node, const AttributeSet& attrs);

// satisfy() that also counts visited nodes; the ledger charges compute gas
// per visited node so request cost tracks scan depth.
bool satisfy_counting(const PolicyNode& node, const AttributeSet& attrs, size_t& visited);

// Smallest 1-based level index whose policy is satisfied (the scan breaks at
// the first match), or nullopt.
std::optional<size_t> classify(const PrivilegeStructure& structure, const AttributeSet& attrs);

class StructureError : public std::invalid_argument {
 public:
  StructureError(const std::string& what, std::string path)
      : std::invalid_argument(what + " (at " + path + ")"), path(std::move(path)) {}
  std::string path;
};

// Canonical binary encoding of policy trees (shared by ABE ciphertexts and
// contract init args; layout in docs/FORMATS.md).
void encode_node(serial::Writer& w, const PolicyNode& node);
PolicyNode decode_node(serial::Reader& r);  // throws serial::DecodeError
Bytes encode_structure(const PrivilegeStructure& s);
PrivilegeStructure decode_structure(ByteView data);

// Renders a tree back to DSL text (AND/OR sugar where thresholds allow).
std::string to_dsl(const PolicyNode& node);

// Checks every structural invariant (k >= 1, gates have 1 <= t <= arity and
// at least one child, trees have at least one leaf). Throws StructureError
// naming the offending node path, e.g. "levels[2].children[0]".
void validate_structure(const PrivilegeStructure& structure);

}  // namespace medshare::policy
