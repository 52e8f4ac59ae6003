#pragma once

// Shared helpers for the unit suites: independent policy-evaluation oracle,
// random tree generators, small fixture builders. Oracles here must stay
// independent of the implementation paths they check.

#include <map>
#include <vector>

#include "medshare/contracts.hpp"
#include "medshare/ledger.hpp"
#include "medshare/policy.hpp"
#include "medshare/rng.hpp"

namespace testsupport {

using medshare::Rng;
using medshare::policy::Attribute;
using medshare::policy::AttributeSet;
using medshare::policy::PolicyNode;

inline Attribute attr(const std::string& name) { return Attribute::canonicalize(name); }

inline AttributeSet attrs(std::initializer_list<std::string> names) {
  AttributeSet out;
  for (const auto& n : names) out.insert(attr(n));
  return out;
}

// Independent policy oracle: iterative post-order evaluation over an explicit
// stack (the implementation uses short-circuiting recursion).
inline bool oracle_satisfy(const PolicyNode& root, const AttributeSet& held) {
  std::vector<const PolicyNode*> order;
  std::vector<const PolicyNode*> stack = {&root};
  while (!stack.empty()) {
    const PolicyNode* node = stack.back();
    stack.pop_back();
    order.push_back(node);
    for (const auto& child : node->children) stack.push_back(&child);
  }
  std::map<const PolicyNode*, bool> value;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const PolicyNode* node = *it;
    if (node->is_leaf()) {
      value[node] = held.contains(*node->attribute);
    } else {
      size_t count = 0;
      for (const auto& child : node->children) count += value.at(&child) ? 1 : 0;
      value[node] = count >= node->threshold;
    }
  }
  return value.at(&root);
}

// Random policy tree with at most `leaf_budget` leaves over the alphabet.
inline PolicyNode random_tree(Rng& rng, const std::vector<Attribute>& alphabet,
                              size_t& leaf_budget, size_t depth = 0) {
  if (leaf_budget <= 1 || depth >= 3 || rng.next_below(100) < 30) {
    leaf_budget -= 1;
    return PolicyNode::leaf(alphabet[rng.next_below(alphabet.size())]);
  }
  size_t max_children = std::min<size_t>(leaf_budget, 2 + rng.next_below(3));
  size_t n = 2 + rng.next_below(max_children - 1);
  std::vector<PolicyNode> children;
  for (size_t i = 0; i < n && leaf_budget > 0; ++i) {
    children.push_back(random_tree(rng, alphabet, leaf_budget, depth + 1));
  }
  uint32_t t = 1 + static_cast<uint32_t>(rng.next_below(children.size()));
  return PolicyNode::gate(t, std::move(children));
}

inline std::vector<Attribute> alphabet(size_t n) {
  std::vector<Attribute> out;
  for (size_t i = 0; i < n; ++i) out.push_back(attr(std::string(1, static_cast<char>('a' + i))));
  return out;
}

// All subsets of the given alphabet.
inline std::vector<AttributeSet> all_subsets(const std::vector<Attribute>& alpha) {
  std::vector<AttributeSet> out;
  for (size_t mask = 0; mask < (size_t{1} << alpha.size()); ++mask) {
    AttributeSet s;
    for (size_t i = 0; i < alpha.size(); ++i) {
      if (mask & (size_t{1} << i)) s.insert(alpha[i]);
    }
    out.push_back(std::move(s));
  }
  return out;
}

// Exhaustive enumeration of small gate shapes: every threshold over every
// child arity up to `max_children`, leaves drawn cyclically from alphabet,
// plus one level of nesting.
inline std::vector<PolicyNode> enumerate_small_trees(const std::vector<Attribute>& alpha,
                                                     size_t max_children) {
  std::vector<PolicyNode> trees;
  for (const auto& a : alpha) trees.push_back(PolicyNode::leaf(a));
  for (size_t n = 1; n <= max_children; ++n) {
    for (uint32_t t = 1; t <= n; ++t) {
      std::vector<PolicyNode> children;
      for (size_t i = 0; i < n; ++i) children.push_back(PolicyNode::leaf(alpha[i % alpha.size()]));
      trees.push_back(PolicyNode::gate(t, std::move(children)));
      // nested variant: first child replaced by an inner gate
      if (n >= 2) {
        for (uint32_t inner_t = 1; inner_t <= 2; ++inner_t) {
          std::vector<PolicyNode> outer;
          outer.push_back(PolicyNode::gate(
              inner_t, {PolicyNode::leaf(alpha[(n + 1) % alpha.size()]),
                        PolicyNode::leaf(alpha[(n + 2) % alpha.size()])}));
          for (size_t i = 1; i < n; ++i) outer.push_back(PolicyNode::leaf(alpha[i % alpha.size()]));
          trees.push_back(PolicyNode::gate(t, std::move(outer)));
        }
      }
    }
  }
  return trees;
}

// Chain with the standard contract kinds registered and the given accounts.
inline std::unique_ptr<medshare::ledger::Chain> make_chain(
    const std::vector<medshare::Address>& accounts, uint64_t seed = 0,
    std::map<std::string, uint64_t> gas_costs = medshare::ledger::GasTable::defaults().to_map()) {
  medshare::ledger::ChainConfig config;
  config.accounts = accounts;
  config.seed = seed;
  config.gas_costs = std::move(gas_costs);
  auto chain = std::make_unique<medshare::ledger::Chain>(config);
  medshare::contracts::register_standard_kinds(*chain);
  return chain;
}

}  // namespace testsupport
