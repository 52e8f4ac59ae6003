#include "doctest.h"
#include "medshare/policy.hpp"
#include "support.hpp"

using namespace medshare;
using namespace testsupport;
using policy::AccessPolicy;
using policy::AttributeSet;
using policy::PolicyNode;
using policy::PrivilegeStructure;

TEST_CASE("attribute canonicalization folds case and trims") {
  CHECK(attr("  Doctor ").name() == "doctor");
  CHECK(attr("CARDIOLOGY").name() == "cardiology");
  // idempotent
  CHECK(policy::Attribute::canonicalize(attr("DOCTOR").name()).name() == "doctor");
  CHECK_THROWS_AS(attr("   "), std::invalid_argument);
  CHECK_THROWS_AS(attr("two words"), std::invalid_argument);
}

TEST_CASE("parse: single attribute is a leaf") {
  auto p = policy::parse_policy("doctor");
  CHECK(p.root.is_leaf());
  CHECK(p.root.attribute->name() == "doctor");
}

TEST_CASE("parse: AND desugars to threshold = arity") {
  auto p = policy::parse_policy("AND(doctor, cardiology)");
  REQUIRE_FALSE(p.root.is_leaf());
  CHECK(p.root.threshold == 2);
  CHECK(p.root.children.size() == 2);
  CHECK(p.root.children[0].attribute->name() == "doctor");
  CHECK(p.root.children[1].attribute->name() == "cardiology");

  auto q = policy::parse_policy("OR(nurse, doctor)");
  CHECK(q.root.threshold == 1);
}

TEST_CASE("parse: THRESH gate matches brute-force evaluation over all subsets") {
  auto p = policy::parse_policy("THRESH(2, a, b, c)");
  REQUIRE(p.root.threshold == 2);
  REQUIRE(p.root.children.size() == 3);
  auto alpha = alphabet(3);
  for (const auto& subset : all_subsets(alpha)) {
    CHECK(policy::satisfy(p, subset) == oracle_satisfy(p.root, subset));
    CHECK(policy::satisfy(p, subset) == (subset.size() >= 2));
  }
  CHECK(policy::satisfy(p, attrs({"a", "c"})));
}

TEST_CASE("parse: errors report a position") {
  CHECK_THROWS_AS(policy::parse_policy(""), policy::ParseError);
  CHECK_THROWS_AS(policy::parse_policy("AND(doctor"), policy::ParseError);
  CHECK_THROWS_AS(policy::parse_policy("XOR(a, b)"), policy::ParseError);
  CHECK_THROWS_AS(policy::parse_policy("doctor nurse"), policy::ParseError);
  try {
    policy::parse_policy("AND(a,)");
    FAIL("expected ParseError");
  } catch (const policy::ParseError& e) {
    CHECK(e.position == 6);
  }
}

TEST_CASE("parse: threshold out of range rejected") {
  CHECK_THROWS_AS(policy::parse_policy("THRESH(0, a, b)"), policy::ParseError);
  CHECK_THROWS_AS(policy::parse_policy("THRESH(3, a, b)"), policy::ParseError);
  CHECK_NOTHROW(policy::parse_policy("THRESH(1, a)"));
}

TEST_CASE("satisfy: leaves") {
  auto p = policy::parse_policy("a");
  CHECK(policy::satisfy(p, attrs({"a"})));
  CHECK_FALSE(policy::satisfy(p, AttributeSet{}));
  CHECK_FALSE(policy::satisfy(p, attrs({"b"})));
}

TEST_CASE("satisfy: equals independent oracle on random trees, all subsets") {
  Rng rng(2024);
  auto alpha = alphabet(4);
  auto subsets = all_subsets(alpha);
  for (int i = 0; i < 300; ++i) {
    size_t budget = 12;
    PolicyNode tree = random_tree(rng, alpha, budget);
    for (const auto& subset : subsets) {
      CAPTURE(policy::to_dsl(tree));
      REQUIRE(policy::satisfy(tree, subset) == oracle_satisfy(tree, subset));
    }
  }
}

TEST_CASE("satisfy: monotone in the attribute set") {
  Rng rng(7);
  auto alpha = alphabet(6);
  for (int i = 0; i < 200; ++i) {
    size_t budget = 10;
    PolicyNode tree = random_tree(rng, alpha, budget);
    AttributeSet a, b;
    for (const auto& x : alpha) {
      bool in_a = rng.next_below(2) == 0;
      if (in_a) a.insert(x);
      if (in_a || rng.next_below(2) == 0) b.insert(x);  // a subset of b
    }
    if (policy::satisfy(tree, a)) CHECK(policy::satisfy(tree, b));
  }
}

TEST_CASE("classify: smallest satisfied level wins") {
  PrivilegeStructure s;
  s.levels.push_back(policy::parse_policy("AND(a, b, c)"));
  s.levels.push_back(policy::parse_policy("AND(a, b)"));
  s.levels.push_back(policy::parse_policy("a"));

  // satisfies T_1 and necessarily T_2, T_3: scan breaks at the first level
  CHECK(policy::classify(s, attrs({"a", "b", "c"})) == 1);
  CHECK(policy::classify(s, attrs({"a", "b"})) == 2);
  CHECK(policy::classify(s, attrs({"a"})) == 3);
  CHECK(policy::classify(s, attrs({"b"})) == std::nullopt);
  CHECK(policy::classify(s, AttributeSet{}) == std::nullopt);
}

TEST_CASE("classify: equals a linear scan with the satisfy oracle") {
  Rng rng(99);
  auto alpha = alphabet(5);
  for (int i = 0; i < 100; ++i) {
    PrivilegeStructure s;
    for (int level = 0; level < 4; ++level) {
      size_t budget = 6;
      s.levels.push_back(AccessPolicy{random_tree(rng, alpha, budget), ""});
    }
    for (const auto& subset : all_subsets(alpha)) {
      std::optional<size_t> expected;
      for (size_t j = 0; j < s.levels.size(); ++j) {
        if (oracle_satisfy(s.levels[j].root, subset)) {
          expected = j + 1;
          break;
        }
      }
      REQUIRE(policy::classify(s, subset) == expected);
    }
  }
}

TEST_CASE("classify result implies satisfy and no earlier level") {
  Rng rng(5);
  auto alpha = alphabet(5);
  for (int i = 0; i < 100; ++i) {
    PrivilegeStructure s;
    for (int level = 0; level < 4; ++level) {
      size_t budget = 5;
      s.levels.push_back(AccessPolicy{random_tree(rng, alpha, budget), ""});
    }
    AttributeSet held;
    for (const auto& x : alpha) {
      if (rng.next_below(2)) held.insert(x);
    }
    auto got = policy::classify(s, held);
    if (got) {
      CHECK(policy::satisfy(s.levels[*got - 1], held));
      for (size_t j = 0; j + 1 < *got; ++j) CHECK_FALSE(policy::satisfy(s.levels[j], held));
    }
  }
}

TEST_CASE("validate_structure accepts a k=1 single-leaf structure") {
  PrivilegeStructure s;
  s.levels.push_back(policy::parse_policy("doctor"));
  CHECK_NOTHROW(policy::validate_structure(s));
}

TEST_CASE("validate_structure rejects broken gates with a node path") {
  PrivilegeStructure zero_threshold;
  zero_threshold.levels.push_back(
      AccessPolicy{PolicyNode::gate(0, {PolicyNode::leaf(attr("a"))}), ""});
  CHECK_THROWS_AS(policy::validate_structure(zero_threshold), policy::StructureError);

  PrivilegeStructure overflow;
  overflow.levels.push_back(AccessPolicy{PolicyNode::gate(3, {PolicyNode::leaf(attr("a")),
                                                              PolicyNode::leaf(attr("b"))}),
                                         ""});
  try {
    policy::validate_structure(overflow);
    FAIL("expected StructureError");
  } catch (const policy::StructureError& e) {
    CHECK(e.path == "levels[0]");
  }

  PrivilegeStructure childless;
  childless.levels.push_back(AccessPolicy{PolicyNode::gate(1, {}), ""});
  // a gate with no children parses as a leaf without attribute
  CHECK_THROWS_AS(policy::validate_structure(childless), policy::StructureError);

  PrivilegeStructure empty;
  CHECK_THROWS_AS(policy::validate_structure(empty), policy::StructureError);
}

TEST_CASE("policy binary encoding round-trips") {
  Rng rng(11);
  auto alpha = alphabet(5);
  for (int i = 0; i < 50; ++i) {
    size_t budget = 8;
    PolicyNode tree = random_tree(rng, alpha, budget);
    serial::Writer w;
    policy::encode_node(w, tree);
    serial::Reader r(w.bytes());
    PolicyNode back = policy::decode_node(r);
    // same DSL rendering implies same shape and attributes
    CHECK(policy::to_dsl(tree) == policy::to_dsl(back));
  }
}

TEST_CASE("to_dsl output reparses to an equivalent tree") {
  Rng rng(13);
  auto alpha = alphabet(4);
  auto subsets = all_subsets(alpha);
  for (int i = 0; i < 50; ++i) {
    size_t budget = 8;
    PolicyNode tree = random_tree(rng, alpha, budget);
    auto reparsed = policy::parse_policy(policy::to_dsl(tree));
    for (const auto& subset : subsets) {
      REQUIRE(policy::satisfy(tree, subset) == policy::satisfy(reparsed, subset));
    }
  }
}
