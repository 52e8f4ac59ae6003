#include "medshare/policy.hpp"

#include <cctype>

namespace medshare::policy {

Attribute Attribute::canonicalize(const std::string& raw) {
  size_t b = 0, e = raw.size();
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (b < e && is_space(raw[b])) ++b;
  while (e > b && is_space(raw[e - 1])) --e;
  if (b == e) throw std::invalid_argument("attribute: empty token");
  std::string name;
  name.reserve(e - b);
  for (size_t i = b; i < e; ++i) {
    unsigned char c = raw[i];
    if (is_space(c)) throw std::invalid_argument("attribute: whitespace inside token '" + raw + "'");
    name.push_back(static_cast<char>(std::tolower(c)));
  }
  return Attribute(std::move(name));
}

size_t AccessPolicy::leaf_count() const {
  size_t n = 0;
  auto walk = [&](auto&& self, const PolicyNode& node) -> void {
    if (node.is_leaf()) {
      ++n;
      return;
    }
    for (const auto& c : node.children) self(self, c);
  };
  walk(walk, root);
  return n;
}

AttributeSet AccessPolicy::leaf_attributes() const {
  AttributeSet out;
  auto walk = [&](auto&& self, const PolicyNode& node) -> void {
    if (node.is_leaf()) {
      out.insert(*node.attribute);
      return;
    }
    for (const auto& c : node.children) self(self, c);
  };
  walk(walk, root);
  return out;
}

namespace {

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  PolicyNode parse() {
    PolicyNode node = expr();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
    return node;
  }

 private:
  PolicyNode expr() {
    skip_ws();
    size_t start = pos_;
    std::string tok = token();
    skip_ws();
    if (!at('(')) {
      return PolicyNode::leaf(Attribute::canonicalize(tok));
    }
    if (tok == "AND" || tok == "OR") {
      auto children = child_list();
      uint32_t t = tok == "AND" ? static_cast<uint32_t>(children.size()) : 1u;
      return PolicyNode::gate(t, std::move(children));
    }
    if (tok == "THRESH") {
      expect('(');
      skip_ws();
      uint64_t t = integer();
      skip_ws();
      expect(',');
      std::vector<PolicyNode> children;
      for (;;) {
        children.push_back(expr());
        skip_ws();
        if (at(',')) {
          ++pos_;
          continue;
        }
        expect(')');
        break;
      }
      if (t < 1 || t > children.size())
        throw ParseError("threshold " + std::to_string(t) + " out of range for " +
                             std::to_string(children.size()) + " children",
                         start);
      return PolicyNode::gate(static_cast<uint32_t>(t), std::move(children));
    }
    throw ParseError("unknown gate '" + tok + "'", start);
  }

  std::vector<PolicyNode> child_list() {
    expect('(');
    std::vector<PolicyNode> children;
    for (;;) {
      children.push_back(expr());
      skip_ws();
      if (at(',')) {
        ++pos_;
        continue;
      }
      expect(')');
      break;
    }
    return children;
  }

  std::string token() {
    size_t start = pos_;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == ':') {
        ++pos_;
      } else {
        break;
      }
    }
    if (pos_ == start) throw ParseError("expected attribute or gate", pos_);
    return text_.substr(start, pos_ - start);
  }

  uint64_t integer() {
    size_t start = pos_;
    uint64_t v = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      v = v * 10 + static_cast<uint64_t>(text_[pos_] - '0');
      ++pos_;
    }
    if (pos_ == start) throw ParseError("expected threshold integer", pos_);
    return v;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool at(char c) const { return pos_ < text_.size() && text_[pos_] == c; }
  void expect(char c) {
    if (!at(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  const std::string& text_;
  size_t pos_ = 0;
};

}  // namespace

AccessPolicy parse_policy(const std::string& text) {
  return AccessPolicy{Parser(text).parse(), text};
}

bool satisfy(const PolicyNode& node, const AttributeSet& attrs) {
  size_t ignored = 0;
  return satisfy_counting(node, attrs, ignored);
}

bool satisfy(const AccessPolicy& policy, const AttributeSet& attrs) {
  return satisfy(policy.root, attrs);
}

bool satisfy_counting(const PolicyNode& node, const AttributeSet& attrs, size_t& visited) {
  ++visited;
  if (node.is_leaf()) return attrs.contains(*node.attribute);
  uint32_t hits = 0;
  uint32_t remaining = static_cast<uint32_t>(node.children.size());
  for (const auto& child : node.children) {
    if (satisfy_counting(child, attrs, visited)) ++hits;
    --remaining;
    if (hits >= node.threshold) return true;
    if (hits + remaining < node.threshold) return false;  // unreachable threshold
  }
  return false;
}

std::optional<size_t> classify(const PrivilegeStructure& structure, const AttributeSet& attrs) {
  for (size_t i = 0; i < structure.levels.size(); ++i) {
    if (satisfy(structure.levels[i], attrs)) return i + 1;
  }
  return std::nullopt;
}

namespace {

void validate_node(const PolicyNode& node, const std::string& path, size_t& leaves) {
  if (node.is_leaf()) {
    if (!node.attribute) throw StructureError("leaf without attribute", path);
    ++leaves;
    return;
  }
  if (node.attribute) throw StructureError("gate carries an attribute", path);
  if (node.children.empty()) throw StructureError("gate with zero children", path);
  if (node.threshold < 1) throw StructureError("gate threshold below 1", path);
  if (node.threshold > node.children.size())
    throw StructureError("gate threshold " + std::to_string(node.threshold) + " exceeds " +
                             std::to_string(node.children.size()) + " children",
                         path);
  for (size_t i = 0; i < node.children.size(); ++i) {
    validate_node(node.children[i], path + ".children[" + std::to_string(i) + "]", leaves);
  }
}

}  // namespace

void validate_structure(const PrivilegeStructure& structure) {
  if (structure.levels.empty()) throw StructureError("structure has no levels", "levels");
  for (size_t i = 0; i < structure.levels.size(); ++i) {
    size_t leaves = 0;
    validate_node(structure.levels[i].root, "levels[" + std::to_string(i) + "]", leaves);
    if (leaves == 0) throw StructureError("policy has no leaves", "levels[" + std::to_string(i) + "]");
  }
}

void encode_node(serial::Writer& w, const PolicyNode& node) {
  if (node.is_leaf()) {
    w.u8(0);
    w.str(node.attribute->name());
    return;
  }
  w.u8(1);
  w.u32(node.threshold);
  w.u32(static_cast<uint32_t>(node.children.size()));
  for (const auto& c : node.children) encode_node(w, c);
}

namespace {

PolicyNode decode_node_at(serial::Reader& r, size_t depth) {
  if (depth > 64) throw serial::DecodeError("policy: nesting too deep");
  uint8_t tag = r.u8();
  if (tag == 0) {
    try {
      return PolicyNode::leaf(Attribute::canonicalize(r.str()));
    } catch (const std::invalid_argument& e) {
      throw serial::DecodeError(std::string("policy: ") + e.what());
    }
  }
  if (tag != 1) throw serial::DecodeError("policy: unknown node tag");
  uint32_t threshold = r.u32();
  uint32_t count = r.u32();
  if (count == 0 || count > 4096) throw serial::DecodeError("policy: bad child count");
  std::vector<PolicyNode> children;
  children.reserve(count);
  for (uint32_t i = 0; i < count; ++i) children.push_back(decode_node_at(r, depth + 1));
  return PolicyNode::gate(threshold, std::move(children));
}

}  // namespace

PolicyNode decode_node(serial::Reader& r) { return decode_node_at(r, 0); }

Bytes encode_structure(const PrivilegeStructure& s) {
  serial::Writer w;
  w.u8(0x01);
  w.u32(static_cast<uint32_t>(s.levels.size()));
  for (const auto& level : s.levels) encode_node(w, level.root);
  return w.take();
}

PrivilegeStructure decode_structure(ByteView data) {
  serial::Reader r(data);
  if (r.u8() != 0x01) throw serial::DecodeError("structure: unknown version");
  uint32_t k = r.u32();
  if (k == 0 || k > 4096) throw serial::DecodeError("structure: bad level count");
  PrivilegeStructure s;
  s.levels.reserve(k);
  for (uint32_t i = 0; i < k; ++i) {
    PolicyNode root = decode_node(r);
    s.levels.push_back(AccessPolicy{std::move(root), ""});
  }
  r.expect_end();
  for (auto& level : s.levels) level.source = to_dsl(level.root);
  return s;
}

std::string to_dsl(const PolicyNode& node) {
  if (node.is_leaf()) return node.attribute->name();
  std::string inner;
  for (size_t i = 0; i < node.children.size(); ++i) {
    if (i) inner += ", ";
    inner += to_dsl(node.children[i]);
  }
  if (node.threshold == node.children.size()) return "AND(" + inner + ")";
  if (node.threshold == 1) return "OR(" + inner + ")";
  return "THRESH(" + std::to_string(node.threshold) + ", " + inner + ")";
}

}  // namespace medshare::policy
