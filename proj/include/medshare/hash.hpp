#pragma once

#include "medshare/bytes.hpp"

namespace medshare {

// All digests in this project are SHA-256.
Hash256 sha256(ByteView data);

inline Hash256 sha256(const Bytes& a, const Bytes& b) { return sha256(concat(a, b)); }

// Domain-separated hash: sha256(tag || data). Tags are short ASCII strings
// listed in docs/FORMATS.md; distinct tags keep derived keys independent.
Hash256 tagged_hash(const std::string& tag, ByteView data);

// Last 20 bytes of sha256(data); account and contract addresses.
Address address_from(ByteView data);

}  // namespace medshare
