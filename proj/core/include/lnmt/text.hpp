#pragma once

#include <string>
#include <vector>

namespace lnmt {

/// Lowercases and splits on whitespace; punctuation runs become their own
/// tokens ("Fake NEWS!" -> ["fake", "news", "!"]). Bytes >= 0x80 are treated
/// as word characters so UTF-8 words stay intact. Empty text -> no tokens.
std::vector<std::string> tokenize(const std::string& text);

}  // namespace lnmt
