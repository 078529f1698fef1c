#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace socratic {

/// Lowercase word tokens. Never contains an empty token.
using TokenSequence = std::vector<std::string>;

/// Unicode-aware word segmentation over UTF-8 text. Letters and digits form
/// words; apostrophes and hyphens are kept only between two word characters.
/// Curly apostrophes are folded to '\''. Output is lowercased. Invalid UTF-8
/// bytes are treated as separators.
TokenSequence tokenize(std::string_view text);

/// Porter (1980) suffix-stripping stemmer. Expects a lowercase token;
/// words of length <= 2 and non-ASCII words are returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace socratic
