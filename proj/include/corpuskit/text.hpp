#pragma once

#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers. Entity offsets count Unicode scalar values, so all index
// arithmetic happens on decoded code points.
namespace corpuskit::text {

/// Malformed bytes decode to U+FFFD, one replacement per offending byte.
std::u32string decode_utf8(std::string_view utf8);
std::string encode_utf8(std::u32string_view cps);

std::size_t length(std::string_view utf8);

/// Letters, digits and underscore. Letters cover ASCII and Latin-1/Latin
/// Extended-A (umlauts and accented forms common in European hashtags).
bool is_word_char(char32_t c);

char32_t fold(char32_t c);
std::string fold(std::string_view utf8);

bool iequals(std::string_view a, std::string_view b);

/// Maximal runs of word characters, case-folded.
std::vector<std::string> tokens(std::string_view utf8);

}  // namespace corpuskit::text
