#ifndef SUBREGWEIGH_UTF8_H_
#define SUBREGWEIGH_UTF8_H_

#include <string>
#include <string_view>
#include <vector>

namespace subregweigh {

// Returns the byte length of the UTF-8 sequence starting at text[pos], or 0
// if the bytes there do not form a valid scalar value.
int Utf8SequenceLength(std::string_view text, size_t pos);

bool IsValidUtf8(std::string_view text);

// Splits text into one string per Unicode scalar value. Throws an Error of
// kind kEncoding on invalid input.
std::vector<std::string> SplitUtf8(std::string_view text);

// Number of scalar values; text must be valid UTF-8.
size_t Utf8Length(std::string_view text);

}  // namespace subregweigh

#endif  // SUBREGWEIGH_UTF8_H_
