#include "subregweigh/utf8.h"

#include "subregweigh/error.h"

namespace subregweigh {

int Utf8SequenceLength(std::string_view text, size_t pos) {
  const auto byte = [&](size_t i) {
    return static_cast<unsigned char>(text[i]);
  };
  const unsigned char lead = byte(pos);
  int length;
  uint32_t value;
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) {
    length = 2;
    value = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    length = 3;
    value = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    length = 4;
    value = lead & 0x07;
  } else {
    return 0;
  }
  if (pos + length > text.size()) return 0;
  for (int i = 1; i < length; ++i) {
    const unsigned char c = byte(pos + i);
    if ((c & 0xC0) != 0x80) return 0;
    value = (value << 6) | (c & 0x3F);
  }
  // Reject overlong forms, surrogates and values past U+10FFFF.
  static constexpr uint32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
  if (value < kMin[length]) return 0;
  if (value >= 0xD800 && value <= 0xDFFF) return 0;
  if (value > 0x10FFFF) return 0;
  return length;
}

bool IsValidUtf8(std::string_view text) {
  for (size_t pos = 0; pos < text.size();) {
    const int length = Utf8SequenceLength(text, pos);
    if (length == 0) return false;
    pos += length;
  }
  return true;
}

std::vector<std::string> SplitUtf8(std::string_view text) {
  std::vector<std::string> chars;
  chars.reserve(text.size());
  for (size_t pos = 0; pos < text.size();) {
    const int length = Utf8SequenceLength(text, pos);
    if (length == 0) {
      throw Error(ErrorKind::kEncoding,
                  "invalid UTF-8 at byte " + std::to_string(pos));
    }
    chars.emplace_back(text.substr(pos, length));
    pos += length;
  }
  return chars;
}

size_t Utf8Length(std::string_view text) {
  size_t count = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) ++count;
  }
  return count;
}

}  // namespace subregweigh
