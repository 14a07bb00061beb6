#pragma once

#include <string>
#include <string_view>

namespace l3det::utf8 {

/// Decodes UTF-8 into code points. Throws Error{MalformedRecord} on invalid
/// sequences (overlong forms, surrogates, truncation).
std::u32string decode(std::string_view bytes);

std::string encode(std::u32string_view code_points);

void append(std::string& out, char32_t cp);

}  // namespace l3det::utf8
