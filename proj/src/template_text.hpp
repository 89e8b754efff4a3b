#pragma once

// Internal tokenizer for `${name}` placeholders, shared by the definition
// validator and the engine's renderer.

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace benchkit::detail {

struct TemplatePiece {
  bool placeholder = false;
  std::string text;  // literal text, or placeholder name
};

class TemplateSyntaxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool is_placeholder_char(char c, bool first) {
  if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') return true;
  if (first) return false;
  return (c >= '0' && c <= '9') || c == '.' || c == '-';
}

inline std::vector<TemplatePiece> tokenize_template(std::string_view text) {
  std::vector<TemplatePiece> pieces;
  std::string literal;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '$' && i + 1 < text.size() && text[i + 1] == '{') {
      const auto close = text.find('}', i + 2);
      if (close == std::string_view::npos) {
        throw TemplateSyntaxError("unterminated placeholder at offset " + std::to_string(i));
      }
      const auto name = text.substr(i + 2, close - i - 2);
      bool ok = !name.empty();
      for (std::size_t k = 0; ok && k < name.size(); ++k) ok = is_placeholder_char(name[k], k == 0);
      if (!ok) {
        throw TemplateSyntaxError("malformed placeholder '${" + std::string(name) + "}' at offset " +
                                  std::to_string(i));
      }
      if (!literal.empty()) pieces.push_back({false, std::move(literal)});
      literal.clear();
      pieces.push_back({true, std::string(name)});
      i = close + 1;
    } else {
      literal.push_back(text[i]);
      ++i;
    }
  }
  if (!literal.empty()) pieces.push_back({false, std::move(literal)});
  return pieces;
}

}  // namespace benchkit::detail
