#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tagrec {

// Normalizes free text for downstream tokenization: strips <pre>/<code>
// blocks and ``` fences together with their contents, removes remaining
// HTML tags, lowercases ASCII, drops control characters and collapses
// whitespace runs to a single space with no leading/trailing blanks.
// Idempotent: preprocess_text(preprocess_text(s)) == preprocess_text(s).
std::string preprocess_text(std::string_view raw);

// Tag strings are lowercased (ASCII) and trimmed, nothing more.
std::string normalize_tag(std::string_view raw);

// Splits preprocessed text on whitespace.
std::vector<std::string> split_words(std::string_view text);

// Token ids used with the mock embedder. Sequences are wrapped in start/end
// markers the way the real exporter keeps the encoder's special tokens.
inline constexpr std::uint32_t kStartToken = 1;
inline constexpr std::uint32_t kEndToken = 2;

std::uint32_t word_token_id(std::string_view word);
std::vector<std::uint32_t> mock_token_ids(std::string_view preprocessed_text);

}  // namespace tagrec
