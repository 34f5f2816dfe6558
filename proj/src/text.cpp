#include "tagrec/text.hpp"

#include <algorithm>

namespace tagrec {
namespace {

char lower_ascii(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_control(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u < 0x20 || u == 0x7f;
}

bool tag_start(char c) {
    return (c >= 'a' && c <= 'z') || c == '/' || c == '!';
}

// Removes `open ... close` spans (contents included). An unterminated block
// runs to the end of the text.
std::string strip_blocks(std::string_view s, std::string_view open, std::string_view close) {
    std::string out;
    out.reserve(s.size());
    std::size_t pos = 0;
    while (pos < s.size()) {
        const std::size_t start = s.find(open, pos);
        if (start == std::string_view::npos) {
            out.append(s.substr(pos));
            break;
        }
        out.append(s.substr(pos, start - pos));
        out.push_back(' ');
        const std::size_t end = s.find(close, start + open.size());
        if (end == std::string_view::npos) break;
        pos = end + close.size();
    }
    return out;
}

// `<pre ...>` or `<pre>`; the tag name must end at '>' or whitespace.
std::string strip_element(std::string_view s, std::string_view name) {
    std::string out;
    out.reserve(s.size());
    const std::string open = "<" + std::string(name);
    const std::string close = "</" + std::string(name) + ">";
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t start = s.find(open, pos);
        while (start != std::string_view::npos) {
            const std::size_t after = start + open.size();
            if (after < s.size() && (s[after] == '>' || is_space(s[after]))) break;
            start = s.find(open, start + 1);
        }
        if (start == std::string_view::npos) {
            out.append(s.substr(pos));
            break;
        }
        out.append(s.substr(pos, start - pos));
        out.push_back(' ');
        const std::size_t end = s.find(close, start + open.size());
        if (end == std::string_view::npos) break;
        pos = end + close.size();
    }
    return out;
}

std::string strip_tags(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '<' && i + 1 < s.size() && tag_start(s[i + 1])) {
            const std::size_t end = s.find('>', i + 1);
            const std::size_t next_open = s.find('<', i + 1);
            if (end != std::string_view::npos && (next_open == std::string_view::npos || end < next_open)) {
                out.push_back(' ');
                i = end + 1;
                continue;
            }
        }
        out.push_back(s[i]);
        ++i;
    }
    return out;
}

std::string clean_chars(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (is_space(c)) {
            pending_space = true;
            continue;
        }
        if (is_control(c)) continue;
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.push_back(lower_ascii(c));
    }
    return out;
}

std::string preprocess_once(std::string_view raw) {
    std::string s(raw);
    std::transform(s.begin(), s.end(), s.begin(), lower_ascii);
    s = strip_blocks(s, "```", "```");
    s = strip_element(s, "pre");
    s = strip_element(s, "code");
    s = strip_tags(s);
    return clean_chars(s);
}

}  // namespace

std::string preprocess_text(std::string_view raw) {
    // Removing a tag can splice its neighbours into a new tag, so iterate to
    // a fixed point. Every non-trivial pass shrinks the string.
    std::string current = preprocess_once(raw);
    for (;;) {
        std::string next = preprocess_once(current);
        if (next == current) return current;
        current = std::move(next);
    }
}

std::string normalize_tag(std::string_view raw) {
    std::size_t b = 0, e = raw.size();
    while (b < e && is_space(raw[b])) ++b;
    while (e > b && is_space(raw[e - 1])) --e;
    std::string out(raw.substr(b, e - b));
    std::transform(out.begin(), out.end(), out.begin(), lower_ascii);
    return out;
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        if (j > i) words.emplace_back(text.substr(i, j - i));
        i = j;
    }
    return words;
}

std::uint32_t word_token_id(std::string_view word) {
    // FNV-1a, high bit set so words never collide with the marker ids.
    std::uint32_t h = 2166136261u;
    for (char c : word) {
        h ^= static_cast<unsigned char>(c);
        h *= 16777619u;
    }
    return h | 0x80000000u;
}

std::vector<std::uint32_t> mock_token_ids(std::string_view preprocessed_text) {
    std::vector<std::uint32_t> ids{kStartToken};
    for (const auto& w : split_words(preprocessed_text)) ids.push_back(word_token_id(w));
    ids.push_back(kEndToken);
    return ids;
}

}  // namespace tagrec
