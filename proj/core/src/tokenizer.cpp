#include "rsrag/tokenizer.hpp"

#include <cctype>

namespace rsrag {

namespace {

inline bool is_token_char(unsigned char c) {
    return std::isalnum(c) != 0 || c == '_' || c >= 0x80;  // keep UTF-8 continuation bytes
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
    TokenSequence tokens;
    std::string current;
    for (unsigned char c : text) {
        if (is_token_char(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::size_t token_count(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for (unsigned char c : text) {
        if (is_token_char(c)) {
            if (!in_token) ++count;
            in_token = true;
        } else {
            in_token = false;
        }
    }
    return count;
}

std::vector<std::pair<std::size_t, std::size_t>> token_spans(std::string_view text) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    std::size_t begin = 0;
    bool in_token = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (is_token_char(static_cast<unsigned char>(text[i]))) {
            if (!in_token) begin = i;
            in_token = true;
        } else if (in_token) {
            spans.emplace_back(begin, i);
            in_token = false;
        }
    }
    if (in_token) spans.emplace_back(begin, text.size());
    return spans;
}

std::string normalize_label(std::string_view text) {
    std::string out;
    for (const auto& tok : tokenize(text)) {
        if (!out.empty()) out.push_back(' ');
        out += tok;
    }
    return out;
}

std::vector<std::string_view> split_sentences(std::string_view text) {
    std::vector<std::string_view> pieces;
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == '.' || c == '!' || c == '?' || c == '\n') {
            // swallow the terminator run plus following whitespace
            ++i;
            while (i < text.size() && (text[i] == '.' || text[i] == '!' || text[i] == '?')) ++i;
            while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' || text[i] == '\r'))
                ++i;
            pieces.push_back(text.substr(start, i - start));
            start = i;
        } else {
            ++i;
        }
    }
    if (start < text.size()) pieces.push_back(text.substr(start));
    return pieces;
}

}  // namespace rsrag
