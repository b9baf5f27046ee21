#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace rsrag {

/// Lowercased whitespace/punctuation token sequence. One tokenizer is shared
/// by the chunker and every text metric so that token budgets and scores
/// cannot drift apart.
using TokenSequence = std::vector<std::string>;

/// Lowercase, strip punctuation to token boundaries, split on whitespace.
TokenSequence tokenize(std::string_view text);

std::size_t token_count(std::string_view text);

/// Byte offsets [begin, end) of every token, in order. Lets callers split
/// text at token boundaries without re-deriving the token rules.
std::vector<std::pair<std::size_t, std::size_t>> token_spans(std::string_view text);

/// Normalized comparison key: tokenize then re-join with single spaces.
std::string normalize_label(std::string_view text);

/// Split `text` into sentence pieces. Pieces keep their original bytes
/// (including trailing whitespace), so concatenating them reproduces the
/// input exactly. Boundaries are '.', '!', '?' or newline runs.
std::vector<std::string_view> split_sentences(std::string_view text);

}  // namespace rsrag
