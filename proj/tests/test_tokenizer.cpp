#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rsrag/tokenizer.hpp"

using namespace rsrag;

TEST_CASE("tokenize lowercases and strips punctuation") {
    CHECK(tokenize("The cat, sat!") == TokenSequence{"the", "cat", "sat"});
    CHECK(tokenize("a-b c_d") == TokenSequence{"a", "b", "c_d"});
    CHECK(tokenize("Name: Golden Gate") == TokenSequence{"name", "golden", "gate"});
    CHECK(tokenize("3.41 square km") == TokenSequence{"3", "41", "square", "km"});
    CHECK(tokenize("") == TokenSequence{});
    CHECK(tokenize("  \t\n ") == TokenSequence{});
}

TEST_CASE("tokenize keeps multi-byte sequences intact") {
    // Bytes >= 0x80 are token characters, so UTF-8 words survive unsplit.
    CHECK(tokenize("caf\xc3\xa9 bar") == TokenSequence{"caf\xc3\xa9", "bar"});
}

TEST_CASE("token_count matches tokenize") {
    for (const char* s : {"", "one", "one two three", "a,b,,c", "x  y\tz\n", "7 plus 8."}) {
        CAPTURE(s);
        CHECK(token_count(s) == tokenize(s).size());
    }
}

TEST_CASE("token_spans cover exactly the token bytes") {
    std::string text = "Ab, cd_e  9x";
    auto spans = token_spans(text);
    auto tokens = tokenize(text);
    REQUIRE(spans.size() == tokens.size());
    for (std::size_t i = 0; i < spans.size(); ++i) {
        std::string piece = text.substr(spans[i].first, spans[i].second - spans[i].first);
        CHECK(tokenize(piece) == TokenSequence{tokens[i]});
    }
    CHECK(spans.front().first == 0);
    CHECK(spans.back().second == text.size());
}

TEST_CASE("normalize_label is case- and punctuation-insensitive") {
    CHECK(normalize_label("Amusement Park") == "amusement park");
    CHECK(normalize_label("  AMUSEMENT   PARK!! ") == "amusement park");
    CHECK(normalize_label("amusement-park") == "amusement park");
    CHECK(normalize_label("") == "");
    CHECK(normalize_label("...") == "");
}

TEST_CASE("split_sentences preserves bytes exactly") {
    const std::string cases[] = {
        "One. Two! Three?",
        "No terminator at all",
        "Trailing spaces.   ",
        "Ellipsis... then more. End",
        "Line one\nLine two\n\nLine four.",
        "Mixed.\n  Indented next. Done?!",
        "",
    };
    for (const std::string& text : cases) {
        CAPTURE(text);
        std::string rebuilt;
        for (auto piece : split_sentences(text)) rebuilt += std::string(piece);
        CHECK(rebuilt == text);
    }
}

TEST_CASE("split_sentences boundaries") {
    auto pieces = split_sentences("One. Two! Three");
    REQUIRE(pieces.size() == 3);
    CHECK(pieces[0] == "One. ");
    CHECK(pieces[1] == "Two! ");
    CHECK(pieces[2] == "Three");

    // Terminator runs and following whitespace stay with their sentence.
    pieces = split_sentences("Wait... what?\nNext");
    REQUIRE(pieces.size() == 3);
    CHECK(pieces[0] == "Wait... ");
    CHECK(pieces[1] == "what?\n");
    CHECK(pieces[2] == "Next");

    // A newline alone is a boundary.
    pieces = split_sentences("alpha\nbeta");
    REQUIRE(pieces.size() == 2);
    CHECK(pieces[0] == "alpha\n");
    CHECK(pieces[1] == "beta");
}
