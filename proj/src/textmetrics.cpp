#include "memrl/textmetrics.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <utility>

namespace memrl::text {

namespace {

// Letter ranges beyond ASCII that count as word characters. Coarse block
// coverage; code points outside these ranges separate words.
constexpr std::array<std::pair<std::uint32_t, std::uint32_t>, 14> kLetterRanges{{
    {0x00C0, 0x00D6},  // Latin-1 letters (excluding x)
    {0x00D8, 0x00F6},
    {0x00F8, 0x02AF},  // Latin Extended-A/B, IPA
    {0x0370, 0x03FF},  // Greek
    {0x0400, 0x04FF},  // Cyrillic
    {0x0531, 0x058F},  // Armenian
    {0x05D0, 0x05EA},  // Hebrew
    {0x0620, 0x064A},  // Arabic
    {0x0660, 0x0669},  // Arabic-Indic digits
    {0x0900, 0x097F},  // Devanagari
    {0x3040, 0x30FF},  // Hiragana, Katakana
    {0x4E00, 0x9FFF},  // CJK unified
    {0xAC00, 0xD7A3},  // Hangul
    {0xFF10, 0xFF19},  // fullwidth digits
}};

bool is_word_codepoint(std::uint32_t cp) {
    if (cp < 0x80) {
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    }
    for (const auto& [lo, hi] : kLetterRanges) {
        if (cp >= lo && cp <= hi) return true;
    }
    return false;
}

std::uint32_t fold_codepoint(std::uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 0x20;  // Latin-1
    if (cp >= 0x0100 && cp <= 0x0137) return (cp % 2 == 0) ? cp + 1 : cp;  // Latin Ext-A
    if (cp >= 0x0139 && cp <= 0x0147) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x014A && cp <= 0x0176) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp == 0x0178) return 0x00FF;
    if (cp >= 0x0179 && cp <= 0x017D) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x0391 && cp <= 0x03A1) return cp + 0x20;  // Greek
    if (cp >= 0x03A3 && cp <= 0x03AB) return cp + 0x20;
    if (cp >= 0x0400 && cp <= 0x040F) return cp + 0x50;  // Cyrillic
    if (cp >= 0x0410 && cp <= 0x042F) return cp + 0x20;
    return cp;
}

// Decodes one UTF-8 code point at position i. Invalid sequences decode as
// a single non-word byte so they act as separators.
std::pair<std::uint32_t, std::size_t> decode_utf8(std::string_view s, std::size_t i) {
    const auto byte = [&](std::size_t k) { return static_cast<std::uint8_t>(s[k]); };
    const std::uint8_t b0 = byte(i);
    if (b0 < 0x80) return {b0, 1};
    auto cont = [&](std::size_t k) { return k < s.size() && (byte(k) & 0xC0) == 0x80; };
    if ((b0 & 0xE0) == 0xC0 && cont(i + 1)) {
        return {(std::uint32_t(b0 & 0x1F) << 6) | (byte(i + 1) & 0x3F), 2};
    }
    if ((b0 & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2)) {
        return {(std::uint32_t(b0 & 0x0F) << 12) | (std::uint32_t(byte(i + 1) & 0x3F) << 6) |
                    (byte(i + 2) & 0x3F),
                3};
    }
    if ((b0 & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
        return {(std::uint32_t(b0 & 0x07) << 18) | (std::uint32_t(byte(i + 1) & 0x3F) << 12) |
                    (std::uint32_t(byte(i + 2) & 0x3F) << 6) | (byte(i + 3) & 0x3F),
                4};
    }
    return {0xFFFD, 1};  // invalid byte, acts as separator
}

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

}  // namespace

std::vector<std::string> normalize_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto [cp, len] = decode_utf8(text, i);
        i += len;
        if (is_word_codepoint(cp)) {
            append_utf8(current, fold_codepoint(cp));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

WordSet normalize_words(std::string_view text) {
    WordSet set;
    for (auto& token : normalize_tokens(text)) set.add(std::move(token));
    return set;
}

double recall(const WordSet& a, const WordSet& b) {
    if (a.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& word : a.items()) {
        if (b.contains(word)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(a.size());
}

double recall(std::string_view a, std::string_view b) {
    return recall(normalize_words(a), normalize_words(b));
}

double max_recall_over_answers(std::string_view text,
                               std::span<const std::string> answers,
                               RecallDirection direction) {
    if (answers.empty()) throw std::invalid_argument("max_recall_over_answers: empty answer set");
    const WordSet text_set = normalize_words(text);
    double best = 0.0;
    for (const auto& answer : answers) {
        const WordSet answer_set = normalize_words(answer);
        const double r = direction == RecallDirection::text_in_answer
                             ? recall(text_set, answer_set)
                             : recall(answer_set, text_set);
        best = std::max(best, r);
    }
    return best;
}

namespace {

RetrievalResult retrieve_scored(const WordSet& query,
                                std::span<const std::string> texts,
                                const std::vector<WordSet>* cached) {
    RetrievalResult result;
    if (texts.empty() || query.empty()) return result;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const double score =
            cached ? recall(query, (*cached)[i]) : recall(query, normalize_words(texts[i]));
        if (!result.found || score >= result.score) {  // >= : latest among ties wins
            result.found = true;
            result.memory_index = i;
            result.score = score;
        }
    }
    result.content = texts[result.memory_index];
    return result;
}

}  // namespace

RetrievalResult retrieve(std::span<const std::string> history, std::string_view query) {
    return retrieve_scored(normalize_words(query), history, nullptr);
}

void MemoryIndex::append(std::string memory_text) {
    sets_.push_back(normalize_words(memory_text));
    texts_.push_back(std::move(memory_text));
}

RetrievalResult MemoryIndex::retrieve(std::string_view query) const {
    return retrieve_scored(normalize_words(query), texts_, &sets_);
}

}  // namespace memrl::text
