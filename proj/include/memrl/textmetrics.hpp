#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace memrl::text {

// Word normalization rule: UTF-8 input, case-folded, any character that is
// not a letter or digit acts as a separator, empty fragments dropped.
// Folding covers ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic;
// letters of other scripts pass through unfolded.

struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
        return std::hash<std::string_view>{}(s);
    }
};
struct StringEq {
    using is_transparent = void;
    bool operator()(std::string_view a, std::string_view b) const noexcept { return a == b; }
};

/// Deduplicated, order-free set of normalized words.
class WordSet {
public:
    WordSet() = default;

    void add(std::string word) { items_.insert(std::move(word)); }
    bool contains(std::string_view word) const { return items_.find(word) != items_.end(); }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    const std::unordered_set<std::string, StringHash, StringEq>& items() const { return items_; }

private:
    std::unordered_set<std::string, StringHash, StringEq> items_;
};

/// Normalized words in original order, duplicates kept.
std::vector<std::string> normalize_tokens(std::string_view text);

/// Normalized word set (deduplicated).
WordSet normalize_words(std::string_view text);

/// Fraction of a's normalized words that also appear in b. Empty a -> 0.
double recall(const WordSet& a, const WordSet& b);
double recall(std::string_view a, std::string_view b);

enum class RecallDirection {
    text_in_answer,  // recall(text, answer)
    answer_in_text,  // recall(answer, text)
};

/// Max over the answer set of recall in the requested direction.
/// Throws std::invalid_argument on an empty answer set.
double max_recall_over_answers(std::string_view text,
                               std::span<const std::string> answers,
                               RecallDirection direction);

struct RetrievalResult {
    bool found = false;
    std::size_t memory_index = 0;  // index into the supplied history, valid iff found
    std::string content;
    double score = 0.0;
};

/// Argmax of recall(query, element) over the history. Empty history or a
/// query that normalizes to nothing -> found = false. Ties go to the
/// highest index (most recent memory).
RetrievalResult retrieve(std::span<const std::string> history, std::string_view query);

/// Append-only memory history with cached word sets. retrieve() returns
/// exactly what text::retrieve would return over texts() — the cache only
/// avoids re-normalizing stored memories on every scan.
class MemoryIndex {
public:
    void append(std::string memory_text);
    RetrievalResult retrieve(std::string_view query) const;
    std::size_t size() const { return texts_.size(); }
    const std::vector<std::string>& texts() const { return texts_; }

private:
    std::vector<std::string> texts_;
    std::vector<WordSet> sets_;
};

}  // namespace memrl::text
