#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace memrl::corpus {

struct Document {
    std::string title;
    std::string body;
};

/// One QA record: question, acceptable answers, evidence documents in
/// reasoning-hop order, plus distractor documents for padding.
struct QASample {
    std::string id;
    std::string question;
    std::vector<std::string> answers;
    std::vector<Document> evidence_docs;
    std::vector<Document> distractor_docs;
};

struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LayoutError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Loads JSONL records, one QASample per line. Validation failures
/// (missing field, empty answers, duplicate id, bad JSON) are collected
/// and thrown as one DatasetError listing line numbers.
std::vector<QASample> load_dataset(const std::string& path);

enum class LayoutMode { shuffled, distant };

std::string_view to_string(LayoutMode mode);
LayoutMode layout_mode_from_string(std::string_view name);

struct ContextLayout {
    std::vector<Document> documents;
    std::vector<std::size_t> evidence_positions;  // index = hop, value = document position
};

/// Places evidence and distractors into target_doc_count positions.
/// shuffled: uniform interleave under the seed. distant: evidence in
/// reverse hop order with successive gaps > target_doc_count/2; throws
/// LayoutError when no such placement exists. Bit-identical for a fixed
/// (sample, target, mode, seed) on any platform.
ContextLayout assemble_context(const QASample& sample,
                               std::size_t target_doc_count,
                               LayoutMode mode,
                               std::uint64_t seed);

struct ChunkSequence {
    std::vector<std::string> chunks;
    std::size_t chunk_limit = 0;
};

inline constexpr std::size_t kDefaultChunkLimit = 5000;

/// Greedy packing of whole documents (rendered "title\nbody", blank line
/// between documents) into chunks of at most chunk_limit whitespace words.
/// A single document longer than the limit is split at word boundaries.
ChunkSequence chunk_layout(const ContextLayout& layout, std::size_t chunk_limit);

/// Whitespace-delimited tokens (no normalization); the word counter used
/// by chunking and the memory cap.
std::vector<std::string> split_words(std::string_view text);
std::size_t count_words(std::string_view text);

/// Keeps the last `limit` whitespace words (oldest content truncated
/// first), rejoined with single spaces. limit == 0 means unlimited.
std::string truncate_to_last_words(const std::string& text, std::size_t limit);

// Portable seeded draws: mt19937_64 is bit-exact per the standard; the
// modulo reduction and Fisher-Yates below keep layouts platform-stable.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n);
void shuffle_portable(std::vector<std::size_t>& values, std::mt19937_64& rng);

/// FNV-1a over the concatenated byte views; used for sub-seed derivation
/// and config hashing.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 1469598103934665603ull);
std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag, std::uint64_t extra = 0);

}  // namespace memrl::corpus
