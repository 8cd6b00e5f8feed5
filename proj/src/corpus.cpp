#include "memrl/corpus.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace memrl::corpus {

using nlohmann::json;

namespace {

Document parse_doc_pair(const json& pair) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string()) {
        throw std::invalid_argument("document must be a [title, body] pair of strings");
    }
    return Document{pair[0].get<std::string>(), pair[1].get<std::string>()};
}

QASample parse_sample_line(const std::string& line) {
    const json record = json::parse(line);
    if (!record.is_object()) throw std::invalid_argument("record is not an object");
    QASample sample;
    for (const char* field : {"id", "question", "answers", "evidence_docs", "distractor_docs"}) {
        if (!record.contains(field)) {
            throw std::invalid_argument(std::string("missing required field '") + field + "'");
        }
    }
    sample.id = record.at("id").get<std::string>();
    sample.question = record.at("question").get<std::string>();
    for (const auto& answer : record.at("answers")) {
        sample.answers.push_back(answer.get<std::string>());
    }
    if (sample.answers.empty()) throw std::invalid_argument("empty answer set");
    for (const auto& pair : record.at("evidence_docs")) {
        sample.evidence_docs.push_back(parse_doc_pair(pair));
    }
    if (sample.evidence_docs.empty()) throw std::invalid_argument("empty evidence_docs");
    for (const auto& pair : record.at("distractor_docs")) {
        sample.distractor_docs.push_back(parse_doc_pair(pair));
    }
    return sample;
}

}  // namespace

std::vector<QASample> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open dataset file: " + path);
    std::vector<QASample> samples;
    std::vector<std::string> errors;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        try {
            QASample sample = parse_sample_line(line);
            if (!seen_ids.insert(sample.id).second) {
                throw std::invalid_argument("duplicate id '" + sample.id + "'");
            }
            samples.push_back(std::move(sample));
        } catch (const std::exception& e) {
            errors.push_back("line " + std::to_string(line_number) + ": " + e.what());
        }
    }
    if (!errors.empty()) {
        std::ostringstream msg;
        msg << "dataset validation failed (" << errors.size() << " record(s)):";
        for (const auto& err : errors) msg << "\n  " << err;
        throw DatasetError(msg.str());
    }
    return samples;
}

std::string_view to_string(LayoutMode mode) {
    return mode == LayoutMode::shuffled ? "shuffled" : "distant";
}

LayoutMode layout_mode_from_string(std::string_view name) {
    if (name == "shuffled") return LayoutMode::shuffled;
    if (name == "distant") return LayoutMode::distant;
    throw std::invalid_argument("unknown layout mode: " + std::string(name));
}

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n) {
    // Modulo reduction: bias is negligible at these ranges and the result
    // is identical on every platform.
    return rng() % n;
}

void shuffle_portable(std::vector<std::size_t>& values, std::mt19937_64& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(bounded_draw(rng, i));
        std::swap(values[i - 1], values[j]);
    }
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (const char c : bytes) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag, std::uint64_t extra) {
    char buf[16];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((seed >> (8 * i)) & 0xFF);
    for (int i = 0; i < 8; ++i) buf[8 + i] = static_cast<char>((extra >> (8 * i)) & 0xFF);
    return fnv1a(tag, fnv1a(std::string_view(buf, sizeof buf)));
}

namespace {

// Distractors cycled with a title suffix when the sample does not carry
// enough of them to reach the target count.
std::vector<Document> pick_distractors(const QASample& sample, std::size_t needed) {
    std::vector<Document> out;
    out.reserve(needed);
    if (needed == 0) return out;
    if (sample.distractor_docs.empty()) {
        throw LayoutError("sample '" + sample.id + "' has no distractor documents to pad with");
    }
    for (std::size_t i = 0; i < needed; ++i) {
        Document doc = sample.distractor_docs[i % sample.distractor_docs.size()];
        const std::size_t round = i / sample.distractor_docs.size();
        if (round > 0) doc.title += " #" + std::to_string(round + 1);
        out.push_back(std::move(doc));
    }
    return out;
}

}  // namespace

ContextLayout assemble_context(const QASample& sample,
                               std::size_t target_doc_count,
                               LayoutMode mode,
                               std::uint64_t seed) {
    const std::size_t evidence_count = sample.evidence_docs.size();
    if (evidence_count == 0) throw LayoutError("sample '" + sample.id + "' has no evidence");
    if (target_doc_count < evidence_count) {
        throw LayoutError("target_doc_count " + std::to_string(target_doc_count) +
                          " below evidence count " + std::to_string(evidence_count));
    }
    std::mt19937_64 rng(seed);
    const std::size_t n = target_doc_count;
    std::vector<std::size_t> evidence_positions(evidence_count);

    if (mode == LayoutMode::shuffled) {
        std::vector<std::size_t> positions(n);
        for (std::size_t i = 0; i < n; ++i) positions[i] = i;
        shuffle_portable(positions, rng);
        for (std::size_t hop = 0; hop < evidence_count; ++hop) {
            evidence_positions[hop] = positions[hop];
        }
    } else {
        if (evidence_count < 2) {
            throw LayoutError("distant mode requires at least 2 evidence documents");
        }
        // Gap strictly above n/2 means at least floor(n/2)+1 positions apart.
        const std::size_t min_gap = n / 2 + 1;
        if ((evidence_count - 1) * min_gap > n - 1) {
            throw LayoutError(
                "distant placement infeasible: " + std::to_string(evidence_count - 1) +
                " gap(s) of more than " + std::to_string(n) + "/2 positions cannot fit in " +
                std::to_string(n) + " documents");
        }
        // evidence_count == 2 is the only feasible case; draw uniformly over
        // all (first, last) pairs with last - first >= min_gap.
        std::uint64_t total_pairs = 0;
        for (std::size_t gap = min_gap; gap <= n - 1; ++gap) total_pairs += n - gap;
        std::uint64_t draw = bounded_draw(rng, total_pairs);
        std::size_t gap = min_gap;
        while (draw >= n - gap) {
            draw -= n - gap;
            ++gap;
        }
        const std::size_t first = static_cast<std::size_t>(draw);
        // Reverse hop order: the last hop appears first in the context.
        evidence_positions[evidence_count - 1] = first;
        evidence_positions[0] = first + gap;
    }

    std::vector<Document> distractors = pick_distractors(sample, n - evidence_count);
    std::vector<std::size_t> distractor_order(distractors.size());
    for (std::size_t i = 0; i < distractor_order.size(); ++i) distractor_order[i] = i;
    shuffle_portable(distractor_order, rng);

    ContextLayout layout;
    layout.documents.resize(n);
    layout.evidence_positions = evidence_positions;
    std::vector<bool> taken(n, false);
    for (std::size_t hop = 0; hop < evidence_count; ++hop) {
        layout.documents[evidence_positions[hop]] = sample.evidence_docs[hop];
        taken[evidence_positions[hop]] = true;
    }
    std::size_t next = 0;
    for (std::size_t pos = 0; pos < n; ++pos) {
        if (taken[pos]) continue;
        layout.documents[pos] = std::move(distractors[distractor_order[next++]]);
    }
    return layout;
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) words.emplace_back(text.substr(start, i - start));
    }
    return words;
}

std::size_t count_words(std::string_view text) {
    std::size_t count = 0;
    bool in_word = false;
    for (const char c : text) {
        const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++count;
        in_word = !space;
    }
    return count;
}

std::string truncate_to_last_words(const std::string& text, std::size_t limit) {
    if (limit == 0) return text;
    const std::vector<std::string> words = split_words(text);
    if (words.size() <= limit) return text;
    std::string out;
    for (std::size_t i = words.size() - limit; i < words.size(); ++i) {
        if (!out.empty()) out.push_back(' ');
        out += words[i];
    }
    return out;
}

ChunkSequence chunk_layout(const ContextLayout& layout, std::size_t chunk_limit) {
    if (chunk_limit == 0) throw std::invalid_argument("chunk_limit must be positive");
    ChunkSequence seq;
    seq.chunk_limit = chunk_limit;
    std::string current;
    std::size_t current_words = 0;
    auto flush = [&] {
        if (current_words > 0) {
            seq.chunks.push_back(std::move(current));
            current.clear();
            current_words = 0;
        }
    };
    auto append_text = [&](std::string_view text, std::size_t words) {
        if (!current.empty()) current += "\n\n";
        current += text;
        current_words += words;
    };
    for (const Document& doc : layout.documents) {
        const std::string rendered = doc.title + "\n" + doc.body;
        const std::size_t words = count_words(rendered);
        if (words <= chunk_limit) {
            if (current_words + words > chunk_limit) flush();
            append_text(rendered, words);
            continue;
        }
        // Oversized document: split at word boundaries.
        const std::vector<std::string> tokens = split_words(rendered);
        std::size_t i = 0;
        while (i < tokens.size()) {
            std::size_t space = chunk_limit - current_words;
            if (space == 0) {
                flush();
                space = chunk_limit;
            }
            const std::size_t take = std::min<std::size_t>(space, tokens.size() - i);
            std::string piece;
            for (std::size_t k = 0; k < take; ++k) {
                if (k > 0) piece.push_back(' ');
                piece += tokens[i + k];
            }
            append_text(piece, take);
            i += take;
            if (current_words == chunk_limit) flush();
        }
    }
    flush();
    return seq;
}

}  // namespace memrl::corpus
