#pragma once

#include <cstdint>
#include <vector>

#include "memrl/corpus.hpp"

namespace memrl::synthetic {

struct SyntheticSpec {
    int hops = 2;
    std::size_t doc_count = 10;     // per-sample total (evidence + distractors)
    std::size_t sample_count = 32;
    std::uint64_t seed = 4;
};

/// Deterministic multi-hop chain samples: hop bodies are short single
/// facts ("X studied under Y.", ..., "Z worked in CITY."); distractors
/// carry look-alike facts about disjoint entities plus filler prose.
/// Chain entity words never appear in distractors of the same sample.
std::vector<corpus::QASample> make_synthetic_samples(const SyntheticSpec& spec);

}  // namespace memrl::synthetic
