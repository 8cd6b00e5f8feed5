#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "memrl/corpus.hpp"
#include "memrl/policy.hpp"
#include "memrl/rewards.hpp"
#include "memrl/runtime.hpp"

namespace memrl::harness {

struct PolicySettings {
    std::string kind = "mock";  // mock | distant-oracle | http
    std::uint64_t seed = 1;
    // http settings
    std::string base_url;
    std::string model;
    std::string api_key_env = "MEMRL_API_KEY";
    std::string system_prompt;  // empty = no system message
    double temperature = 1.0;
    int max_tokens = 2048;
    int max_attempts = 3;
    int timeout_seconds = 120;
};

struct RunConfig {
    std::string dataset;
    PolicySettings policy;
    std::vector<std::size_t> target_doc_counts{50, 100, 200, 400, 800, 1600, 3200, 6400};
    std::string mode = "shuffled";  // shuffled | distant
    std::size_t chunk_limit = corpus::kDefaultChunkLimit;
    int group_size = 16;            // training-side group size
    int eval_group_size = 1;        // rollouts per sample during evaluation
    double alpha = rewards::kDefaultAlpha;
    double epsilon = 0.2;
    double beta = 0.001;
    std::uint64_t seed = 4;
    std::size_t subset_size = 128;
    bool callback = true;
    runtime::TagConfig tags;
    std::size_t memory_cap_words = 0;
    double format_penalty = 1.0;
    bool flip_memory_recall = false;
    int parallelism = 1;
};

/// Reads a JSON config file; every key mirrors a RunConfig field. Unknown
/// keys are rejected.
RunConfig load_config(const std::string& path);

/// Canonical serialization (sorted keys) and its FNV-1a hash: identical
/// configs hash identically on every platform.
std::string config_to_json(const RunConfig& config);
std::string config_hash(const RunConfig& config);

runtime::RuntimeConfig runtime_config(const RunConfig& config);
rewards::ScoreConfig score_config(const RunConfig& config);

/// Policy factory; distant-oracle builds per-sample rules.
std::unique_ptr<policy::Policy> make_policy(const PolicySettings& settings,
                                            const corpus::QASample& sample);

struct BucketStats {
    std::size_t doc_count = 0;
    std::size_t sample_count = 0;   // completed samples
    std::size_t failed_count = 0;
    double accuracy = 0.0;          // mean outcome reward
    double mean_state_reward = 0.0; // mean per-step R_state
    double callback_rate = 0.0;     // retrievals per non-terminal step
    double mean_retrieval_score = 0.0;
    std::vector<std::string> failures;
};

struct EvalReport {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<BucketStats> buckets;
};

/// Context-length sweep: per doc count, assemble + chunk + roll out one
/// trajectory per sample (eval_group_size > 1 scores the first rollout's
/// answer by majority vote) and aggregate. Deterministic for scripted and
/// mock policies under a fixed config.
EvalReport evaluate(const RunConfig& config);

/// Subsampled dataset view used by evaluate: seeded shuffle, first
/// subset_size samples.
std::vector<corpus::QASample> subsample(std::vector<corpus::QASample> samples,
                                        std::size_t subset_size,
                                        std::uint64_t seed);

void write_report_jsonl(std::ostream& out, const EvalReport& report);
void write_report_table(std::ostream& out, const EvalReport& report);

/// Reward/advantage export rows for one sample's group, (g, t) ordered.
void write_reward_export(std::ostream& out,
                         const std::string& sample_id,
                         std::span<const rewards::RewardBreakdown> group,
                         const rewards::AdvantageSet& advantages);

/// Replays a trajectory dump against the dataset and writes the reward/
/// advantage export; numbers equal the live run exactly. Unknown sample
/// ids raise DatasetError listing the offenders.
void score_offline(const std::string& dump_path,
                   const std::string& dataset_path,
                   double alpha,
                   const RunConfig& config,
                   std::ostream& out);

/// Audit export of assembled layouts.
void write_layout_export(std::ostream& out,
                         const std::string& sample_id,
                         const std::string& mode,
                         std::uint64_t seed,
                         const corpus::ContextLayout& layout);

}  // namespace memrl::harness
