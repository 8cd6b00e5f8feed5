#include "memrl/harness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace memrl::harness {

using nlohmann::json;

namespace {

void assign_if(const json& obj, const char* key, auto& target) {
    if (obj.contains(key)) obj.at(key).get_to(target);
}

PolicySettings policy_from_json(const json& obj) {
    PolicySettings settings;
    static const std::vector<std::string> known{
        "kind",        "seed",        "base_url",      "model",          "api_key_env",
        "temperature", "max_tokens",  "max_attempts",  "timeout_seconds", "system_prompt"};
    for (const auto& [key, value] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw std::invalid_argument("unknown policy config key: " + key);
        }
    }
    assign_if(obj, "kind", settings.kind);
    assign_if(obj, "seed", settings.seed);
    assign_if(obj, "base_url", settings.base_url);
    assign_if(obj, "model", settings.model);
    assign_if(obj, "api_key_env", settings.api_key_env);
    assign_if(obj, "system_prompt", settings.system_prompt);
    assign_if(obj, "temperature", settings.temperature);
    assign_if(obj, "max_tokens", settings.max_tokens);
    assign_if(obj, "max_attempts", settings.max_attempts);
    assign_if(obj, "timeout_seconds", settings.timeout_seconds);
    return settings;
}

}  // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json obj = json::parse(in);
    RunConfig config;
    static const std::vector<std::string> known{
        "dataset",     "policy",          "target_doc_counts", "mode",
        "chunk_limit", "group_size",      "eval_group_size",   "alpha",
        "epsilon",     "beta",            "seed",              "subset_size",
        "callback",    "tags",            "memory_cap_words",  "format_penalty",
        "flip_memory_recall",             "parallelism"};
    for (const auto& [key, value] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw std::invalid_argument("unknown config key: " + key);
        }
    }
    assign_if(obj, "dataset", config.dataset);
    if (obj.contains("policy")) config.policy = policy_from_json(obj.at("policy"));
    assign_if(obj, "target_doc_counts", config.target_doc_counts);
    assign_if(obj, "mode", config.mode);
    assign_if(obj, "chunk_limit", config.chunk_limit);
    assign_if(obj, "group_size", config.group_size);
    assign_if(obj, "eval_group_size", config.eval_group_size);
    assign_if(obj, "alpha", config.alpha);
    assign_if(obj, "epsilon", config.epsilon);
    assign_if(obj, "beta", config.beta);
    assign_if(obj, "seed", config.seed);
    assign_if(obj, "subset_size", config.subset_size);
    assign_if(obj, "callback", config.callback);
    if (obj.contains("tags")) {
        obj.at("tags").at("update").get_to(config.tags.update);
        obj.at("tags").at("recall").get_to(config.tags.recall);
    }
    assign_if(obj, "memory_cap_words", config.memory_cap_words);
    assign_if(obj, "format_penalty", config.format_penalty);
    assign_if(obj, "flip_memory_recall", config.flip_memory_recall);
    assign_if(obj, "parallelism", config.parallelism);
    if (config.alpha < 0.0 || config.alpha > 1.0) {
        throw std::invalid_argument("alpha must lie in [0, 1]");
    }
    return config;
}

std::string config_to_json(const RunConfig& config) {
    json obj;  // nlohmann::json sorts keys: canonical by construction
    obj["dataset"] = config.dataset;
    obj["policy"] = {{"kind", config.policy.kind},
                     {"seed", config.policy.seed},
                     {"base_url", config.policy.base_url},
                     {"model", config.policy.model},
                     {"api_key_env", config.policy.api_key_env},
                     {"system_prompt", config.policy.system_prompt},
                     {"temperature", config.policy.temperature},
                     {"max_tokens", config.policy.max_tokens},
                     {"max_attempts", config.policy.max_attempts},
                     {"timeout_seconds", config.policy.timeout_seconds}};
    obj["target_doc_counts"] = config.target_doc_counts;
    obj["mode"] = config.mode;
    obj["chunk_limit"] = config.chunk_limit;
    obj["group_size"] = config.group_size;
    obj["eval_group_size"] = config.eval_group_size;
    obj["alpha"] = config.alpha;
    obj["epsilon"] = config.epsilon;
    obj["beta"] = config.beta;
    obj["seed"] = config.seed;
    obj["subset_size"] = config.subset_size;
    obj["callback"] = config.callback;
    obj["tags"] = {{"update", config.tags.update}, {"recall", config.tags.recall}};
    obj["memory_cap_words"] = config.memory_cap_words;
    obj["format_penalty"] = config.format_penalty;
    obj["flip_memory_recall"] = config.flip_memory_recall;
    obj["parallelism"] = config.parallelism;
    return obj.dump();
}

std::string config_hash(const RunConfig& config) {
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << corpus::fnv1a(config_to_json(config));
    return hex.str();
}

runtime::RuntimeConfig runtime_config(const RunConfig& config) {
    runtime::RuntimeConfig rc;
    rc.callback_enabled = config.callback;
    rc.tags = config.tags;
    rc.memory_cap_words = config.memory_cap_words;
    return rc;
}

rewards::ScoreConfig score_config(const RunConfig& config) {
    rewards::ScoreConfig sc;
    sc.format_penalty = config.format_penalty;
    sc.flip_memory_recall = config.flip_memory_recall;
    return sc;
}

std::unique_ptr<policy::Policy> make_policy(const PolicySettings& settings,
                                            const corpus::QASample& sample) {
    if (settings.kind == "mock") {
        return std::make_unique<policy::MockStochasticPolicy>(settings.seed);
    }
    if (settings.kind == "distant-oracle") {
        return std::make_unique<policy::ScriptedPolicy>(policy::build_distant_oracle(sample));
    }
    if (settings.kind == "http") {
        policy::HttpPolicyConfig http;
        http.base_url = settings.base_url;
        http.model = settings.model;
        http.api_key_env = settings.api_key_env;
        http.system_prompt = settings.system_prompt;
        http.params.temperature = settings.temperature;
        http.params.max_tokens = settings.max_tokens;
        http.max_attempts = settings.max_attempts;
        http.timeout_seconds = settings.timeout_seconds;
        return std::make_unique<policy::HttpPolicy>(http);
    }
    throw std::invalid_argument("unknown policy kind: " + settings.kind);
}

std::vector<corpus::QASample> subsample(std::vector<corpus::QASample> samples,
                                        std::size_t subset_size,
                                        std::uint64_t seed) {
    if (samples.size() <= subset_size) return samples;
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(corpus::mix_seed(seed, "subsample"));
    corpus::shuffle_portable(order, rng);
    std::vector<corpus::QASample> subset;
    subset.reserve(subset_size);
    for (std::size_t i = 0; i < subset_size; ++i) subset.push_back(std::move(samples[order[i]]));
    return subset;
}

namespace {

struct SampleOutcome {
    bool ok = false;
    std::string error;
    double outcome = 0.0;
    double state_sum = 0.0;
    std::size_t step_count = 0;
    std::size_t retrievals = 0;
    std::size_t intermediate_steps = 0;
    double retrieval_score_sum = 0.0;
};

SampleOutcome evaluate_sample(const RunConfig& config,
                              const corpus::QASample& sample,
                              std::size_t doc_count) {
    SampleOutcome result;
    try {
        const auto layout = corpus::assemble_context(
            sample, doc_count, corpus::layout_mode_from_string(config.mode),
            corpus::mix_seed(config.seed, sample.id, doc_count));
        const auto chunks = corpus::chunk_layout(layout, config.chunk_limit);
        const auto policy = make_policy(config.policy, sample);
        const auto rc = runtime_config(config);
        const auto traj = runtime::run_trajectory(sample, chunks, *policy, rc, 0);
        const auto breakdown = rewards::score_trajectory(traj, sample.answers, score_config(config));
        result.outcome = breakdown.outcome;
        if (config.eval_group_size > 1) {
            // Majority answer over additional rollouts; first-seen breaks ties.
            std::vector<std::pair<std::optional<std::string>, int>> votes;
            auto vote = [&](const std::optional<std::string>& answer) {
                const auto norm =
                    answer ? std::optional<std::string>(rewards::normalize_answer(*answer))
                           : std::nullopt;
                for (auto& [existing, count] : votes) {
                    if (existing == norm) {
                        ++count;
                        return;
                    }
                }
                votes.emplace_back(norm, 1);
            };
            vote(traj.predicted_answer);
            for (int g = 1; g < config.eval_group_size; ++g) {
                const auto extra = runtime::run_trajectory(sample, chunks, *policy, rc, g);
                vote(extra.predicted_answer);
            }
            const auto best = std::max_element(
                votes.begin(), votes.end(),
                [](const auto& a, const auto& b) { return a.second < b.second; });
            result.outcome = rewards::outcome_reward(best->first, sample.answers);
        }
        for (const auto& step : breakdown.steps) result.state_sum += step.state;
        result.step_count = breakdown.steps.size();
        for (const auto& rec : traj.steps) {
            if (rec.is_terminal) continue;
            ++result.intermediate_steps;
            if (rec.retrieved.found) {
                ++result.retrievals;
                result.retrieval_score_sum += rec.retrieved.score;
            }
        }
        result.ok = true;
    } catch (const std::exception& e) {
        result.error = e.what();
    }
    return result;
}

}  // namespace

EvalReport evaluate(const RunConfig& config) {
    EvalReport report;
    report.config_hash = config_hash(config);
    report.seed = config.seed;
    std::vector<corpus::QASample> samples;
    if (!config.target_doc_counts.empty()) {
        samples = subsample(corpus::load_dataset(config.dataset), config.subset_size, config.seed);
    }
    for (const std::size_t doc_count : config.target_doc_counts) {
        BucketStats bucket;
        bucket.doc_count = doc_count;
        std::vector<SampleOutcome> outcomes(samples.size());
        if (config.parallelism > 1) {
            std::vector<std::future<SampleOutcome>> futures(samples.size());
            std::size_t next = 0;
            while (next < samples.size()) {
                const std::size_t end =
                    std::min(samples.size(), next + static_cast<std::size_t>(config.parallelism));
                for (std::size_t i = next; i < end; ++i) {
                    futures[i] = std::async(std::launch::async, [&, i] {
                        return evaluate_sample(config, samples[i], doc_count);
                    });
                }
                for (std::size_t i = next; i < end; ++i) outcomes[i] = futures[i].get();
                next = end;
            }
        } else {
            for (std::size_t i = 0; i < samples.size(); ++i) {
                outcomes[i] = evaluate_sample(config, samples[i], doc_count);
            }
        }
        double accuracy_sum = 0.0;
        double state_sum = 0.0;
        std::size_t state_steps = 0;
        std::size_t retrievals = 0;
        std::size_t intermediate_steps = 0;
        double retrieval_score_sum = 0.0;
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            const SampleOutcome& o = outcomes[i];
            if (!o.ok) {
                ++bucket.failed_count;
                bucket.failures.push_back(samples[i].id + ": " + o.error);
                continue;
            }
            ++bucket.sample_count;
            accuracy_sum += o.outcome;
            state_sum += o.state_sum;
            state_steps += o.step_count;
            retrievals += o.retrievals;
            intermediate_steps += o.intermediate_steps;
            retrieval_score_sum += o.retrieval_score_sum;
        }
        if (bucket.sample_count > 0) {
            bucket.accuracy = accuracy_sum / static_cast<double>(bucket.sample_count);
        }
        if (state_steps > 0) {
            bucket.mean_state_reward = state_sum / static_cast<double>(state_steps);
        }
        if (intermediate_steps > 0) {
            bucket.callback_rate =
                static_cast<double>(retrievals) / static_cast<double>(intermediate_steps);
        }
        if (retrievals > 0) {
            bucket.mean_retrieval_score = retrieval_score_sum / static_cast<double>(retrievals);
        }
        report.buckets.push_back(std::move(bucket));
    }
    return report;
}

void write_report_jsonl(std::ostream& out, const EvalReport& report) {
    for (const BucketStats& bucket : report.buckets) {
        nlohmann::ordered_json row;
        row["doc_count"] = bucket.doc_count;
        row["sample_count"] = bucket.sample_count;
        row["failed_count"] = bucket.failed_count;
        row["accuracy"] = bucket.accuracy;
        row["mean_state_reward"] = bucket.mean_state_reward;
        row["callback_rate"] = bucket.callback_rate;
        row["mean_retrieval_score"] = bucket.mean_retrieval_score;
        row["config_hash"] = report.config_hash;
        row["seed"] = report.seed;
        out << row.dump() << "\n";
    }
}

void write_report_table(std::ostream& out, const EvalReport& report) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32] = "";
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    out << "config " << report.config_hash << " seed " << report.seed << " generated "
        << stamp << "\n";
    auto row = [&](const char* label, auto getter) {
        out << std::left << std::setw(16) << label;
        for (const BucketStats& bucket : report.buckets) {
            out << std::right << std::setw(10) << getter(bucket);
        }
        out << "\n";
    };
    row("docs", [](const BucketStats& b) { return std::to_string(b.doc_count); });
    auto fixed3 = [](double v) {
        std::ostringstream s;
        s << std::fixed << std::setprecision(3) << v;
        return s.str();
    };
    row("accuracy", [&](const BucketStats& b) { return fixed3(b.accuracy); });
    row("state_reward", [&](const BucketStats& b) { return fixed3(b.mean_state_reward); });
    row("callback_rate", [&](const BucketStats& b) { return fixed3(b.callback_rate); });
    row("retr_score", [&](const BucketStats& b) { return fixed3(b.mean_retrieval_score); });
    row("samples", [](const BucketStats& b) { return std::to_string(b.sample_count); });
    row("failures", [](const BucketStats& b) { return std::to_string(b.failed_count); });
}

void write_reward_export(std::ostream& out,
                         const std::string& sample_id,
                         std::span<const rewards::RewardBreakdown> group,
                         const rewards::AdvantageSet& advantages) {
    for (std::size_t g = 0; g < group.size(); ++g) {
        for (std::size_t t = 0; t < group[g].steps.size(); ++t) {
            const rewards::StepRewards& step = group[g].steps[t];
            nlohmann::ordered_json row;
            row["sample_id"] = sample_id;
            row["g"] = g;
            row["t"] = t + 1;
            row["r_memory"] = step.memory_gain;
            row["r_callback"] = step.callback;
            row["r_format"] = step.format;
            row["R_state"] = step.state;
            row["R_out"] = group[g].outcome;
            row["A_out"] = advantages.outcome[g];
            row["A_state"] = advantages.state[g][t];
            row["A_total"] = advantages.total[g][t];
            out << row.dump() << "\n";
        }
    }
}

namespace {

rewards::AdvantageSet degenerate_advantages(std::span<const rewards::RewardBreakdown> group,
                                            double alpha) {
    // Single-trajectory groups: every advantage is zero (mean of itself).
    rewards::AdvantageSet advantages;
    advantages.alpha = alpha;
    advantages.outcome.assign(group.size(), 0.0);
    advantages.state.assign(group.size(), std::vector<double>(group[0].steps.size(), 0.0));
    advantages.total = advantages.state;
    return advantages;
}

}  // namespace

void score_offline(const std::string& dump_path,
                   const std::string& dataset_path,
                   double alpha,
                   const RunConfig& config,
                   std::ostream& out) {
    const auto samples = corpus::load_dataset(dataset_path);
    std::unordered_map<std::string, const corpus::QASample*> by_id;
    for (const auto& sample : samples) by_id[sample.id] = &sample;

    const auto dumped = runtime::read_trajectory_dump(dump_path);
    std::vector<std::string> unknown;
    for (const auto& traj : dumped) {
        if (by_id.find(traj.sample_id) == by_id.end()) unknown.push_back(traj.sample_id);
    }
    if (!unknown.empty()) {
        std::sort(unknown.begin(), unknown.end());
        unknown.erase(std::unique(unknown.begin(), unknown.end()), unknown.end());
        std::string msg = "dump references unknown sample id(s):";
        for (const auto& id : unknown) msg += " " + id;
        throw corpus::DatasetError(msg);
    }

    // Group trajectories by sample id in first-seen order.
    std::vector<std::string> order;
    std::map<std::string, std::vector<const runtime::Trajectory*>> groups;
    for (const auto& traj : dumped) {
        auto [it, inserted] = groups.emplace(traj.sample_id,
                                             std::vector<const runtime::Trajectory*>{});
        if (inserted) order.push_back(traj.sample_id);
        it->second.push_back(&traj);
    }

    const auto rc = runtime_config(config);
    const auto sc = score_config(config);
    for (const std::string& sample_id : order) {
        const corpus::QASample& sample = *by_id.at(sample_id);
        std::vector<rewards::RewardBreakdown> breakdowns;
        for (const runtime::Trajectory* dumped_traj : groups.at(sample_id)) {
            std::vector<std::string> chunks;
            std::vector<std::string> raws;
            for (const auto& rec : dumped_traj->steps) {
                if (!rec.is_terminal) chunks.push_back(rec.chunk.value());
                raws.push_back(rec.raw_output);
            }
            const auto replayed = runtime::replay_trajectory(sample, chunks, raws, rc,
                                                             dumped_traj->group_index);
            breakdowns.push_back(rewards::score_trajectory(replayed, sample.answers, sc));
        }
        const auto advantages = breakdowns.size() >= 2
                                    ? rewards::group_advantages(breakdowns, alpha)
                                    : degenerate_advantages(breakdowns, alpha);
        write_reward_export(out, sample_id, breakdowns, advantages);
    }
}

void write_layout_export(std::ostream& out,
                         const std::string& sample_id,
                         const std::string& mode,
                         std::uint64_t seed,
                         const corpus::ContextLayout& layout) {
    nlohmann::ordered_json row;
    row["sample_id"] = sample_id;
    row["mode"] = mode;
    row["seed"] = seed;
    row["positions"] = layout.evidence_positions;
    out << row.dump() << "\n";
}

}  // namespace memrl::harness
