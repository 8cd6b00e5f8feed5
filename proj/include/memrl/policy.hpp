#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "memrl/corpus.hpp"

namespace memrl::policy {

struct GenerationParams {
    double temperature = 1.0;
    int max_tokens = 2048;
};

/// Structured view of one step, handed to policies alongside the rendered
/// prompt. Scripted rules match on these fields instead of re-parsing the
/// prompt text.
struct StepInputs {
    std::string question;
    std::optional<std::string> chunk;  // absent at the final step
    std::string memory;
    std::string recalled;
    bool is_final = false;
    int step_index = 1;
    int trajectory_index = 0;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string complete(const std::string& prompt, const StepInputs& inputs) = 0;
};

enum class PolicyErrorKind { transport, http_status, malformed_response, bad_request };

class PolicyError : public std::runtime_error {
public:
    PolicyError(PolicyErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}
    PolicyErrorKind kind() const { return kind_; }

private:
    PolicyErrorKind kind_;
};

// ---------------------------------------------------------------------------
// Scripted policies
// ---------------------------------------------------------------------------

struct RuleCondition {
    enum class Field {
        question,
        chunk,
        memory,
        recalled,
        memory_or_recalled,
        any_context,  // chunk + memory + recalled
    };
    Field field = Field::chunk;
    // All normalized words of `words` must appear in the field's text.
    std::string words;
};

/// One trigger/action pair. Rules are evaluated in list order; the first
/// match fires. Actions are literal output text with optional placeholders:
/// {question} {memory} {recalled} {chunk} {chunk_head:N}.
struct ScriptedRule {
    std::optional<bool> final_step;  // nullopt = any step
    std::vector<RuleCondition> conditions;
    std::string action;
};

class ScriptedPolicy final : public Policy {
public:
    /// Throws std::invalid_argument unless the list contains an
    /// unconditional any-step rule (the required default).
    explicit ScriptedPolicy(std::vector<ScriptedRule> rules);
    std::string complete(const std::string& prompt, const StepInputs& inputs) override;

    static bool rule_matches(const ScriptedRule& rule, const StepInputs& inputs);
    static std::string expand_action(const std::string& action, const StepInputs& inputs);

private:
    std::vector<ScriptedRule> rules_;
};

/// Rules that solve a multi-hop sample end to end when the callback is
/// enabled: later-hop evidence is noted with a marker, resolving an earlier
/// hop emits a recall query for the missing later-hop notes, recalled notes
/// are folded back into memory, and the final step answers from memory only
/// when the whole evidence chain is present. Requires >= 2 evidence docs.
std::vector<ScriptedRule> build_distant_oracle(const corpus::QASample& sample);

// ---------------------------------------------------------------------------
// Mock + replay policies
// ---------------------------------------------------------------------------

/// Seeded pseudo-random tagged outputs. Output is a pure function of
/// (seed, trajectory_index, step_index).
class MockStochasticPolicy final : public Policy {
public:
    explicit MockStochasticPolicy(std::uint64_t seed, bool emit_queries = true)
        : seed_(seed), emit_queries_(emit_queries) {}
    std::string complete(const std::string& prompt, const StepInputs& inputs) override;

private:
    std::uint64_t seed_;
    bool emit_queries_;
};

/// Replays recorded raw outputs by step index; used for dump replay.
class ReplayPolicy final : public Policy {
public:
    explicit ReplayPolicy(std::vector<std::string> outputs) : outputs_(std::move(outputs)) {}
    std::string complete(const std::string& prompt, const StepInputs& inputs) override;

private:
    std::vector<std::string> outputs_;
};

// ---------------------------------------------------------------------------
// HTTP policy (OpenAI-compatible chat completions)
// ---------------------------------------------------------------------------

struct HttpPolicyConfig {
    std::string base_url;                       // e.g. http://127.0.0.1:8080
    std::string model;
    std::string api_key_env = "MEMRL_API_KEY";  // header omitted if unset
    std::string system_prompt;                  // empty = no system message
    GenerationParams params;
    int max_attempts = 3;
    int timeout_seconds = 120;
    int backoff_initial_ms = 250;               // doubled per retry
};

class HttpPolicy final : public Policy {
public:
    explicit HttpPolicy(HttpPolicyConfig config);
    std::string complete(const std::string& prompt, const StepInputs& inputs) override;

    /// Canonical request body (fixed field order) so tests can assert the
    /// wire format byte for byte.
    std::string request_body(const std::string& prompt) const;

private:
    HttpPolicyConfig config_;
};

}  // namespace memrl::policy
