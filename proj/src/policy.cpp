#include "memrl/policy.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

#include "memrl/textmetrics.hpp"

namespace memrl::policy {

// ---------------------------------------------------------------------------
// ScriptedPolicy
// ---------------------------------------------------------------------------

ScriptedPolicy::ScriptedPolicy(std::vector<ScriptedRule> rules) : rules_(std::move(rules)) {
    for (const auto& rule : rules_) {
        if (!rule.final_step.has_value() && rule.conditions.empty()) return;
    }
    throw std::invalid_argument("ScriptedPolicy requires an unconditional default rule");
}

bool ScriptedPolicy::rule_matches(const ScriptedRule& rule, const StepInputs& inputs) {
    if (rule.final_step.has_value() && *rule.final_step != inputs.is_final) return false;
    for (const auto& cond : rule.conditions) {
        std::string_view haystack;
        std::string joined;
        switch (cond.field) {
            case RuleCondition::Field::question: haystack = inputs.question; break;
            case RuleCondition::Field::chunk:
                if (!inputs.chunk) return false;
                haystack = *inputs.chunk;
                break;
            case RuleCondition::Field::memory: haystack = inputs.memory; break;
            case RuleCondition::Field::recalled: haystack = inputs.recalled; break;
            case RuleCondition::Field::memory_or_recalled:
                joined = inputs.memory + " " + inputs.recalled;
                haystack = joined;
                break;
            case RuleCondition::Field::any_context:
                joined = (inputs.chunk ? *inputs.chunk : std::string()) + " " + inputs.memory +
                         " " + inputs.recalled;
                haystack = joined;
                break;
        }
        const text::WordSet have = text::normalize_words(haystack);
        for (const auto& word : text::normalize_tokens(cond.words)) {
            if (!have.contains(word)) return false;
        }
    }
    return true;
}

std::string ScriptedPolicy::expand_action(const std::string& action, const StepInputs& inputs) {
    std::string out;
    std::size_t i = 0;
    while (i < action.size()) {
        if (action[i] != '{') {
            out.push_back(action[i++]);
            continue;
        }
        const std::size_t close = action.find('}', i);
        if (close == std::string::npos) {
            out.append(action.substr(i));
            break;
        }
        const std::string_view key(action.data() + i + 1, close - i - 1);
        if (key == "question") {
            out += inputs.question;
        } else if (key == "memory") {
            out += inputs.memory;
        } else if (key == "recalled") {
            out += inputs.recalled;
        } else if (key == "chunk") {
            if (inputs.chunk) out += *inputs.chunk;
        } else if (key.rfind("chunk_head:", 0) == 0) {
            const std::size_t n = std::stoul(std::string(key.substr(11)));
            if (inputs.chunk) {
                const auto words = corpus::split_words(*inputs.chunk);
                for (std::size_t k = 0; k < std::min(n, words.size()); ++k) {
                    if (k > 0) out.push_back(' ');
                    out += words[k];
                }
            }
        } else {
            out.append(action, i, close - i + 1);  // unknown placeholder kept verbatim
        }
        i = close + 1;
    }
    return out;
}

std::string ScriptedPolicy::complete(const std::string& prompt, const StepInputs& inputs) {
    (void)prompt;
    for (const auto& rule : rules_) {
        if (rule_matches(rule, inputs)) return expand_action(rule.action, inputs);
    }
    // Unreachable: the constructor guarantees a default rule.
    throw std::logic_error("ScriptedPolicy: no rule matched");
}

// ---------------------------------------------------------------------------
// Distant oracle
// ---------------------------------------------------------------------------

std::vector<ScriptedRule> build_distant_oracle(const corpus::QASample& sample) {
    const std::size_t hops = sample.evidence_docs.size();
    if (hops < 2) {
        throw std::invalid_argument("distant oracle requires at least 2 evidence documents");
    }
    if (hops > 8) {
        throw std::invalid_argument("distant oracle supports at most 8 hops");
    }
    std::vector<std::string> bodies;
    for (const auto& doc : sample.evidence_docs) bodies.push_back(doc.body);
    const std::string answer = sample.answers.front();

    auto note_block = [&](const std::vector<std::size_t>& hops_held) {
        std::string memory;
        for (const std::size_t h : hops_held) {
            if (!memory.empty()) memory.push_back(' ');
            memory += "NOTE: " + bodies[h];
        }
        return "<update>" + memory + "</update>";
    };
    auto cond = [](RuleCondition::Field field, std::string words) {
        return RuleCondition{field, std::move(words)};
    };

    std::vector<ScriptedRule> rules;

    // Final step: answer only when the whole chain is present in memory or
    // the recalled note; otherwise admit failure (formats stay valid).
    {
        ScriptedRule complete_chain;
        complete_chain.final_step = true;
        for (const auto& body : bodies) {
            complete_chain.conditions.push_back(
                cond(RuleCondition::Field::any_context, body));
        }
        complete_chain.action = "The evidence chain is complete. \\boxed{" + answer + "}";
        rules.push_back(std::move(complete_chain));

        ScriptedRule give_up;
        give_up.final_step = true;
        give_up.action = "The evidence chain is incomplete. \\boxed{unknown}";
        rules.push_back(std::move(give_up));
    }

    // Chunk sightings, most-complete known set first: store every hop that
    // is visible in chunk/memory/recalled, and query for missing later-hop
    // notes when an earlier hop was just resolved.
    std::vector<std::vector<std::size_t>> subsets;
    {
        const std::size_t m = hops;
        for (std::size_t mask = 0; mask < (1u << m); ++mask) {
            std::vector<std::size_t> subset;
            for (std::size_t h = 0; h < m; ++h) {
                if (mask & (1u << h)) subset.push_back(h);
            }
            subsets.push_back(std::move(subset));
        }
        std::sort(subsets.begin(), subsets.end(),
                  [](const auto& a, const auto& b) { return a.size() > b.size(); });
    }
    for (std::size_t k = 0; k < hops; ++k) {
        for (const auto& subset : subsets) {
            bool contains_k = false;
            for (const std::size_t h : subset) contains_k |= (h == k);
            if (contains_k) continue;
            ScriptedRule rule;
            rule.final_step = false;
            rule.conditions.push_back(cond(RuleCondition::Field::chunk, bodies[k]));
            std::vector<std::size_t> held{k};
            for (const std::size_t h : subset) {
                rule.conditions.push_back(cond(RuleCondition::Field::any_context, bodies[h]));
                held.push_back(h);
            }
            std::sort(held.begin(), held.end());
            rule.action = note_block(held);
            std::string missing_later;
            for (std::size_t h = k + 1; h < hops; ++h) {
                bool in_held = false;
                for (const std::size_t x : held) in_held |= (x == h);
                if (!in_held) missing_later += " " + bodies[h];
            }
            if (!missing_later.empty()) {
                rule.action += "<recall>NOTE" + missing_later + "</recall>";
            }
            rules.push_back(std::move(rule));
        }
    }

    // Hold a completed chain against later filler.
    {
        ScriptedRule hold;
        hold.final_step = false;
        std::vector<std::size_t> all;
        for (std::size_t h = 0; h < hops; ++h) {
            hold.conditions.push_back(cond(RuleCondition::Field::any_context, bodies[h]));
            all.push_back(h);
        }
        hold.action = note_block(all);
        rules.push_back(std::move(hold));
    }

    // Default: rolling summary; the memory cap does the forgetting.
    {
        ScriptedRule filler;
        filler.action = "<update>{memory} {chunk_head:12}</update>";
        rules.push_back(std::move(filler));
    }
    return rules;
}

// ---------------------------------------------------------------------------
// MockStochasticPolicy
// ---------------------------------------------------------------------------

namespace {

// splitmix64: cheap, stateless per-call randomness for the mock.
std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

std::string MockStochasticPolicy::complete(const std::string& prompt, const StepInputs& inputs) {
    (void)prompt;
    static constexpr std::array<const char*, 16> kLexicon{
        "ledger", "harbor", "archive", "survey",  "pier",   "record", "clerk",  "vault",
        "copper", "signal", "meridian", "granite", "lantern", "outpost", "cipher", "annex"};
    std::uint64_t state = corpus::mix_seed(
        seed_, "mock", (static_cast<std::uint64_t>(inputs.trajectory_index) << 20) ^
                           static_cast<std::uint64_t>(inputs.step_index));
    auto draw = [&] { return splitmix64(state); };
    auto word = [&] { return std::string(kLexicon[draw() % kLexicon.size()]); };
    if (inputs.is_final) {
        return "\\boxed{" + word() + "}";
    }
    std::string out = "<update>";
    const std::size_t n = 3 + draw() % 6;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) out.push_back(' ');
        out += word();
    }
    out += "</update>";
    if (emit_queries_ && draw() % 2 == 0) {
        out += "<recall>" + word() + " " + word() + "</recall>";
    }
    return out;
}

// ---------------------------------------------------------------------------
// ReplayPolicy
// ---------------------------------------------------------------------------

std::string ReplayPolicy::complete(const std::string& prompt, const StepInputs& inputs) {
    (void)prompt;
    const std::size_t index = static_cast<std::size_t>(inputs.step_index) - 1;
    if (index >= outputs_.size()) {
        throw PolicyError(PolicyErrorKind::bad_request,
                          "replay has no output for step " + std::to_string(inputs.step_index));
    }
    return outputs_[index];
}

// ---------------------------------------------------------------------------
// HttpPolicy
// ---------------------------------------------------------------------------

HttpPolicy::HttpPolicy(HttpPolicyConfig config) : config_(std::move(config)) {}

std::string HttpPolicy::request_body(const std::string& prompt) const {
    nlohmann::ordered_json body;
    body["model"] = config_.model;
    auto messages = nlohmann::ordered_json::array();
    if (!config_.system_prompt.empty()) {
        messages.push_back(
            nlohmann::ordered_json{{"role", "system"}, {"content", config_.system_prompt}});
    }
    messages.push_back(nlohmann::ordered_json{{"role", "user"}, {"content", prompt}});
    body["messages"] = messages;
    body["temperature"] = config_.params.temperature;
    body["max_tokens"] = config_.params.max_tokens;
    return body.dump();
}

std::string HttpPolicy::complete(const std::string& prompt, const StepInputs& inputs) {
    (void)inputs;
    const std::string body = request_body(prompt);
    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    std::string last_error;
    int backoff_ms = config_.backoff_initial_ms;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        httplib::Client client(config_.base_url);
        client.set_connection_timeout(config_.timeout_seconds, 0);
        client.set_read_timeout(config_.timeout_seconds, 0);
        auto res = client.Post("/v1/chat/completions", headers, body, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        try {
            const auto parsed = nlohmann::json::parse(res->body);
            return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const std::exception& e) {
            throw PolicyError(PolicyErrorKind::malformed_response,
                              std::string("malformed completion response: ") + e.what());
        }
    }
    const auto kind = last_error.rfind("http status", 0) == 0 ? PolicyErrorKind::http_status
                                                              : PolicyErrorKind::transport;
    throw PolicyError(kind, "chat completion failed after " +
                                std::to_string(config_.max_attempts) + " attempt(s): " + last_error);
}

}  // namespace memrl::policy
