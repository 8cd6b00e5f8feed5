#include "memrl/rewards.hpp"

#include <stdexcept>

namespace memrl::rewards {

std::string normalize_answer(std::string_view text) {
    const std::vector<std::string> tokens = text::normalize_tokens(text);
    std::string out;
    std::size_t start = 0;
    if (!tokens.empty() && (tokens[0] == "a" || tokens[0] == "an" || tokens[0] == "the")) {
        start = 1;
    }
    for (std::size_t i = start; i < tokens.size(); ++i) {
        if (!out.empty()) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

double outcome_reward(const std::optional<std::string>& predicted,
                      std::span<const std::string> answers) {
    if (answers.empty()) throw std::invalid_argument("outcome_reward: empty answer set");
    if (!predicted) return 0.0;
    const std::string norm = normalize_answer(*predicted);
    for (const auto& answer : answers) {
        if (normalize_answer(answer) == norm) return 1.0;
    }
    return 0.0;
}

double memory_gain_reward(std::string_view memory_prev,
                          std::string_view memory_cur,
                          std::span<const std::string> answers,
                          bool flip_direction) {
    const auto direction = flip_direction ? text::RecallDirection::answer_in_text
                                          : text::RecallDirection::text_in_answer;
    return text::max_recall_over_answers(memory_cur, answers, direction) -
           text::max_recall_over_answers(memory_prev, answers, direction);
}

double callback_reward(const text::RetrievalResult& retrieved,
                       std::string_view memory,
                       std::string_view chunk,
                       std::span<const std::string> answers) {
    if (!retrieved.found) return 0.0;
    const std::string base = std::string(memory) + " " + std::string(chunk);
    const std::string with_retrieved = retrieved.content + " " + base;
    return text::max_recall_over_answers(with_retrieved, answers,
                                         text::RecallDirection::answer_in_text) -
           text::max_recall_over_answers(base, answers, text::RecallDirection::answer_in_text);
}

double format_reward(const runtime::StepRecord& step, double penalty) {
    return step.violations.empty() ? 0.0 : -penalty;
}

RewardBreakdown score_trajectory(const runtime::Trajectory& trajectory,
                                 std::span<const std::string> answers,
                                 const ScoreConfig& config) {
    RewardBreakdown breakdown;
    breakdown.steps.reserve(trajectory.steps.size());
    std::string memory_prev;  // m_0 is empty
    for (const runtime::StepRecord& rec : trajectory.steps) {
        StepRewards r;
        if (!rec.is_terminal) {
            r.memory_gain = memory_gain_reward(memory_prev, rec.parsed_memory, answers,
                                               config.flip_memory_recall);
            r.callback = callback_reward(rec.retrieved, memory_prev,
                                         rec.chunk ? *rec.chunk : std::string_view(), answers);
            memory_prev = rec.parsed_memory;
        }
        r.format = format_reward(rec, config.format_penalty);
        r.state = r.memory_gain + r.callback + r.format;
        breakdown.steps.push_back(r);
    }
    breakdown.outcome = outcome_reward(trajectory.predicted_answer, answers);
    return breakdown;
}

AdvantageSet group_advantages(std::span<const RewardBreakdown> group, double alpha) {
    const std::size_t group_size = group.size();
    if (group_size < 2) throw std::invalid_argument("group_advantages: need at least 2 trajectories");
    if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("alpha must lie in [0, 1]");
    const std::size_t steps = group[0].steps.size();
    for (const auto& breakdown : group) {
        if (breakdown.steps.size() != steps) {
            throw std::invalid_argument("group_advantages: trajectories disagree on step count");
        }
    }

    AdvantageSet advantages;
    advantages.alpha = alpha;
    advantages.outcome.resize(group_size);
    advantages.state.assign(group_size, std::vector<double>(steps, 0.0));
    advantages.total.assign(group_size, std::vector<double>(steps, 0.0));

    double outcome_mean = 0.0;
    for (const auto& breakdown : group) outcome_mean += breakdown.outcome;
    outcome_mean /= static_cast<double>(group_size);
    for (std::size_t g = 0; g < group_size; ++g) {
        advantages.outcome[g] = group[g].outcome - outcome_mean;
    }

    for (std::size_t t = 0; t < steps; ++t) {
        double state_mean = 0.0;
        for (const auto& breakdown : group) state_mean += breakdown.steps[t].state;
        state_mean /= static_cast<double>(group_size);
        for (std::size_t g = 0; g < group_size; ++g) {
            advantages.state[g][t] = group[g].steps[t].state - state_mean;
            advantages.total[g][t] =
                alpha * advantages.outcome[g] + (1.0 - alpha) * advantages.state[g][t];
        }
    }
    return advantages;
}

}  // namespace memrl::rewards
