#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memrl/runtime.hpp"
#include "memrl/textmetrics.hpp"

namespace memrl::rewards {

struct ScoreConfig {
    double format_penalty = 1.0;      // subtracted once per step with any violation
    bool flip_memory_recall = false;  // memory-gain recall orientation flip
};

/// Exact-match normalization: lowercase, punctuation stripped, whitespace
/// collapsed, leading article (a/an/the) dropped.
std::string normalize_answer(std::string_view text);

/// 1 iff the normalized prediction equals a normalized acceptable answer.
/// Throws std::invalid_argument on an empty answer set.
double outcome_reward(const std::optional<std::string>& predicted,
                      std::span<const std::string> answers);

/// Change in best answer recall from the previous to the current memory.
double memory_gain_reward(std::string_view memory_prev,
                          std::string_view memory_cur,
                          std::span<const std::string> answers,
                          bool flip_direction = false);

/// Additional answer recall contributed by the retrieved text beyond the
/// current memory and chunk. Zero when no retrieval occurred; never
/// negative.
double callback_reward(const text::RetrievalResult& retrieved,
                       std::string_view memory,
                       std::string_view chunk,
                       std::span<const std::string> answers);

/// 0 when every applicable check passes, -penalty otherwise.
double format_reward(const runtime::StepRecord& step, double penalty = 1.0);

struct StepRewards {
    double memory_gain = 0.0;
    double callback = 0.0;
    double format = 0.0;
    double state = 0.0;  // memory_gain + callback + format
};

struct RewardBreakdown {
    std::vector<StepRewards> steps;  // T+1 entries; the terminal step has
                                     // memory_gain = callback = 0
    double outcome = 0.0;            // R_out in {0, 1}
};

/// Pure function of the trajectory record; replaying a dump yields the
/// exact same breakdown.
RewardBreakdown score_trajectory(const runtime::Trajectory& trajectory,
                                 std::span<const std::string> answers,
                                 const ScoreConfig& config = {});

inline constexpr double kDefaultAlpha = 0.8;

struct AdvantageSet {
    double alpha = kDefaultAlpha;
    std::vector<double> outcome;               // per trajectory, mean-centered
    std::vector<std::vector<double>> state;    // [g][t], mean-centered per step
    std::vector<std::vector<double>> total;    // alpha*outcome + (1-alpha)*state
};

/// Mean-baseline advantages (no standard-deviation scaling). Requires
/// G >= 2 and an identical step count across the group.
AdvantageSet group_advantages(std::span<const RewardBreakdown> group, double alpha);

}  // namespace memrl::rewards
