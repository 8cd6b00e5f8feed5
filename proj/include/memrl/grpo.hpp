#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace memrl::grpo {

inline constexpr double kDefaultClipRatio = 0.2;
inline constexpr double kDefaultKlCoefficient = 0.001;

/// Per-token values indexed [trajectory][step][token].
using TokenArray = std::vector<std::vector<std::vector<double>>>;

struct TokenLogProbs {
    TokenArray current;    // log-probs under the policy being optimized
    TokenArray behavior;   // log-probs under the rollout (old) policy
    TokenArray reference;  // log-probs under the frozen reference policy
};

/// Throws std::invalid_argument when the two arrays disagree on any
/// dimension.
void check_aligned(const TokenArray& a, const TokenArray& b, const char* what);

/// rho = exp(current - behavior), elementwise.
TokenArray importance_ratios(const TokenArray& current, const TokenArray& behavior);

/// min(rho * A, clip(rho, 1-eps, 1+eps) * A), elementwise; advantages are
/// per (trajectory, step) and broadcast over tokens.
TokenArray clipped_surrogate(const TokenArray& ratios,
                             const std::vector<std::vector<double>>& advantages,
                             double epsilon);

/// Per-token k3 estimator: exp(ref - cur) - (ref - cur) - 1; nonnegative.
TokenArray kl_penalty(const TokenArray& current, const TokenArray& reference);

struct ObjectiveSummary {
    double objective = 0.0;       // surrogate - beta * kl
    double surrogate = 0.0;       // token-weighted clipped surrogate mean
    double kl = 0.0;              // token-weighted k3 mean
    double clip_fraction = 0.0;   // tokens where the clipped branch was strictly smaller
};

/// One-line JSON form of a per-group summary, for logging:
/// {"J":...,"surrogate_term":...,"kl_term":...,"clip_fraction":...}
std::string to_json_line(const ObjectiveSummary& summary);

/// The group objective: mean over trajectories and steps of the per-step
/// token-mean surrogate, minus beta times the identically weighted KL term.
/// Per-trajectory partial sums are added in ascending order, so the result
/// is invariant under permutation of trajectories, bit for bit.
ObjectiveSummary grpo_objective(const TokenLogProbs& logps,
                                const std::vector<std::vector<double>>& advantages,
                                double epsilon,
                                double beta);

// ---------------------------------------------------------------------------
// Toy policy + gradient check
// ---------------------------------------------------------------------------

/// Tabular softmax policy over a small symbol vocabulary. Contexts are
/// opaque 64-bit keys; a context with no stored row is uniform.
class ToySoftmaxPolicy {
public:
    explicit ToySoftmaxPolicy(int vocab_size);

    int vocab_size() const { return vocab_; }
    void set_score(std::uint64_t context, int symbol, double value);
    double score(std::uint64_t context, int symbol) const;
    /// log softmax over the context's score row.
    std::vector<double> log_softmax(std::uint64_t context) const;
    std::vector<double> softmax(std::uint64_t context) const;
    double log_prob(std::uint64_t context, int symbol) const;

    const std::map<std::uint64_t, std::vector<double>>& rows() const { return rows_; }
    std::map<std::uint64_t, std::vector<double>>& rows() { return rows_; }

private:
    int vocab_;
    std::map<std::uint64_t, std::vector<double>> rows_;
};

/// Context key for token i of step t: a hash of (sample id, step index,
/// preceding symbols within the step).
std::uint64_t step_context_key(std::string_view sample_id,
                               int step_index,
                               std::span<const int> prefix);

/// A complete group fixture: token sequences plus the three policies and
/// per-(trajectory, step) advantages.
struct GradCheckFixture {
    std::string sample_id;
    std::vector<std::vector<std::vector<int>>> symbols;  // [g][t][i]
    ToySoftmaxPolicy current{2};
    ToySoftmaxPolicy behavior{2};
    ToySoftmaxPolicy reference{2};
    std::vector<std::vector<double>> advantages;         // [g][t]
};

/// Deterministic random fixture. Ratios are kept clear of the clip
/// boundaries so central differences never straddle the min/clip kink.
GradCheckFixture make_gradcheck_fixture(std::uint64_t seed,
                                        int group_size,
                                        int chunk_steps,  // T; the fixture has T+1 steps
                                        int vocab_size,
                                        int max_tokens_per_step,
                                        double epsilon = kDefaultClipRatio);

/// Log-probs of the fixture's token sequences under all three policies.
TokenLogProbs eval_logprobs(const GradCheckFixture& fixture);

/// Objective as a function of the fixture's current policy parameters.
double objective_value(const GradCheckFixture& fixture, double epsilon, double beta);

/// dJ/dtheta for every stored (context, symbol) entry of the current policy.
std::map<std::pair<std::uint64_t, int>, double> analytic_gradient(const GradCheckFixture& fixture,
                                                                  double epsilon,
                                                                  double beta);

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t parameters_checked = 0;
};

/// Central finite differences over every current-policy parameter vs the
/// analytic gradient; returns the max relative error, computed as
/// |a - n| / max(|a|, |n|, 1e-6) so vanishing gradients are judged on the
/// difference rather than an ill-posed ratio.
GradCheckResult toy_policy_grad_check(GradCheckFixture fixture,
                                      double epsilon,
                                      double beta,
                                      double step_size);

}  // namespace memrl::grpo
