#include "memrl/grpo.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "memrl/corpus.hpp"

namespace memrl::grpo {

void check_aligned(const TokenArray& a, const TokenArray& b, const char* what) {
    if (a.size() != b.size()) throw std::invalid_argument(std::string(what) + ": trajectory count mismatch");
    for (std::size_t g = 0; g < a.size(); ++g) {
        if (a[g].size() != b[g].size()) {
            throw std::invalid_argument(std::string(what) + ": step count mismatch");
        }
        for (std::size_t t = 0; t < a[g].size(); ++t) {
            if (a[g][t].size() != b[g][t].size()) {
                throw std::invalid_argument(std::string(what) + ": token count mismatch");
            }
        }
    }
}

TokenArray importance_ratios(const TokenArray& current, const TokenArray& behavior) {
    check_aligned(current, behavior, "importance_ratios");
    TokenArray ratios = current;
    for (std::size_t g = 0; g < ratios.size(); ++g) {
        for (std::size_t t = 0; t < ratios[g].size(); ++t) {
            for (std::size_t i = 0; i < ratios[g][t].size(); ++i) {
                ratios[g][t][i] = std::exp(current[g][t][i] - behavior[g][t][i]);
            }
        }
    }
    return ratios;
}

namespace {

double clip(double rho, double epsilon) {
    return std::min(std::max(rho, 1.0 - epsilon), 1.0 + epsilon);
}

}  // namespace

TokenArray clipped_surrogate(const TokenArray& ratios,
                             const std::vector<std::vector<double>>& advantages,
                             double epsilon) {
    if (epsilon <= 0.0) throw std::invalid_argument("clipped_surrogate: epsilon must be positive");
    if (advantages.size() != ratios.size()) {
        throw std::invalid_argument("clipped_surrogate: advantage shape mismatch");
    }
    TokenArray values = ratios;
    for (std::size_t g = 0; g < ratios.size(); ++g) {
        if (advantages[g].size() != ratios[g].size()) {
            throw std::invalid_argument("clipped_surrogate: advantage shape mismatch");
        }
        for (std::size_t t = 0; t < ratios[g].size(); ++t) {
            const double advantage = advantages[g][t];
            for (std::size_t i = 0; i < ratios[g][t].size(); ++i) {
                const double rho = ratios[g][t][i];
                values[g][t][i] = std::min(rho * advantage, clip(rho, epsilon) * advantage);
            }
        }
    }
    return values;
}

TokenArray kl_penalty(const TokenArray& current, const TokenArray& reference) {
    check_aligned(current, reference, "kl_penalty");
    TokenArray values = current;
    for (std::size_t g = 0; g < values.size(); ++g) {
        for (std::size_t t = 0; t < values[g].size(); ++t) {
            for (std::size_t i = 0; i < values[g][t].size(); ++i) {
                const double delta = reference[g][t][i] - current[g][t][i];
                values[g][t][i] = std::exp(delta) - delta - 1.0;
            }
        }
    }
    return values;
}

ObjectiveSummary grpo_objective(const TokenLogProbs& logps,
                                const std::vector<std::vector<double>>& advantages,
                                double epsilon,
                                double beta) {
    check_aligned(logps.current, logps.behavior, "grpo_objective");
    check_aligned(logps.current, logps.reference, "grpo_objective");
    const std::size_t group_size = logps.current.size();
    if (group_size == 0) throw std::invalid_argument("grpo_objective: empty group");
    if (advantages.size() != group_size) {
        throw std::invalid_argument("grpo_objective: advantage shape mismatch");
    }
    const std::size_t steps = logps.current[0].size();
    for (std::size_t g = 0; g < group_size; ++g) {
        if (logps.current[g].size() != steps || advantages[g].size() != steps) {
            throw std::invalid_argument("grpo_objective: trajectories disagree on step count");
        }
    }

    std::vector<double> surrogate_per_traj(group_size, 0.0);
    std::vector<double> kl_per_traj(group_size, 0.0);
    std::size_t token_total = 0;
    std::size_t clipped_total = 0;
    for (std::size_t g = 0; g < group_size; ++g) {
        for (std::size_t t = 0; t < steps; ++t) {
            const auto& cur = logps.current[g][t];
            const auto& old = logps.behavior[g][t];
            const auto& ref = logps.reference[g][t];
            if (cur.empty()) throw std::invalid_argument("grpo_objective: empty step");
            const double advantage = advantages[g][t];
            double surrogate_sum = 0.0;
            double kl_sum = 0.0;
            for (std::size_t i = 0; i < cur.size(); ++i) {
                const double rho = std::exp(cur[i] - old[i]);
                const double unclipped = rho * advantage;
                const double clipped = clip(rho, epsilon) * advantage;
                surrogate_sum += std::min(unclipped, clipped);
                if (clipped < unclipped) ++clipped_total;
                const double delta = ref[i] - cur[i];
                kl_sum += std::exp(delta) - delta - 1.0;
                ++token_total;
            }
            surrogate_per_traj[g] += surrogate_sum / static_cast<double>(cur.size());
            kl_per_traj[g] += kl_sum / static_cast<double>(cur.size());
        }
    }

    // Sorted accumulation: the objective is invariant to trajectory order.
    std::sort(surrogate_per_traj.begin(), surrogate_per_traj.end());
    std::sort(kl_per_traj.begin(), kl_per_traj.end());
    double surrogate = 0.0;
    for (const double v : surrogate_per_traj) surrogate += v;
    double kl = 0.0;
    for (const double v : kl_per_traj) kl += v;
    const double denom = static_cast<double>(group_size) * static_cast<double>(steps);
    surrogate /= denom;
    kl /= denom;

    ObjectiveSummary summary;
    summary.surrogate = surrogate;
    summary.kl = kl;
    summary.objective = surrogate - beta * kl;
    summary.clip_fraction =
        token_total == 0 ? 0.0
                         : static_cast<double>(clipped_total) / static_cast<double>(token_total);
    return summary;
}

std::string to_json_line(const ObjectiveSummary& summary) {
    nlohmann::ordered_json row;
    row["J"] = summary.objective;
    row["surrogate_term"] = summary.surrogate;
    row["kl_term"] = summary.kl;
    row["clip_fraction"] = summary.clip_fraction;
    return row.dump();
}

// ---------------------------------------------------------------------------
// ToySoftmaxPolicy
// ---------------------------------------------------------------------------

ToySoftmaxPolicy::ToySoftmaxPolicy(int vocab_size) : vocab_(vocab_size) {
    if (vocab_size < 2 || vocab_size > 32) {
        throw std::invalid_argument("vocab size must lie in [2, 32]");
    }
}

void ToySoftmaxPolicy::set_score(std::uint64_t context, int symbol, double value) {
    auto it = rows_.find(context);
    if (it == rows_.end()) it = rows_.emplace(context, std::vector<double>(vocab_, 0.0)).first;
    it->second.at(static_cast<std::size_t>(symbol)) = value;
}

double ToySoftmaxPolicy::score(std::uint64_t context, int symbol) const {
    const auto it = rows_.find(context);
    if (it == rows_.end()) return 0.0;
    return it->second.at(static_cast<std::size_t>(symbol));
}

std::vector<double> ToySoftmaxPolicy::log_softmax(std::uint64_t context) const {
    std::vector<double> row;
    const auto it = rows_.find(context);
    if (it == rows_.end()) {
        row.assign(vocab_, 0.0);
    } else {
        row = it->second;
    }
    const double max_score = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (const double v : row) sum += std::exp(v - max_score);
    const double log_norm = max_score + std::log(sum);
    for (double& v : row) v -= log_norm;
    return row;
}

std::vector<double> ToySoftmaxPolicy::softmax(std::uint64_t context) const {
    std::vector<double> row = log_softmax(context);
    for (double& v : row) v = std::exp(v);
    return row;
}

double ToySoftmaxPolicy::log_prob(std::uint64_t context, int symbol) const {
    return log_softmax(context).at(static_cast<std::size_t>(symbol));
}

std::uint64_t step_context_key(std::string_view sample_id,
                               int step_index,
                               std::span<const int> prefix) {
    std::uint64_t h = corpus::fnv1a(sample_id);
    h = corpus::mix_seed(h, "step", static_cast<std::uint64_t>(step_index));
    for (const int symbol : prefix) {
        h = corpus::mix_seed(h, "sym", static_cast<std::uint64_t>(symbol));
    }
    return h;
}

// ---------------------------------------------------------------------------
// Fixtures + gradient check
// ---------------------------------------------------------------------------

GradCheckFixture make_gradcheck_fixture(std::uint64_t seed,
                                        int group_size,
                                        int chunk_steps,
                                        int vocab_size,
                                        int max_tokens_per_step,
                                        double epsilon) {
    if (group_size < 1 || chunk_steps < 0 || max_tokens_per_step < 1) {
        throw std::invalid_argument("make_gradcheck_fixture: bad dimensions");
    }
    GradCheckFixture fixture;
    fixture.sample_id = "fixture-" + std::to_string(seed);
    fixture.current = ToySoftmaxPolicy(vocab_size);
    fixture.behavior = ToySoftmaxPolicy(vocab_size);
    fixture.reference = ToySoftmaxPolicy(vocab_size);
    std::mt19937_64 rng(seed);
    auto uniform = [&] { return (static_cast<double>(rng() >> 11) / 9007199254740992.0) * 2.0 - 1.0; };

    const int steps = chunk_steps + 1;
    fixture.symbols.resize(group_size);
    fixture.advantages.resize(group_size);
    for (int g = 0; g < group_size; ++g) {
        fixture.symbols[g].resize(steps);
        fixture.advantages[g].resize(steps);
        for (int t = 0; t < steps; ++t) {
            const int tokens = 1 + static_cast<int>(rng() % max_tokens_per_step);
            std::vector<int>& seq = fixture.symbols[g][t];
            for (int i = 0; i < tokens; ++i) {
                seq.push_back(static_cast<int>(rng() % vocab_size));
                const std::uint64_t ctx = step_context_key(
                    fixture.sample_id, t + 1, std::span<const int>(seq.data(), seq.size() - 1));
                for (ToySoftmaxPolicy* policy :
                     {&fixture.current, &fixture.behavior, &fixture.reference}) {
                    if (policy->rows().find(ctx) == policy->rows().end()) {
                        for (int v = 0; v < vocab_size; ++v) policy->set_score(ctx, v, uniform());
                    }
                }
            }
            // Keep advantages away from zero so every surrogate branch has
            // a measurable gradient.
            const double magnitude = 0.05 + 0.95 * (uniform() * 0.5 + 0.5);
            fixture.advantages[g][t] = (rng() % 2 == 0 ? 1.0 : -1.0) * magnitude;
        }
    }

    // Nudge behavior scores until every ratio sits clear of the clip
    // boundaries; the gradient check differentiates across the min/clip
    // kink otherwise.
    const double lo = std::log(1.0 - epsilon);
    const double hi = std::log(1.0 + epsilon);
    const double margin = 1e-3;
    for (int pass = 0; pass < 64; ++pass) {
        bool clean = true;
        for (int g = 0; g < group_size; ++g) {
            for (int t = 0; t < steps; ++t) {
                const auto& seq = fixture.symbols[g][t];
                for (std::size_t i = 0; i < seq.size(); ++i) {
                    const std::uint64_t ctx = step_context_key(
                        fixture.sample_id, t + 1, std::span<const int>(seq.data(), i));
                    const double log_ratio = fixture.current.log_prob(ctx, seq[i]) -
                                             fixture.behavior.log_prob(ctx, seq[i]);
                    if (std::abs(log_ratio - lo) < margin || std::abs(log_ratio - hi) < margin) {
                        const double bump = (rng() % 2 == 0 ? 1.0 : -1.0) * 4.0 * margin;
                        fixture.behavior.set_score(ctx, seq[i],
                                                   fixture.behavior.score(ctx, seq[i]) + bump);
                        clean = false;
                    }
                }
            }
        }
        if (clean) break;
    }
    return fixture;
}

TokenLogProbs eval_logprobs(const GradCheckFixture& fixture) {
    TokenLogProbs logps;
    const std::size_t group_size = fixture.symbols.size();
    logps.current.resize(group_size);
    logps.behavior.resize(group_size);
    logps.reference.resize(group_size);
    for (std::size_t g = 0; g < group_size; ++g) {
        const std::size_t steps = fixture.symbols[g].size();
        logps.current[g].resize(steps);
        logps.behavior[g].resize(steps);
        logps.reference[g].resize(steps);
        for (std::size_t t = 0; t < steps; ++t) {
            const auto& seq = fixture.symbols[g][t];
            for (std::size_t i = 0; i < seq.size(); ++i) {
                const std::uint64_t ctx = step_context_key(
                    fixture.sample_id, static_cast<int>(t) + 1,
                    std::span<const int>(seq.data(), i));
                logps.current[g][t].push_back(fixture.current.log_prob(ctx, seq[i]));
                logps.behavior[g][t].push_back(fixture.behavior.log_prob(ctx, seq[i]));
                logps.reference[g][t].push_back(fixture.reference.log_prob(ctx, seq[i]));
            }
        }
    }
    return logps;
}

double objective_value(const GradCheckFixture& fixture, double epsilon, double beta) {
    return grpo_objective(eval_logprobs(fixture), fixture.advantages, epsilon, beta).objective;
}

std::map<std::pair<std::uint64_t, int>, double> analytic_gradient(const GradCheckFixture& fixture,
                                                                  double epsilon,
                                                                  double beta) {
    std::map<std::pair<std::uint64_t, int>, double> grad;
    for (const auto& [ctx, row] : fixture.current.rows()) {
        for (int v = 0; v < fixture.current.vocab_size(); ++v) grad[{ctx, v}] = 0.0;
    }
    const std::size_t group_size = fixture.symbols.size();
    const std::size_t steps = group_size == 0 ? 0 : fixture.symbols[0].size();
    const double norm = 1.0 / (static_cast<double>(group_size) * static_cast<double>(steps));
    for (std::size_t g = 0; g < group_size; ++g) {
        for (std::size_t t = 0; t < steps; ++t) {
            const auto& seq = fixture.symbols[g][t];
            const double advantage = fixture.advantages[g][t];
            const double weight = norm / static_cast<double>(seq.size());
            for (std::size_t i = 0; i < seq.size(); ++i) {
                const std::uint64_t ctx = step_context_key(
                    fixture.sample_id, static_cast<int>(t) + 1,
                    std::span<const int>(seq.data(), i));
                const double cur = fixture.current.log_prob(ctx, seq[i]);
                const double old = fixture.behavior.log_prob(ctx, seq[i]);
                const double ref = fixture.reference.log_prob(ctx, seq[i]);
                const double rho = std::exp(cur - old);
                const double unclipped = rho * advantage;
                const double clipped = clip(rho, epsilon) * advantage;
                const bool unclipped_active = unclipped <= clipped;
                // d/dlogp of [min-term - beta * k3]
                const double dsurrogate = unclipped_active ? unclipped : 0.0;
                const double dkl = beta * (std::exp(ref - cur) - 1.0);
                const double coefficient = weight * (dsurrogate + dkl);
                const std::vector<double> probs = fixture.current.softmax(ctx);
                for (int v = 0; v < fixture.current.vocab_size(); ++v) {
                    const double indicator = v == seq[i] ? 1.0 : 0.0;
                    grad[{ctx, v}] += coefficient * (indicator - probs[v]);
                }
            }
        }
    }
    return grad;
}

GradCheckResult toy_policy_grad_check(GradCheckFixture fixture,
                                      double epsilon,
                                      double beta,
                                      double step_size) {
    const auto analytic = analytic_gradient(fixture, epsilon, beta);
    GradCheckResult result;
    for (auto& [ctx, row] : fixture.current.rows()) {
        for (int v = 0; v < fixture.current.vocab_size(); ++v) {
            const double saved = row[static_cast<std::size_t>(v)];
            row[static_cast<std::size_t>(v)] = saved + step_size;
            const double plus = objective_value(fixture, epsilon, beta);
            row[static_cast<std::size_t>(v)] = saved - step_size;
            const double minus = objective_value(fixture, epsilon, beta);
            row[static_cast<std::size_t>(v)] = saved;
            const double numeric = (plus - minus) / (2.0 * step_size);
            const double exact = analytic.at({ctx, v});
            // Scale floor: central differences carry an absolute noise
            // floor of about eps_machine * |J| / h, so a pure ratio is
            // meaningless for vanishing gradients.
            const double scale = std::max({std::abs(exact), std::abs(numeric), 1e-6});
            const double rel_error = std::abs(exact - numeric) / scale;
            result.max_rel_error = std::max(result.max_rel_error, rel_error);
            ++result.parameters_checked;
        }
    }
    return result;
}

}  // namespace memrl::grpo
