#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "memrl/corpus.hpp"
#include "memrl/policy.hpp"
#include "memrl/textmetrics.hpp"

namespace memrl::runtime {

/// Tag names used by the output grammar. Defaults follow the shipped
/// prompt templates (<update> / <recall>).
struct TagConfig {
    std::string update = "update";
    std::string recall = "recall";
};

struct RuntimeConfig {
    bool callback_enabled = true;
    TagConfig tags;
    std::size_t memory_cap_words = 0;  // 0 = unlimited; oldest words truncated first
};

enum class FormatViolation {
    missing_update,
    multiple_update,
    multiple_recall,
    unclosed_tag,
    missing_box,
};

std::string_view to_string(FormatViolation violation);
FormatViolation format_violation_from_string(std::string_view name);

enum class PromptKind { intermediate, final };

/// Byte-exact instantiation of the prompt templates. Intermediate requires
/// a chunk; final must not get one.
std::string render_prompt(PromptKind kind,
                          const std::string& question,
                          const std::optional<std::string>& chunk,
                          const std::string& memory,
                          const std::string& recalled);

struct ParsedOutput {
    std::optional<std::string> memory;
    std::optional<std::string> query;
    std::vector<FormatViolation> violations;
};

/// Extracts the first well-formed update block as the memory and the first
/// well-formed recall block as the query. Extra blocks and unclosed tags
/// are recorded as violations, never errors.
ParsedOutput parse_step_output(const std::string& raw, const TagConfig& tags);

/// Content of the first balanced \boxed{...} (\box{...} accepted as a
/// lenient alias). Unbalanced candidates are skipped.
std::optional<std::string> extract_boxed_answer(const std::string& raw);

struct StepRecord {
    int step_index = 1;  // 1-based; terminal step is T+1
    std::optional<std::string> chunk;
    text::RetrievalResult retrieved;
    std::string prompt;
    std::string raw_output;
    std::string parsed_memory;  // post-cap memory after this step (m_t)
    std::optional<std::string> parsed_query;
    std::vector<FormatViolation> violations;
    bool is_terminal = false;
};

struct Trajectory {
    std::string sample_id;
    int group_index = 0;
    std::vector<StepRecord> steps;             // T+1 records
    std::vector<std::string> memory_history;   // m_1 .. m_T
    std::optional<std::string> predicted_answer;
};

struct Group {
    std::string sample_id;
    std::vector<Trajectory> trajectories;
};

/// Raised when a policy call fails mid-trajectory; carries the completed
/// steps for diagnostics.
class TrajectoryError : public std::runtime_error {
public:
    TrajectoryError(const std::string& message, std::vector<StepRecord> partial)
        : std::runtime_error(message), partial_steps_(std::move(partial)) {}
    const std::vector<StepRecord>& partial_steps() const { return partial_steps_; }

private:
    std::vector<StepRecord> partial_steps_;
};

/// One pass over the chunks plus the terminal answering step: exactly
/// T+1 policy calls. Retrieval at step t scans only m_1..m_{t-1} using the
/// query emitted at step t-1; the final step re-runs retrieval with the
/// step-T query. With callback_enabled = false, queries are parsed but
/// retrieval never runs and the recalled section stays empty.
Trajectory run_trajectory(const corpus::QASample& sample,
                          const corpus::ChunkSequence& chunks,
                          policy::Policy& policy,
                          const RuntimeConfig& config,
                          int trajectory_index = 0);

/// G independent trajectories over identical inputs. parallelism > 1 runs
/// trajectories concurrently; results are ordered by trajectory index
/// either way.
Group run_group(const corpus::QASample& sample,
                const corpus::ChunkSequence& chunks,
                policy::Policy& policy,
                int group_size,
                const RuntimeConfig& config,
                int parallelism = 1);

// --- dump / replay -------------------------------------------------------

/// JSONL dump, one StepRecord per line with sample_id and trajectory index.
void write_trajectory_dump(std::ostream& out, const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> read_trajectory_dump(const std::string& path);

/// Re-runs the transition machine from recorded raw outputs: parsing,
/// retrieval and rewards are recomputed; no policy is called.
Trajectory replay_trajectory(const corpus::QASample& sample,
                             const std::vector<std::string>& chunks,
                             const std::vector<std::string>& raw_outputs,
                             const RuntimeConfig& config,
                             int trajectory_index = 0);

}  // namespace memrl::runtime
