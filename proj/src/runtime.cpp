#include "memrl/runtime.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

namespace memrl::runtime {

using nlohmann::json;

std::string_view to_string(FormatViolation violation) {
    switch (violation) {
        case FormatViolation::missing_update: return "missing_update";
        case FormatViolation::multiple_update: return "multiple_update";
        case FormatViolation::multiple_recall: return "multiple_recall";
        case FormatViolation::unclosed_tag: return "unclosed_tag";
        case FormatViolation::missing_box: return "missing_box";
    }
    return "unknown";
}

FormatViolation format_violation_from_string(std::string_view name) {
    if (name == "missing_update") return FormatViolation::missing_update;
    if (name == "multiple_update") return FormatViolation::multiple_update;
    if (name == "multiple_recall") return FormatViolation::multiple_recall;
    if (name == "unclosed_tag") return FormatViolation::unclosed_tag;
    if (name == "missing_box") return FormatViolation::missing_box;
    throw std::invalid_argument("unknown format violation: " + std::string(name));
}

// ---------------------------------------------------------------------------
// Prompt rendering
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kIntermediateHeader =
    "You are presented with a problem, a section of an article that may contain the answer to "
    "the problem, and a previous memory. You should generate a response in the following "
    "format:\n"
    "- Output your thinking process in <thinking>your_thinking_process</thinking>.\n"
    "- Read the provided section carefully and update the memory with the new information that "
    "helps to answer the problem in only one <update>the_updated_memory</update> action. Be "
    "sure to retain all relevant details from the previous memory while adding any new, useful "
    "information.\n"
    "- If you notice partial key evidence that is not enough to answer the problem, also output "
    "only one <recall>query</recall> (e.g. \"<recall>who's the president of the United "
    "States?</recall>\") to retrieve information in previous memories.\n";

constexpr std::string_view kFinalHeader =
    "You are presented with a problem and a previous memory. Please answer the problem based "
    "on the previous memory and put the answer in \\boxed{}.\n";

void append_block(std::string& out, std::string_view tag, const std::string& content) {
    out += "\n<";
    out += tag;
    out += ">\n";
    out += content;
    out += "\n</";
    out += tag;
    out += ">\n";
}

}  // namespace

std::string render_prompt(PromptKind kind,
                          const std::string& question,
                          const std::optional<std::string>& chunk,
                          const std::string& memory,
                          const std::string& recalled) {
    if (kind == PromptKind::intermediate && !chunk.has_value()) {
        throw std::invalid_argument("intermediate prompt requires a chunk");
    }
    if (kind == PromptKind::final && chunk.has_value()) {
        throw std::invalid_argument("final prompt must not receive a chunk");
    }
    std::string out(kind == PromptKind::intermediate ? kIntermediateHeader : kFinalHeader);
    append_block(out, "problem", question);
    append_block(out, "recalled_memory", recalled);
    append_block(out, "memory", memory);
    if (kind == PromptKind::intermediate) append_block(out, "section", *chunk);
    out += kind == PromptKind::intermediate ? "\nUpdated memory:" : "\nYour answer:";
    return out;
}

// ---------------------------------------------------------------------------
// Output parsing
// ---------------------------------------------------------------------------

namespace {

struct TagScan {
    std::optional<std::string> content;
    bool unclosed = false;
    bool multiple = false;
};

TagScan scan_tag(const std::string& raw, const std::string& name) {
    TagScan scan;
    const std::string open = "<" + name + ">";
    const std::string close = "</" + name + ">";
    const std::size_t open_pos = raw.find(open);
    if (open_pos == std::string::npos) return scan;
    const std::size_t body_pos = open_pos + open.size();
    const std::size_t close_pos = raw.find(close, body_pos);
    if (close_pos == std::string::npos) {
        scan.unclosed = true;
        return scan;
    }
    std::string content = raw.substr(body_pos, close_pos - body_pos);
    // Trim surrounding whitespace; inner whitespace is preserved.
    const auto first = content.find_first_not_of(" \t\r\n");
    const auto last = content.find_last_not_of(" \t\r\n");
    scan.content = first == std::string::npos ? std::string()
                                              : content.substr(first, last - first + 1);
    if (raw.find(open, close_pos + close.size()) != std::string::npos) scan.multiple = true;
    return scan;
}

}  // namespace

ParsedOutput parse_step_output(const std::string& raw, const TagConfig& tags) {
    ParsedOutput parsed;
    const TagScan update = scan_tag(raw, tags.update);
    const TagScan recall = scan_tag(raw, tags.recall);
    if (update.unclosed || recall.unclosed) {
        parsed.violations.push_back(FormatViolation::unclosed_tag);
    }
    if (update.content) {
        parsed.memory = update.content;
        if (update.multiple) parsed.violations.push_back(FormatViolation::multiple_update);
    } else {
        parsed.violations.push_back(FormatViolation::missing_update);
    }
    if (recall.content) {
        parsed.query = recall.content;
        if (recall.multiple) parsed.violations.push_back(FormatViolation::multiple_recall);
    }
    return parsed;
}

std::optional<std::string> extract_boxed_answer(const std::string& raw) {
    for (const std::string_view marker : {"\\boxed{", "\\box{"}) {
        std::size_t from = 0;
        while (true) {
            const std::size_t pos = raw.find(marker, from);
            if (pos == std::string::npos) break;
            int depth = 1;
            for (std::size_t i = pos + marker.size(); i < raw.size(); ++i) {
                if (raw[i] == '{') {
                    ++depth;
                } else if (raw[i] == '}') {
                    if (--depth == 0) {
                        return raw.substr(pos + marker.size(), i - pos - marker.size());
                    }
                }
            }
            from = pos + marker.size();  // unbalanced; try the next occurrence
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Rollout
// ---------------------------------------------------------------------------

Trajectory run_trajectory(const corpus::QASample& sample,
                          const corpus::ChunkSequence& chunks,
                          policy::Policy& policy,
                          const RuntimeConfig& config,
                          int trajectory_index) {
    if (chunks.chunks.empty()) throw std::invalid_argument("run_trajectory: no chunks");
    Trajectory traj;
    traj.sample_id = sample.id;
    traj.group_index = trajectory_index;
    const std::size_t total_chunks = chunks.chunks.size();
    traj.steps.reserve(total_chunks + 1);
    traj.memory_history.reserve(total_chunks);

    text::MemoryIndex history;
    std::string memory;                 // m_t, starts empty
    std::optional<std::string> query;   // q_t, starts absent

    for (std::size_t t = 1; t <= total_chunks + 1; ++t) {
        const bool is_final = t == total_chunks + 1;
        StepRecord rec;
        rec.step_index = static_cast<int>(t);
        rec.is_terminal = is_final;
        if (!is_final) rec.chunk = chunks.chunks[t - 1];

        if (config.callback_enabled && query.has_value() && history.size() > 0) {
            rec.retrieved = history.retrieve(*query);
        }
        const std::string recalled = rec.retrieved.found ? rec.retrieved.content : std::string();
        rec.prompt = render_prompt(is_final ? PromptKind::final : PromptKind::intermediate,
                                   sample.question, rec.chunk, memory, recalled);

        policy::StepInputs inputs{sample.question, rec.chunk,          memory,
                                  recalled,        is_final,           static_cast<int>(t),
                                  trajectory_index};
        try {
            rec.raw_output = policy.complete(rec.prompt, inputs);
        } catch (const std::exception& e) {
            throw TrajectoryError("policy call failed at step " + std::to_string(t) + ": " +
                                      e.what(),
                                  std::move(traj.steps));
        }

        if (!is_final) {
            ParsedOutput parsed = parse_step_output(rec.raw_output, config.tags);
            rec.violations = std::move(parsed.violations);
            if (parsed.memory) {
                memory = corpus::truncate_to_last_words(*parsed.memory, config.memory_cap_words);
            }
            // Missing update: memory carries forward unchanged.
            rec.parsed_memory = memory;
            rec.parsed_query = parsed.query;
            query = parsed.query;  // a step that emits no query clears q_t
            history.append(memory);
            traj.memory_history.push_back(memory);
        } else {
            rec.parsed_memory = memory;
            traj.predicted_answer = extract_boxed_answer(rec.raw_output);
            if (!traj.predicted_answer) rec.violations.push_back(FormatViolation::missing_box);
        }
        traj.steps.push_back(std::move(rec));
    }
    return traj;
}

Group run_group(const corpus::QASample& sample,
                const corpus::ChunkSequence& chunks,
                policy::Policy& policy,
                int group_size,
                const RuntimeConfig& config,
                int parallelism) {
    if (group_size < 1) throw std::invalid_argument("group size must be >= 1");
    Group group;
    group.sample_id = sample.id;
    group.trajectories.resize(group_size);
    if (parallelism <= 1) {
        for (int g = 0; g < group_size; ++g) {
            group.trajectories[g] = run_trajectory(sample, chunks, policy, config, g);
        }
        return group;
    }
    std::vector<std::future<Trajectory>> futures(group_size);
    int next = 0;
    while (next < group_size) {
        const int batch_end = std::min(group_size, next + parallelism);
        for (int g = next; g < batch_end; ++g) {
            futures[g] = std::async(std::launch::async, [&, g] {
                return run_trajectory(sample, chunks, policy, config, g);
            });
        }
        for (int g = next; g < batch_end; ++g) group.trajectories[g] = futures[g].get();
        next = batch_end;
    }
    return group;
}

// ---------------------------------------------------------------------------
// Dump / replay
// ---------------------------------------------------------------------------

namespace {

json record_to_json(const std::string& sample_id, int g, const StepRecord& rec) {
    nlohmann::ordered_json row;
    row["sample_id"] = sample_id;
    row["g"] = g;
    row["step_index"] = rec.step_index;
    row["is_terminal"] = rec.is_terminal;
    if (rec.chunk) {
        row["chunk"] = *rec.chunk;
    } else {
        row["chunk"] = nullptr;
    }
    row["retrieved"] = nlohmann::ordered_json{{"found", rec.retrieved.found},
                                              {"memory_index", rec.retrieved.memory_index},
                                              {"content", rec.retrieved.content},
                                              {"score", rec.retrieved.score}};
    row["prompt"] = rec.prompt;
    row["raw_output"] = rec.raw_output;
    row["parsed_memory"] = rec.parsed_memory;
    if (rec.parsed_query) {
        row["parsed_query"] = *rec.parsed_query;
    } else {
        row["parsed_query"] = nullptr;
    }
    auto violations = nlohmann::ordered_json::array();
    for (const auto v : rec.violations) violations.push_back(std::string(to_string(v)));
    row["violations"] = violations;
    return row;
}

StepRecord record_from_json(const json& row) {
    StepRecord rec;
    rec.step_index = row.at("step_index").get<int>();
    rec.is_terminal = row.at("is_terminal").get<bool>();
    if (!row.at("chunk").is_null()) rec.chunk = row.at("chunk").get<std::string>();
    const auto& ret = row.at("retrieved");
    rec.retrieved.found = ret.at("found").get<bool>();
    rec.retrieved.memory_index = ret.at("memory_index").get<std::size_t>();
    rec.retrieved.content = ret.at("content").get<std::string>();
    rec.retrieved.score = ret.at("score").get<double>();
    rec.prompt = row.at("prompt").get<std::string>();
    rec.raw_output = row.at("raw_output").get<std::string>();
    rec.parsed_memory = row.at("parsed_memory").get<std::string>();
    if (!row.at("parsed_query").is_null()) {
        rec.parsed_query = row.at("parsed_query").get<std::string>();
    }
    for (const auto& v : row.at("violations")) {
        rec.violations.push_back(format_violation_from_string(v.get<std::string>()));
    }
    return rec;
}

}  // namespace

void write_trajectory_dump(std::ostream& out, const std::vector<Trajectory>& trajectories) {
    for (const Trajectory& traj : trajectories) {
        for (const StepRecord& rec : traj.steps) {
            out << record_to_json(traj.sample_id, traj.group_index, rec).dump() << "\n";
        }
    }
}

std::vector<Trajectory> read_trajectory_dump(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trajectory dump: " + path);
    // Keyed by (sample_id, g) in first-seen order.
    std::vector<Trajectory> trajectories;
    std::map<std::pair<std::string, int>, std::size_t> index;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error("dump line " + std::to_string(line_number) +
                                     ": bad JSON: " + e.what());
        }
        const std::string sample_id = row.at("sample_id").get<std::string>();
        const int g = row.at("g").get<int>();
        const auto key = std::make_pair(sample_id, g);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, trajectories.size()).first;
            trajectories.push_back(Trajectory{});
            trajectories.back().sample_id = sample_id;
            trajectories.back().group_index = g;
        }
        trajectories[it->second].steps.push_back(record_from_json(row));
    }
    for (Trajectory& traj : trajectories) {
        std::sort(traj.steps.begin(), traj.steps.end(),
                  [](const StepRecord& a, const StepRecord& b) {
                      return a.step_index < b.step_index;
                  });
        for (const StepRecord& rec : traj.steps) {
            if (!rec.is_terminal) traj.memory_history.push_back(rec.parsed_memory);
        }
        if (!traj.steps.empty() && traj.steps.back().is_terminal) {
            traj.predicted_answer = extract_boxed_answer(traj.steps.back().raw_output);
        }
    }
    return trajectories;
}

Trajectory replay_trajectory(const corpus::QASample& sample,
                             const std::vector<std::string>& chunks,
                             const std::vector<std::string>& raw_outputs,
                             const RuntimeConfig& config,
                             int trajectory_index) {
    if (raw_outputs.size() != chunks.size() + 1) {
        throw std::invalid_argument("replay needs exactly one raw output per step (T+1)");
    }
    policy::ReplayPolicy replay(raw_outputs);
    corpus::ChunkSequence seq;
    seq.chunks = chunks;
    seq.chunk_limit = corpus::kDefaultChunkLimit;
    return run_trajectory(sample, seq, replay, config, trajectory_index);
}

}  // namespace memrl::runtime
