#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "memrl/grpo.hpp"
#include "memrl/harness.hpp"
#include "memrl/synthetic.hpp"

namespace {

using namespace memrl;

std::vector<std::size_t> parse_doc_counts(const std::string& csv) {
    std::vector<std::size_t> counts;
    std::stringstream stream(csv);
    std::string item;
    while (std::getline(stream, item, ',')) {
        if (!item.empty()) counts.push_back(std::stoul(item));
    }
    return counts;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    return out;
}

struct CommonOverrides {
    std::string config_path;
    std::string dataset;
    std::string callback;  // "on" | "off" | ""
    std::string mode;
    std::string docs_csv;
    std::string policy_kind;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t chunk_limit = 0;
    std::size_t subset = 0;
    std::size_t memory_cap = std::size_t(-1);

    harness::RunConfig resolve() const {
        harness::RunConfig config;
        if (!config_path.empty()) config = harness::load_config(config_path);
        if (!dataset.empty()) config.dataset = dataset;
        if (callback == "on") config.callback = true;
        if (callback == "off") config.callback = false;
        if (!mode.empty()) config.mode = mode;
        if (!docs_csv.empty()) config.target_doc_counts = parse_doc_counts(docs_csv);
        if (!policy_kind.empty()) config.policy.kind = policy_kind;
        if (seed_set) config.seed = seed;
        if (chunk_limit > 0) config.chunk_limit = chunk_limit;
        if (subset > 0) config.subset_size = subset;
        if (memory_cap != std::size_t(-1)) config.memory_cap_words = memory_cap;
        return config;
    }

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--dataset", dataset, "dataset JSONL path (overrides config)");
        cmd->add_option("--callback", callback, "callback retrieval: on|off")
            ->check(CLI::IsMember({"on", "off"}));
        cmd->add_option("--mode", mode, "context layout: shuffled|distant")
            ->check(CLI::IsMember({"shuffled", "distant"}));
        cmd->add_option("--docs", docs_csv, "comma-separated doc counts");
        cmd->add_option("--policy", policy_kind, "policy kind: mock|distant-oracle|http");
        cmd->add_option("--seed", seed, "run seed")->each([this](const std::string&) {
            seed_set = true;
        });
        cmd->add_option("--chunk-limit", chunk_limit, "max words per chunk");
        cmd->add_option("--subset", subset, "evaluation subset size");
        cmd->add_option("--memory-cap", memory_cap, "memory cap in words (0 = unlimited)");
    }
};

int cmd_evaluate(const CommonOverrides& overrides, const std::string& out_path, bool table) {
    const harness::RunConfig config = overrides.resolve();
    const harness::EvalReport report = harness::evaluate(config);
    if (!out_path.empty()) {
        auto out = open_output(out_path);
        harness::write_report_jsonl(out, report);
    } else {
        harness::write_report_jsonl(std::cout, report);
    }
    if (table) harness::write_report_table(std::cerr, report);
    for (const auto& bucket : report.buckets) {
        if (bucket.failed_count > 0) {
            std::cerr << "warning: " << bucket.failed_count << " sample(s) failed at doc count "
                      << bucket.doc_count << "\n";
            for (const auto& failure : bucket.failures) std::cerr << "  " << failure << "\n";
        }
    }
    return 0;
}

int cmd_rollout(const CommonOverrides& overrides,
                const std::string& out_path,
                const std::string& export_path,
                int group_size_override) {
    harness::RunConfig config = overrides.resolve();
    if (group_size_override > 0) config.group_size = group_size_override;
    const auto samples = harness::subsample(corpus::load_dataset(config.dataset),
                                            config.subset_size, config.seed);
    const std::size_t doc_count =
        config.target_doc_counts.empty() ? 50 : config.target_doc_counts.front();
    auto out = open_output(out_path);
    std::ofstream export_out;
    if (!export_path.empty()) export_out = open_output(export_path);
    const auto rc = harness::runtime_config(config);
    const auto sc = harness::score_config(config);
    for (const auto& sample : samples) {
        const auto layout = corpus::assemble_context(
            sample, doc_count, corpus::layout_mode_from_string(config.mode),
            corpus::mix_seed(config.seed, sample.id, doc_count));
        const auto chunks = corpus::chunk_layout(layout, config.chunk_limit);
        const auto policy = harness::make_policy(config.policy, sample);
        const auto group = runtime::run_group(sample, chunks, *policy, config.group_size, rc,
                                              config.parallelism);
        runtime::write_trajectory_dump(out, group.trajectories);
        if (export_out.is_open()) {
            std::vector<rewards::RewardBreakdown> breakdowns;
            for (const auto& traj : group.trajectories) {
                breakdowns.push_back(rewards::score_trajectory(traj, sample.answers, sc));
            }
            const auto advantages = rewards::group_advantages(breakdowns, config.alpha);
            harness::write_reward_export(export_out, sample.id, breakdowns, advantages);
        }
    }
    return 0;
}

int cmd_score(const CommonOverrides& overrides,
              const std::string& dump_path,
              double alpha,
              const std::string& out_path) {
    harness::RunConfig config = overrides.resolve();
    if (alpha >= 0.0) config.alpha = alpha;
    if (config.dataset.empty()) throw std::runtime_error("score requires --dataset or a config");
    if (!out_path.empty()) {
        auto out = open_output(out_path);
        harness::score_offline(dump_path, config.dataset, config.alpha, config, out);
    } else {
        harness::score_offline(dump_path, config.dataset, config.alpha, config, std::cout);
    }
    return 0;
}

int cmd_gradcheck(int fixtures, double tolerance, std::uint64_t seed, double epsilon, double beta,
                  double step_size, const std::string& report_path) {
    double worst = 0.0;
    std::size_t params = 0;
    std::ofstream report;
    if (!report_path.empty()) report = open_output(report_path);
    for (int i = 0; i < fixtures; ++i) {
        std::mt19937_64 rng(corpus::mix_seed(seed, "gradcheck-dims", i));
        const int group_size = 2 + static_cast<int>(rng() % 3);
        const int chunk_steps = 1 + static_cast<int>(rng() % 3);
        const int vocab = 4 + static_cast<int>(rng() % 13);
        const auto fixture = grpo::make_gradcheck_fixture(
            corpus::mix_seed(seed, "gradcheck", i), group_size, chunk_steps, vocab, 6, epsilon);
        const auto result = grpo::toy_policy_grad_check(fixture, epsilon, beta, step_size);
        worst = std::max(worst, result.max_rel_error);
        params += result.parameters_checked;
        if (report.is_open()) {
            const auto summary = grpo::grpo_objective(grpo::eval_logprobs(fixture),
                                                      fixture.advantages, epsilon, beta);
            report << grpo::to_json_line(summary) << "\n";
        }
    }
    const bool pass = worst < tolerance;
    std::cout << "gradcheck: fixtures=" << fixtures << " parameters=" << params
              << " max_rel_error=" << worst << " tolerance=" << tolerance << " -> "
              << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 1;
}

int cmd_gen_synthetic(const std::string& out_path, int hops, std::size_t docs,
                      std::size_t sample_count, std::uint64_t seed, bool distant,
                      const std::string& layout_out_path) {
    synthetic::SyntheticSpec spec;
    spec.hops = hops;
    spec.doc_count = docs;
    spec.sample_count = sample_count;
    spec.seed = seed;
    const auto samples = synthetic::make_synthetic_samples(spec);

    auto out = open_output(out_path);
    for (const auto& sample : samples) {
        nlohmann::ordered_json row;
        row["id"] = sample.id;
        row["question"] = sample.question;
        row["answers"] = sample.answers;
        auto docs_json = [](const std::vector<corpus::Document>& list) {
            auto arr = nlohmann::ordered_json::array();
            for (const auto& doc : list) arr.push_back({doc.title, doc.body});
            return arr;
        };
        row["evidence_docs"] = docs_json(sample.evidence_docs);
        row["distractor_docs"] = docs_json(sample.distractor_docs);
        out << row.dump() << "\n";
    }

    if (distant) {
        std::ofstream layout_out;
        if (!layout_out_path.empty()) layout_out = open_output(layout_out_path);
        for (const auto& sample : samples) {
            const auto layout = corpus::assemble_context(
                sample, docs, corpus::LayoutMode::distant,
                corpus::mix_seed(seed, sample.id, docs));
            if (layout_out.is_open()) {
                harness::write_layout_export(layout_out, sample.id, "distant", seed, layout);
            }
        }
    }
    std::cerr << "wrote " << samples.size() << " sample(s) to " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"memrl: runtime, reward engine and evaluation harness for callback-augmented "
                 "memory agents over long documents"};
    app.require_subcommand(1);

    CommonOverrides eval_overrides;
    std::string eval_out;
    bool eval_table = false;
    auto* evaluate = app.add_subcommand("evaluate", "context-length evaluation sweep");
    eval_overrides.attach(evaluate);
    evaluate->add_option("--out", eval_out, "report JSONL path (default: stdout)");
    evaluate->add_flag("--table", eval_table, "also print a column table to stderr");

    CommonOverrides rollout_overrides;
    std::string rollout_out;
    std::string rollout_export;
    int rollout_group = 0;
    auto* rollout = app.add_subcommand("rollout", "dump trajectory groups as JSONL");
    rollout_overrides.attach(rollout);
    rollout->add_option("--out", rollout_out, "trajectory dump path")->required();
    rollout->add_option("--export", rollout_export, "also write the live reward/advantage export");
    rollout->add_option("--group-size", rollout_group, "trajectories per sample");

    CommonOverrides score_overrides;
    std::string score_dump;
    std::string score_out;
    double score_alpha = -1.0;
    auto* score = app.add_subcommand("score", "offline scoring of a trajectory dump");
    score_overrides.attach(score);
    score->add_option("--dump", score_dump, "trajectory dump JSONL")->required();
    score->add_option("--alpha", score_alpha, "advantage mixing weight override");
    score->add_option("--out", score_out, "export path (default: stdout)");

    int gc_fixtures = 100;
    double gc_tol = 1e-4;
    std::uint64_t gc_seed = 7;
    double gc_eps = grpo::kDefaultClipRatio;
    double gc_beta = grpo::kDefaultKlCoefficient;
    double gc_h = 1e-5;
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the objective");
    gradcheck->add_option("--fixtures", gc_fixtures, "number of random fixtures");
    gradcheck->add_option("--tol", gc_tol, "max relative error tolerance");
    gradcheck->add_option("--seed", gc_seed, "fixture seed");
    gradcheck->add_option("--eps", gc_eps, "clip ratio");
    gradcheck->add_option("--beta", gc_beta, "KL coefficient");
    gradcheck->add_option("--step-size", gc_h, "finite-difference step");
    std::string gc_report;
    gradcheck->add_option("--report", gc_report, "write per-fixture objective summaries (JSONL)");

    std::string gen_out;
    int gen_hops = 2;
    std::size_t gen_docs = 10;
    std::size_t gen_samples = 32;
    std::uint64_t gen_seed = 4;
    bool gen_distant = false;
    std::string gen_layout_out;
    auto* gen = app.add_subcommand("gen-synthetic", "generate synthetic multi-hop samples");
    gen->add_option("--out", gen_out, "dataset JSONL path")->required();
    gen->add_option("--hops", gen_hops, "evidence chain length");
    gen->add_option("--docs", gen_docs, "documents per sample");
    gen->add_option("--samples", gen_samples, "sample count");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_flag("--distant", gen_distant, "validate distant placement for every sample");
    gen->add_option("--layout-out", gen_layout_out, "write distant layout audit JSONL");

    CLI11_PARSE(app, argc, argv);

    try {
        if (evaluate->parsed()) return cmd_evaluate(eval_overrides, eval_out, eval_table);
        if (rollout->parsed()) {
            return cmd_rollout(rollout_overrides, rollout_out, rollout_export, rollout_group);
        }
        if (score->parsed()) {
            return cmd_score(score_overrides, score_dump, score_alpha, score_out);
        }
        if (gradcheck->parsed()) {
            return cmd_gradcheck(gc_fixtures, gc_tol, gc_seed, gc_eps, gc_beta, gc_h, gc_report);
        }
        if (gen->parsed()) {
            return cmd_gen_synthetic(gen_out, gen_hops, gen_docs, gen_samples, gen_seed,
                                     gen_distant, gen_layout_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
