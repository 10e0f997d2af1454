// newsagent command line: autonomous agent mode plus one subcommand per
// pipeline stage. Configuration/IO faults exit nonzero; agent reasoning
// failures are data (recorded in the transcript, exit 0).

#include <cstdlib>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "newsagent/config.hpp"
#include "newsagent/llm_http.hpp"
#include "newsagent/pipeline.hpp"

namespace {

using namespace newsagent;

struct cli_overrides {
    std::string config_path = "config/newsagent.ini";
    std::string data_dir;
    std::string output_dir;
    std::string backend;
    std::string replay_path;
    std::optional<std::uint64_t> seed;
};

run_config load_config(const cli_overrides& o) {
    run_config cfg = load_run_config(o.config_path);
    if (!o.data_dir.empty()) cfg.data_dir = o.data_dir;
    if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
    if (!o.backend.empty()) cfg.backend = o.backend;
    if (!o.replay_path.empty()) cfg.replay_path = o.replay_path;
    if (o.seed) cfg.lda.seed = *o.seed;
    if (cfg.backend == "replay" && cfg.replay_path.empty())
        throw config_error("backend=replay requires --replay or replay_path in the config");
    if (cfg.backend == "http" && cfg.endpoint_url.empty())
        throw config_error("backend=http requires endpoint_url in the config");
    return cfg;
}

std::shared_ptr<completion_backend> make_cli_backend(const run_config& cfg) {
    if (cfg.backend == "replay")
        return std::make_shared<replay_backend>(load_replay_entries(cfg.replay_path),
                                                replay_mode::strict_sequence);
    http_backend_options opts;
    opts.endpoint_url = cfg.endpoint_url;
    if (const char* key = std::getenv(cfg.api_key_env.c_str())) opts.api_key = key;
    return std::make_shared<http_backend>(std::move(opts));
}

fetch_transport make_cli_transport(const run_config& cfg) {
    if (cfg.fetch_mode == "file") return make_file_transport(cfg.fetch_root);
    return [](const std::string& url) -> fetch_response {
        auto parts = parse_url(url);
        if (!parts) return {0, "", "unparseable url: " + url};
        httplib::Client client(parts->scheme + "://" + parts->authority());
        client.set_follow_location(true);
        client.set_read_timeout(std::chrono::seconds(30));
        std::string target = parts->path;
        if (!parts->query.empty()) target += "?" + parts->query;
        auto res = client.Get(target);
        if (!res) return {0, "", "transport error: " + httplib::to_string(res.error())};
        return {res->status, res->body, ""};
    };
}

void print_report(const run_report& r) {
    std::cout << "articles_ingested:   " << r.articles_ingested << "\n"
              << "articles_summarized: " << r.articles_summarized << "\n"
              << "mentions_found:      " << r.mentions_found << "\n"
              << "undated_excluded:    " << r.undated_excluded << "\n"
              << "llm_calls:           " << r.llm_calls << "\n";
    for (const auto& o : r.outputs) std::cout << "output: " << o << "\n";
    if (!r.transcript_path.empty()) std::cout << "transcript: " << r.transcript_path << "\n";
}

int run_stage(const cli_overrides& overrides, const std::string& stage) {
    run_config cfg = load_config(overrides);
    pipeline pipe(cfg, make_cli_backend(cfg), make_cli_transport(cfg));
    std::string observation;
    if (stage == "ingest") observation = pipe.run_ingest();
    else if (stage == "summarize") observation = pipe.run_summarize();
    else if (stage == "geoparse") observation = pipe.run_geoparse();
    else if (stage == "lda") observation = pipe.run_lda();
    else if (stage == "plot") observation = pipe.run_plot();
    else throw config_error("unknown stage: " + stage);
    pipe.finalize();
    std::cout << observation << "\n";
    print_report(pipe.report());
    return 0;
}

int run_agent_cmd(const cli_overrides& overrides, const std::string& question) {
    run_config cfg = load_config(overrides);
    pipeline pipe(cfg, make_cli_backend(cfg), make_cli_transport(cfg));
    agent_transcript transcript = pipe.run_agent(question);
    pipe.finalize();
    for (const auto& step : transcript.steps) {
        std::cout << "[step " << step.index << "] ";
        if (step.action.empty()) std::cout << "(unparseable completion)";
        else std::cout << step.action;
        if (!step.action_input.empty()) std::cout << " <- " << step.action_input;
        std::cout << "\n";
        if (!step.observation.empty()) std::cout << "  " << step.observation << "\n";
    }
    std::cout << "terminated: " << to_string(transcript.terminated_reason) << "\n";
    if (transcript.final_answer) std::cout << "final answer: " << *transcript.final_answer << "\n";
    print_report(pipe.report());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"autonomous news collection, summarization and trend analysis"};
    app.require_subcommand(1);

    cli_overrides overrides;
    std::string question =
        "Can you help me to know something new about Alzheimer's Disease and maybe draw some "
        "plots for me?";

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", overrides.config_path, "configuration file");
        cmd->add_option("--data-dir", overrides.data_dir, "override the data directory");
        cmd->add_option("--output-dir", overrides.output_dir, "override the output directory");
        cmd->add_option("--backend", overrides.backend, "completion backend: http or replay");
        cmd->add_option("--replay", overrides.replay_path, "replay script path");
        cmd->add_option("--seed", [&](const CLI::results_t& res) {
            overrides.seed = std::stoull(res[0]);
            return true;
        }, "override the topic model seed")->expected(1);
    };

    CLI::App* agent = app.add_subcommand("agent", "run the autonomous agent loop");
    agent->add_option("--question", question, "the question handed to the agent");
    add_common(agent);

    for (const char* name : {"ingest", "summarize", "geoparse", "lda", "plot"})
        add_common(app.add_subcommand(name, std::string("run the ") + name + " stage"));

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("agent")) return run_agent_cmd(overrides, question);
        for (const char* name : {"ingest", "summarize", "geoparse", "lda", "plot"})
            if (app.got_subcommand(name)) return run_stage(overrides, name);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}
