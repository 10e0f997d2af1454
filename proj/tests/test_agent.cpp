#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "newsagent/agent.hpp"

using namespace newsagent;

namespace {

tool_spec spec(const char* name, const char* desc = "does things") {
    return {name, desc, ""};
}

tool_registry pipeline_registry() {
    tool_registry r;
    for (const char* name : {"search_and_save_news", "summarize_news", "extract_spatial_data",
                             "extract_temporal_data", "visualize_results"})
        r.register_tool(spec(name), [name](const std::string&) {
            return std::string(name) + " done";
        });
    return r;
}

agent_config tiny_config() {
    agent_config cfg;
    cfg.prompt_template = "T:{tools}|N:{tool_names}|Q:{question}|H:{history}";
    return cfg;
}

// completion provider fed from a fixed list
completion_fn scripted(std::vector<std::string> lines) {
    auto shared = std::make_shared<std::pair<std::vector<std::string>, size_t>>(
        std::move(lines), 0);
    return [shared](const std::string&) {
        if (shared->second >= shared->first.size())
            throw std::runtime_error("script exhausted");
        return shared->first[shared->second++];
    };
}

}  // namespace

TEST_CASE("tool registration and lookup", "[agent]") {
    tool_registry r;
    r.register_tool(spec("summarize_news"), [](const std::string&) { return "ok"; });
    CHECK(r.size() == 1);
    CHECK(r.has("summarize_news"));
    CHECK_FALSE(r.has("Summarize_News"));  // case-sensitive

    CHECK_THROWS_AS(
        r.register_tool(spec("summarize_news"), [](const std::string&) { return ""; }),
        duplicate_tool);
    CHECK_THROWS_AS(r.register_tool(spec("has space"), [](const std::string&) { return ""; }),
                    std::invalid_argument);
    CHECK_THROWS_AS(r.register_tool(spec(""), [](const std::string&) { return ""; }),
                    std::invalid_argument);
}

TEST_CASE("five pipeline tools render in declaration order", "[agent]") {
    tool_registry r = pipeline_registry();
    CHECK(r.size() == 5);
    CHECK(render_tool_names(r) ==
          "search_and_save_news, summarize_news, extract_spatial_data, extract_temporal_data, "
          "visualize_results");

    // full template expansion computed by hand
    agent_config cfg = tiny_config();
    std::string prompt = render_prompt(cfg, r, "Q?", {});
    std::string expected_tools =
        "search_and_save_news: does things\nsummarize_news: does things\n"
        "extract_spatial_data: does things\nextract_temporal_data: does things\n"
        "visualize_results: does things";
    CHECK(prompt == "T:" + expected_tools +
                        "|N:search_and_save_news, summarize_news, extract_spatial_data, "
                        "extract_temporal_data, visualize_results|Q:Q?|H:");
}

TEST_CASE("agent config validation", "[agent]") {
    agent_config cfg = tiny_config();
    CHECK_NOTHROW(validate_agent_config(cfg));
    cfg.prompt_template = "T:{tools}|Q:{question}|H:{history}";  // missing {tool_names}
    CHECK_THROWS_AS(validate_agent_config(cfg), std::invalid_argument);
    cfg.prompt_template = "{tools}{tools}{tool_names}{question}{history}";  // repeated
    CHECK_THROWS_AS(validate_agent_config(cfg), std::invalid_argument);
    cfg = tiny_config();
    cfg.max_steps = 0;
    CHECK_THROWS_AS(validate_agent_config(cfg), std::invalid_argument);
}

TEST_CASE("parse_action recognizes the block grammar", "[agent]") {
    auto r = parse_action(
        "Thought: need news\nAction: search_and_save_news\nAction Input: Alzheimer's");
    auto* act = std::get_if<parsed_action>(&r);
    REQUIRE(act);
    CHECK(act->thought == "need news");
    CHECK(act->action == "search_and_save_news");
    CHECK(act->action_input == "Alzheimer's");

    auto fin = parse_action("Thought: done\nFinal Answer: plots saved");
    auto* f = std::get_if<final_answer>(&fin);
    REQUIRE(f);
    CHECK(f->thought == "done");
    CHECK(f->answer == "plots saved");

    CHECK(std::holds_alternative<parse_failure>(parse_action("I think we should search")));
}

TEST_CASE("parse_action ignores text after the first complete block", "[agent]") {
    auto r = parse_action(
        "Thought: t\nAction: a\nAction Input: i\nObservation: invented by the model\n"
        "Thought: sneaky second block\nFinal Answer: nope");
    auto* act = std::get_if<parsed_action>(&r);
    REQUIRE(act);
    CHECK(act->action == "a");
    CHECK(act->action_input == "i");

    // a Final Answer after a dangling Action does not rescue the block
    auto bad = parse_action("Thought: t\nAction: a\nFinal Answer: x");
    CHECK(std::holds_alternative<parse_failure>(bad));
}

TEST_CASE("parse_action malformed classes", "[agent]") {
    // no markers
    CHECK(std::holds_alternative<parse_failure>(parse_action("just prose, no structure")));
    // action without input
    CHECK(std::holds_alternative<parse_failure>(parse_action("Thought: x\nAction: tool")));
    // premature end of text
    CHECK(std::holds_alternative<parse_failure>(parse_action("Thought: unfinished")));
    CHECK(std::holds_alternative<parse_failure>(parse_action("")));
}

TEST_CASE("parse_action trims field values and tolerates indentation", "[agent]") {
    auto r = parse_action("  Thought:   padded  \n  Action:  tool_x \n  Action Input:  in  ");
    auto* act = std::get_if<parsed_action>(&r);
    REQUIRE(act);
    CHECK(act->thought == "padded");
    CHECK(act->action == "tool_x");
    CHECK(act->action_input == "in");
}

TEST_CASE("serialize then parse is identity on newline-free values", "[agent]") {
    std::mt19937_64 rng(42);
    auto random_value = [&](size_t max_len) {
        static const std::string alphabet =
            "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 :!?.,'-_()[]";
        size_t len = rng() % max_len;
        std::string s;
        for (size_t i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
        // grammar values are trimmed by definition
        size_t a = s.find_first_not_of(' ');
        size_t b = s.find_last_not_of(' ');
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    for (int i = 0; i < 200; ++i) {
        parsed_action original{random_value(60), random_value(20), random_value(80)};
        auto r = parse_action(serialize_action(original));
        auto* back = std::get_if<parsed_action>(&r);
        REQUIRE(back);
        CHECK(back->thought == original.thought);
        CHECK(back->action == original.action);
        CHECK(back->action_input == original.action_input);
    }
    for (int i = 0; i < 50; ++i) {
        final_answer original{random_value(40), random_value(120)};
        auto r = parse_action(serialize_final(original));
        auto* back = std::get_if<final_answer>(&r);
        REQUIRE(back);
        CHECK(back->thought == original.thought);
        CHECK(back->answer == original.answer);
    }
}

TEST_CASE("render_prompt renders history blocks in order", "[agent]") {
    tool_registry r = pipeline_registry();
    agent_config cfg = tiny_config();

    std::vector<agent_step> history;
    history.push_back({0, "think1", "summarize_news", "all", "obs1"});
    std::string prompt = render_prompt(cfg, r, "Q?", history);
    CHECK(prompt.find("Thought: think1\nAction: summarize_news\nAction Input: all\n"
                      "Observation: obs1") != std::string::npos);

    // exactly one Observation: line for one completed step
    size_t count = 0, pos = 0;
    while ((pos = prompt.find("Observation:", pos)) != std::string::npos) {
        ++count;
        pos += 1;
    }
    CHECK(count == 1);
}

TEST_CASE("placeholder-like text in values is not re-expanded", "[agent]") {
    tool_registry r = pipeline_registry();
    agent_config cfg = tiny_config();
    std::string prompt = render_prompt(cfg, r, "what does {history} mean?", {});
    CHECK(prompt.find("Q:what does {history} mean?") != std::string::npos);
    CHECK(prompt.find("H:") == prompt.size() - 2);  // history slot stayed empty

    CHECK(expand_template("{a} and {b} and {missing}", {{"{a}", "1"}, {"{b}", "2"}}) ==
          "1 and 2 and {missing}");
}

TEST_CASE("render_prompt includes the question and all tool names", "[agent]") {
    tool_registry r = pipeline_registry();
    agent_config cfg = tiny_config();
    const std::string question =
        "Can you help me to know something new about Alzheimer's Disease and maybe draw some "
        "plots for me?";
    std::string prompt = render_prompt(cfg, r, question, {});
    CHECK(prompt.find(question) != std::string::npos);
    for (const auto& s : r.specs()) CHECK(prompt.find(s.name) != std::string::npos);
}

TEST_CASE("history over the token budget drops oldest steps pairwise", "[agent]") {
    tool_registry r = pipeline_registry();
    agent_config cfg = tiny_config();
    std::vector<agent_step> history;
    for (int i = 0; i < 6; ++i)
        history.push_back({i, "marker_" + std::to_string(i), "summarize_news", "x",
                           std::string(300, 'o')});

    cfg.prompt_token_budget = 1 + estimate_tokens(render_prompt(tiny_config(), r, "Q?", {})) +
                              2 * estimate_tokens(render_step(history[0]));
    std::string prompt = render_prompt(cfg, r, "Q?", history);
    CHECK(prompt.find("marker_0") == std::string::npos);
    CHECK(prompt.find("marker_1") == std::string::npos);
    CHECK(prompt.find("marker_2") == std::string::npos);
    CHECK(prompt.find("marker_3") == std::string::npos);
    CHECK(prompt.find("marker_4") != std::string::npos);
    CHECK(prompt.find("marker_5") != std::string::npos);

    // the two newest steps are always kept even if still over budget
    cfg.prompt_token_budget = 1;
    prompt = render_prompt(cfg, r, "Q?", history);
    CHECK(prompt.find("marker_4") != std::string::npos);
    CHECK(prompt.find("marker_5") != std::string::npos);
}

TEST_CASE("run_loop terminates immediately on a final answer", "[agent]") {
    tool_registry r = pipeline_registry();
    agent_config cfg = tiny_config();
    auto t = run_loop(cfg, r, scripted({"Thought: done\nFinal Answer: nothing to do"}), "Q?");
    REQUIRE(t.steps.size() == 1);
    CHECK(t.terminated_reason == stop_reason::final_answer);
    CHECK(t.final_answer == "nothing to do");
    CHECK(t.steps[0].action == std::string(k_final_answer_action));
    CHECK(t.steps[0].observation.empty());
}

TEST_CASE("run_loop executes the full pipeline order", "[agent]") {
    tool_registry r = pipeline_registry();
    agent_config cfg = tiny_config();
    auto t = run_loop(
        cfg, r,
        scripted({
            "Thought: get news\nAction: search_and_save_news\nAction Input: alzheimer",
            "Thought: summarize\nAction: summarize_news\nAction Input: saved",
            "Thought: places\nAction: extract_spatial_data\nAction Input: saved",
            "Thought: times\nAction: extract_temporal_data\nAction Input: saved",
            "Thought: plots\nAction: visualize_results\nAction Input: out",
            "Thought: finished\nFinal Answer: plots saved",
        }),
        "Q?");
    REQUIRE(t.steps.size() == 6);
    CHECK(t.terminated_reason == stop_reason::final_answer);
    const char* expected[] = {"search_and_save_news", "summarize_news", "extract_spatial_data",
                              "extract_temporal_data", "visualize_results"};
    for (int i = 0; i < 5; ++i) {
        CHECK(t.steps[i].action == expected[i]);
        CHECK(t.steps[i].observation == std::string(expected[i]) + " done");
    }
    CHECK(t.final_answer == "plots saved");
}

TEST_CASE("run_loop stops after the consecutive parse failure limit", "[agent]") {
    tool_registry r = pipeline_registry();
    agent_config cfg = tiny_config();
    int calls = 0;
    auto garbage = [&](const std::string&) {
        ++calls;
        return "complete nonsense " + std::to_string(calls);
    };
    auto t = run_loop(cfg, r, garbage, "Q?");
    CHECK(calls == 3);  // exactly max_consecutive_parse_failures attempts
    REQUIRE(t.steps.size() == 3);
    CHECK(t.terminated_reason == stop_reason::parse_failure_limit);
    for (const auto& s : t.steps) {
        CHECK(s.action.empty());
        CHECK(s.observation == std::string(k_parse_retry_observation));
    }
}

TEST_CASE("a successful parse resets the failure counter", "[agent]") {
    tool_registry r = pipeline_registry();
    agent_config cfg = tiny_config();
    auto t = run_loop(cfg, r,
                      scripted({
                          "garbage one",
                          "garbage two",
                          "Thought: ok\nAction: summarize_news\nAction Input: all",
                          "garbage three",
                          "garbage four",
                          "garbage five",
                      }),
                      "Q?");
    CHECK(t.steps.size() == 6);
    CHECK(t.terminated_reason == stop_reason::parse_failure_limit);
}

TEST_CASE("unknown tools and tool errors become observations", "[agent]") {
    tool_registry r = pipeline_registry();
    r.register_tool(spec("explodes"), [](const std::string&) -> std::string {
        throw std::runtime_error("boom");
    });
    agent_config cfg = tiny_config();
    auto t = run_loop(cfg, r,
                      scripted({
                          "Thought: x\nAction: not_a_tool\nAction Input: y",
                          "Thought: x\nAction: explodes\nAction Input: y",
                          "Thought: x\nFinal Answer: survived",
                      }),
                      "Q?");
    REQUIRE(t.steps.size() == 3);
    CHECK(t.steps[0].observation.rfind("ERROR: unknown tool", 0) == 0);
    CHECK(t.steps[1].observation == "ERROR: boom");
    CHECK(t.terminated_reason == stop_reason::final_answer);
}

TEST_CASE("run_loop caps at max_steps", "[agent]") {
    tool_registry r = pipeline_registry();
    agent_config cfg = tiny_config();
    cfg.max_steps = 4;
    auto forever = [](const std::string&) {
        return std::string("Thought: loop\nAction: summarize_news\nAction Input: again");
    };
    auto t = run_loop(cfg, r, forever, "Q?");
    CHECK(t.steps.size() == 4);
    CHECK(t.terminated_reason == stop_reason::max_steps);
    CHECK_FALSE(t.final_answer);
}

TEST_CASE("run_loop requires a non-empty registry", "[agent]") {
    tool_registry empty;
    agent_config cfg = tiny_config();
    CHECK_THROWS_AS(run_loop(cfg, empty, scripted({"x"}), "Q?"), std::invalid_argument);
}

TEST_CASE("run_loop with a replay backend is deterministic", "[agent]") {
    std::vector<replay_entry> entries{
        {"", "Thought: a\nAction: summarize_news\nAction Input: all"},
        {"", "Thought: b\nFinal Answer: done"},
    };
    auto run_once = [&] {
        tool_registry r = pipeline_registry();
        agent_config cfg = tiny_config();
        auto backend = std::make_shared<replay_backend>(entries, replay_mode::strict_sequence);
        completion_fn llm = [backend](const std::string& prompt) {
            completion_request req;
            req.model = "m";
            req.messages.push_back({"user", prompt});
            return backend->complete(req);
        };
        return transcript_to_jsonl(run_loop(cfg, r, llm, "Q?"));
    };
    CHECK(run_once() == run_once());
}

TEST_CASE("transcript persists as one object per line and round-trips", "[agent]") {
    agent_transcript t;
    t.question = "Q?";
    t.steps.push_back({0, "think", "summarize_news", "all", "obs"});
    t.steps.push_back({1, "done", std::string(k_final_answer_action), "answer", ""});
    t.final_answer = "answer";
    t.terminated_reason = stop_reason::final_answer;

    auto dir = std::filesystem::temp_directory_path() / "na_agent_test";
    std::filesystem::create_directories(dir);
    write_transcript(dir / "t.jsonl", t);

    std::string text = read_file(dir / "t.jsonl");
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);  // question + 2 steps + result

    agent_transcript back = read_transcript(dir / "t.jsonl");
    CHECK(back.question == t.question);
    REQUIRE(back.steps.size() == 2);
    CHECK(back.steps[1].action == std::string(k_final_answer_action));
    CHECK(back.final_answer == t.final_answer);
    CHECK(back.terminated_reason == t.terminated_reason);
    std::filesystem::remove_all(dir);
}

TEST_CASE("transcript invariants hold across scripted runs", "[agent]") {
    // every non-final step names a registered tool or is a recorded failure
    tool_registry r = pipeline_registry();
    agent_config cfg = tiny_config();
    auto t = run_loop(cfg, r,
                      scripted({
                          "Thought: x\nAction: summarize_news\nAction Input: a",
                          "mush",
                          "Thought: x\nAction: nope\nAction Input: b",
                          "Thought: f\nFinal Answer: end",
                      }),
                      "Q?");
    CHECK(t.steps.size() <= static_cast<size_t>(cfg.max_steps));
    for (const auto& s : t.steps) {
        bool final_step = s.action == std::string(k_final_answer_action);
        bool failure = s.action.empty() || s.observation.rfind("ERROR:", 0) == 0;
        CHECK((final_step || failure || r.has(s.action)));
        CHECK(s.observation.empty() == final_step);
    }
}
