#pragma once

// Chain-of-thought agent loop: render the prompt, call the model, parse the
// chosen action, dispatch to a registered tool, feed the observation back,
// stop on a final answer.

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "newsagent/common.hpp"
#include "newsagent/llm.hpp"

namespace newsagent {

struct duplicate_tool : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Action name recorded on the terminal step of a transcript.
inline constexpr std::string_view k_final_answer_action = "final_answer";

// Observation fed back after a completion the grammar could not parse.
inline constexpr std::string_view k_parse_retry_observation =
    "Invalid format; respond with Thought/Action/Action Input or Final Answer.";

struct tool_spec {
    std::string name;         // unique, no whitespace
    std::string description;  // one line, shown to the model
    std::string input_schema; // free-text description of the expected input
};

using tool_handler = std::function<std::string(const std::string& input)>;

class tool_registry {
public:
    void register_tool(tool_spec spec, tool_handler handler) {
        if (spec.name.empty() || contains_whitespace(spec.name))
            throw std::invalid_argument("tool name must be non-empty without whitespace: '" +
                                        spec.name + "'");
        if (has(spec.name)) throw duplicate_tool("tool already registered: " + spec.name);
        specs_.push_back(std::move(spec));
        handlers_.push_back(std::move(handler));
    }

    bool has(std::string_view name) const {
        for (const auto& s : specs_)
            if (s.name == name) return true;
        return false;
    }

    size_t size() const { return specs_.size(); }
    bool empty() const { return specs_.empty(); }

    // Declaration order; this is the order names render into prompts.
    const std::vector<tool_spec>& specs() const { return specs_; }

    std::string dispatch(std::string_view name, const std::string& input) const {
        for (size_t i = 0; i < specs_.size(); ++i)
            if (specs_[i].name == name) return handlers_[i](input);
        throw std::invalid_argument("unknown tool '" + std::string(name) + "'");
    }

private:
    std::vector<tool_spec> specs_;
    std::vector<tool_handler> handlers_;
};

struct agent_config {
    int max_steps = 15;
    int max_consecutive_parse_failures = 3;
    // Must contain {tools} {tool_names} {question} {history} exactly once each.
    std::string prompt_template;
    // Full-prompt token ceiling; oldest history steps are dropped pairwise
    // once the rendered estimate exceeds it (the 4096-token class of models,
    // minus a 512-token response reserve).
    int prompt_token_budget = 3584;
};

inline void validate_agent_config(const agent_config& cfg) {
    if (cfg.max_steps <= 0) throw std::invalid_argument("max_steps must be positive");
    if (cfg.max_consecutive_parse_failures <= 0)
        throw std::invalid_argument("max_consecutive_parse_failures must be positive");
    for (std::string_view ph : {"{tools}", "{tool_names}", "{question}", "{history}"}) {
        size_t first = cfg.prompt_template.find(ph);
        if (first == std::string::npos)
            throw std::invalid_argument("prompt template missing placeholder " + std::string(ph));
        if (cfg.prompt_template.find(ph, first + 1) != std::string::npos)
            throw std::invalid_argument("prompt template repeats placeholder " + std::string(ph));
    }
}

struct agent_step {
    int index = 0;
    std::string thought;       // raw completion text when the step is a parse failure
    std::string action;        // tool name, final_answer marker, or "" on parse failure
    std::string action_input;
    std::string observation;   // empty iff this is the final-answer step
};

enum class stop_reason { final_answer, max_steps, parse_failure_limit };

inline std::string to_string(stop_reason r) {
    switch (r) {
        case stop_reason::final_answer: return "final_answer";
        case stop_reason::max_steps: return "max_steps";
        case stop_reason::parse_failure_limit: return "parse_failure_limit";
    }
    return "?";
}

inline std::optional<stop_reason> stop_reason_from_string(std::string_view s) {
    if (s == "final_answer") return stop_reason::final_answer;
    if (s == "max_steps") return stop_reason::max_steps;
    if (s == "parse_failure_limit") return stop_reason::parse_failure_limit;
    return std::nullopt;
}

struct agent_transcript {
    std::string question;
    std::vector<agent_step> steps;
    std::optional<std::string> final_answer;
    stop_reason terminated_reason = stop_reason::max_steps;
};

// ---------------------------------------------------------------------------
// action grammar

struct parsed_action {
    std::string thought;
    std::string action;
    std::string action_input;
};

struct final_answer {
    std::string thought;
    std::string answer;
};

struct parse_failure {
    std::string message;
};

using action_parse_result = std::variant<parsed_action, final_answer, parse_failure>;

inline std::string serialize_action(const parsed_action& a) {
    return "Thought: " + a.thought + "\nAction: " + a.action + "\nAction Input: " +
           a.action_input;
}

inline std::string serialize_final(const final_answer& f) {
    return "Thought: " + f.thought + "\nFinal Answer: " + f.answer;
}

// Recognizes the block grammar: lines beginning "Thought:", then either
// ("Action:" followed by "Action Input:") or "Final Answer:". Field values
// are trimmed; anything after the first complete block is ignored so the
// model cannot invent its own observations.
inline action_parse_result parse_action(std::string_view completion) {
    auto value_after = [](std::string_view line, std::string_view marker) {
        return trim(line.substr(marker.size()));
    };

    std::string thought;
    std::optional<std::string> action;
    std::string action_input;
    bool saw_action_input = false;

    size_t pos = 0;
    while (pos <= completion.size()) {
        size_t eol = completion.find('\n', pos);
        std::string_view line = completion.substr(
            pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        std::string_view stripped = line;
        while (!stripped.empty() && std::isspace(static_cast<unsigned char>(stripped.front())))
            stripped.remove_prefix(1);

        if (stripped.starts_with("Final Answer:") && !action) {
            return final_answer{thought, value_after(stripped, "Final Answer:")};
        } else if (stripped.starts_with("Thought:") && !action) {
            thought = value_after(stripped, "Thought:");
        } else if (stripped.starts_with("Action Input:")) {
            if (action) {
                action_input = value_after(stripped, "Action Input:");
                saw_action_input = true;
                break;  // first complete block wins
            }
        } else if (stripped.starts_with("Action:") && !action) {
            action = value_after(stripped, "Action:");
        }

        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }

    if (action && saw_action_input) return parsed_action{thought, *action, action_input};
    if (action) return parse_failure{"'Action:' line without a following 'Action Input:' line"};
    return parse_failure{"no 'Action:' or 'Final Answer:' line found"};
}

// ---------------------------------------------------------------------------
// prompt rendering

inline std::string render_tool_lines(const tool_registry& registry) {
    std::string out;
    for (const auto& s : registry.specs()) {
        if (!out.empty()) out += '\n';
        out += s.name + ": " + s.description;
        if (!s.input_schema.empty()) out += " Input: " + s.input_schema;
    }
    return out;
}

inline std::string render_tool_names(const tool_registry& registry) {
    std::string out;
    for (const auto& s : registry.specs()) {
        if (!out.empty()) out += ", ";
        out += s.name;
    }
    return out;
}

inline std::string render_step(const agent_step& step) {
    if (step.action.empty()) {
        // Parse failure: echo the model output verbatim, then the corrective
        // observation.
        return step.thought + "\nObservation: " + step.observation;
    }
    if (step.action == k_final_answer_action)
        return "Thought: " + step.thought + "\nFinal Answer: " +
               (step.action_input.empty() ? step.observation : step.action_input);
    return "Thought: " + step.thought + "\nAction: " + step.action +
           "\nAction Input: " + step.action_input + "\nObservation: " + step.observation;
}

inline std::string render_history(const std::vector<agent_step>& history, size_t skip = 0) {
    std::string out;
    for (size_t i = skip; i < history.size(); ++i) {
        if (!out.empty()) out += '\n';
        out += render_step(history[i]);
    }
    return out;
}

// Single-pass placeholder substitution: placeholder-like text inside the
// substituted values stays literal.
inline std::string expand_template(
    std::string_view tmpl,
    const std::vector<std::pair<std::string_view, std::string_view>>& values) {
    std::string out;
    out.reserve(tmpl.size());
    size_t pos = 0;
    while (pos < tmpl.size()) {
        size_t brace = tmpl.find('{', pos);
        if (brace == std::string_view::npos) {
            out += tmpl.substr(pos);
            break;
        }
        out += tmpl.substr(pos, brace - pos);
        bool matched = false;
        for (const auto& [name, value] : values) {
            if (tmpl.substr(brace, name.size()) == name) {
                out += value;
                pos = brace + name.size();
                matched = true;
                break;
            }
        }
        if (!matched) {
            out += '{';
            pos = brace + 1;
        }
    }
    return out;
}

// Expands the template; history is rendered verbatim until the prompt token
// estimate exceeds the budget, then the oldest steps are dropped two at a
// time.
inline std::string render_prompt(const agent_config& config, const tool_registry& registry,
                                 const std::string& question,
                                 const std::vector<agent_step>& history) {
    const std::string tools = render_tool_lines(registry);
    const std::string names = render_tool_names(registry);
    auto expand = [&](size_t skip) {
        return expand_template(config.prompt_template, {{"{tools}", tools},
                                                        {"{tool_names}", names},
                                                        {"{question}", question},
                                                        {"{history}", render_history(history, skip)}});
    };
    size_t skip = 0;
    std::string prompt = expand(skip);
    while (estimate_tokens(prompt) > config.prompt_token_budget && history.size() - skip > 2) {
        skip += 2;
        prompt = expand(skip);
    }
    return prompt;
}

// ---------------------------------------------------------------------------
// the loop

// Runs the loop until a final answer, the step cap, or a run of consecutive
// parse failures. Tool errors and unknown tools become "ERROR: ..."
// observations and the loop keeps thinking; only backend failures propagate.
inline agent_transcript run_loop(const agent_config& config, const tool_registry& registry,
                                 const completion_fn& llm, const std::string& question) {
    validate_agent_config(config);
    if (registry.empty()) throw std::invalid_argument("tool registry is empty");

    agent_transcript transcript;
    transcript.question = question;
    int consecutive_failures = 0;

    while (static_cast<int>(transcript.steps.size()) < config.max_steps) {
        const std::string prompt = render_prompt(config, registry, question, transcript.steps);
        const std::string completion = llm(prompt);

        agent_step step;
        step.index = static_cast<int>(transcript.steps.size());

        action_parse_result parsed = parse_action(completion);
        if (std::holds_alternative<parse_failure>(parsed)) {
            step.thought = completion;
            step.observation = std::string(k_parse_retry_observation);
            transcript.steps.push_back(std::move(step));
            if (++consecutive_failures >= config.max_consecutive_parse_failures) {
                transcript.terminated_reason = stop_reason::parse_failure_limit;
                return transcript;
            }
            continue;
        }
        consecutive_failures = 0;

        if (auto* fin = std::get_if<final_answer>(&parsed)) {
            step.thought = fin->thought;
            step.action = std::string(k_final_answer_action);
            step.action_input = fin->answer;
            transcript.steps.push_back(std::move(step));
            transcript.final_answer = fin->answer;
            transcript.terminated_reason = stop_reason::final_answer;
            return transcript;
        }

        const auto& act = std::get<parsed_action>(parsed);
        step.thought = act.thought;
        step.action = act.action;
        step.action_input = act.action_input;
        if (!registry.has(act.action)) {
            step.observation = "ERROR: unknown tool '" + act.action + "'";
        } else {
            try {
                step.observation = registry.dispatch(act.action, act.action_input);
            } catch (const std::exception& e) {
                step.observation = std::string("ERROR: ") + e.what();
            }
            // A non-final step always carries a non-empty observation.
            if (step.observation.empty()) step.observation = "(no output)";
        }
        transcript.steps.push_back(std::move(step));
    }

    transcript.terminated_reason = stop_reason::max_steps;
    return transcript;
}

// ---------------------------------------------------------------------------
// transcript persistence: one JSON object per line (question, steps, result)

inline std::string transcript_to_jsonl(const agent_transcript& t) {
    std::string out;
    out += nlohmann::json{{"type", "question"}, {"question", t.question}}.dump();
    out += '\n';
    for (const auto& s : t.steps) {
        out += nlohmann::json{{"type", "step"},
                              {"index", s.index},
                              {"thought", s.thought},
                              {"action", s.action},
                              {"action_input", s.action_input},
                              {"observation", s.observation}}
                   .dump();
        out += '\n';
    }
    nlohmann::json result{{"type", "result"},
                          {"terminated_reason", to_string(t.terminated_reason)}};
    if (t.final_answer) result["final_answer"] = *t.final_answer;
    out += result.dump();
    out += '\n';
    return out;
}

inline void write_transcript(const std::filesystem::path& path, const agent_transcript& t) {
    write_file(path, transcript_to_jsonl(t));
}

inline agent_transcript read_transcript(const std::filesystem::path& path) {
    agent_transcript t;
    for (const auto& line : read_lines(path)) {
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        const std::string type = j.at("type").get<std::string>();
        if (type == "question") {
            t.question = j.at("question").get<std::string>();
        } else if (type == "step") {
            agent_step s;
            s.index = j.at("index").get<int>();
            s.thought = j.at("thought").get<std::string>();
            s.action = j.at("action").get<std::string>();
            s.action_input = j.at("action_input").get<std::string>();
            s.observation = j.at("observation").get<std::string>();
            t.steps.push_back(std::move(s));
        } else if (type == "result") {
            auto reason = stop_reason_from_string(j.at("terminated_reason").get<std::string>());
            if (!reason) throw io_error("bad terminated_reason in transcript");
            t.terminated_reason = *reason;
            if (j.contains("final_answer"))
                t.final_answer = j.at("final_answer").get<std::string>();
        }
    }
    return t;
}

}  // namespace newsagent
