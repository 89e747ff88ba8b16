#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lqe/ingest/store.hpp"

namespace lqe::gateway {

struct PromptContext {
    std::string application;
    /// Label name -> a few known values, both sorted.
    std::vector<std::pair<std::string, std::vector<std::string>>> labels;
    std::vector<std::string> sample_lines;
    std::string cheat_sheet;
    std::size_t max_sample_lines = 20;
};

/// The LogQL summary embedded in prompts by default.
std::string_view default_cheat_sheet();

/// Label names and up to `max_values` values each, plus `max_lines` lines
/// picked at even intervals from the time-ordered corpus.
PromptContext prompt_context_from_store(const ingest::LogStore& store, std::size_t max_lines = 20,
                                        std::size_t max_values = 8);

/// Instructions, the corpus schema, at most `ctx.max_sample_lines` sample
/// lines and the question. Throws std::invalid_argument for an empty question.
std::string build_prompt(std::string_view nl, const PromptContext& ctx);

/// Pulls the query out of a model reply: the body of the first fenced code
/// block if there is one, then the first LogQL-like span that starts at a
/// selector `{` (extended left over enclosing function calls and `by (...)`
/// clauses) and runs until its brackets close and the line or sentence
/// ends. Without any `{` the (fence-stripped) text is returned trimmed.
std::string extract_query(std::string_view raw_text);

}  // namespace lqe::gateway
