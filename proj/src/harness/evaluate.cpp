#include "lqe/harness/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "lqe/engine/engine.hpp"
#include "lqe/gateway/prompt.hpp"
#include "lqe/logql/canonical.hpp"
#include "lqe/logql/diagnostic.hpp"
#include "lqe/logql/parser.hpp"
#include "lqe/logql/validate.hpp"

namespace lqe::harness {

namespace {

QueryType type_of(const engine::QueryResult& r)
{
    return std::holds_alternative<engine::LogResult>(r) ? QueryType::Log : QueryType::Metric;
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::optional<double> optional_from_json(const nlohmann::json& j, const char* key)
{
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    return it->get<double>();
}

bool results_agree(const engine::QueryResult& expected, const engine::QueryResult& got)
{
    if (type_of(expected) != type_of(got)) {
        return false;
    }
    if (const auto* m = std::get_if<engine::MetricResult>(&expected)) {
        return compare_metric_result(*m, std::get<engine::MetricResult>(got));
    }
    return score_log_result(std::get<engine::LogResult>(expected), std::get<engine::LogResult>(got)).f1 == 1.0;
}

}  // namespace

nlohmann::json to_json(const CandidateRecord& r)
{
    nlohmann::json j;
    j["tuple_id"] = r.tuple_id;
    j["application"] = r.application;
    j["query_type"] = to_string(r.query_type);
    j["generated_text"] = r.generated_text;
    j["extracted_query"] = r.extracted_query;
    j["generation_ok"] = r.generation_ok;
    j["parse_ok"] = r.parse_ok;
    j["validate_ok"] = r.validate_ok;
    j["exec_ok"] = r.exec_ok;
    j["errors"] = r.errors;
    j["result"] = r.result ? engine::to_json(*r.result) : nlohmann::json();
    j["logprobs"] = r.logprobs ? nlohmann::json(*r.logprobs) : nlohmann::json();
    j["exact_match"] = r.exact_match;
    j["score"] = r.score;
    if (r.query_type == QueryType::Log) {
        j["precision"] = r.log_score.precision;
        j["recall"] = r.log_score.recall;
        j["f1"] = r.log_score.f1;
    }
    j["expected_output_consistent"] =
        r.expected_output_consistent ? nlohmann::json(*r.expected_output_consistent) : nlohmann::json();
    return j;
}

engine::EvalContext context_for(const ingest::LogStore& store, const EvalOptions& options)
{
    engine::EvalContext ctx;
    ctx.now = options.now.value_or(store.anchor());
    ctx.limit = options.limit;
    ctx.default_log_lookback = options.log_lookback;
    return ctx;
}

CandidateRecord evaluate_tuple(const ingest::LogStore& store, const BenchmarkTuple& tuple,
                               std::string_view candidate_text, const engine::EvalContext& ctx)
{
    CandidateRecord rec;
    rec.tuple_id = tuple.id;
    rec.application = tuple.application;
    rec.query_type = tuple.query_type;
    rec.generated_text = std::string(candidate_text);

    logql::QueryAst reference_ast;
    engine::QueryResult reference;
    try {
        reference_ast = logql::parse(tuple.reference_query, tuple.vars);
        reference = engine::execute(store, reference_ast, ctx);
    } catch (const logql::QueryError& e) {
        throw DatasetError(fmt::format("tuple \"{}\": reference query does not execute: {}", tuple.id, e.what()));
    }
    if (tuple.expected_output) {
        rec.expected_output_consistent = results_agree(*tuple.expected_output, reference);
    }

    rec.extracted_query = gateway::extract_query(candidate_text);
    logql::QueryAst ast;
    try {
        ast = logql::parse(rec.extracted_query, tuple.vars);
        rec.parse_ok = true;
    } catch (const logql::QueryError& e) {
        for (const auto& d : e.diagnostics()) {
            rec.errors.push_back(logql::format_diagnostic(d));
        }
    }
    if (rec.parse_ok) {
        const auto diags = logql::validate(ast);
        rec.validate_ok = diags.empty();
        for (const auto& d : diags) {
            rec.errors.push_back(logql::format_diagnostic(d));
        }
    }
    if (rec.validate_ok) {
        try {
            rec.result = engine::execute(store, ast, ctx);
            rec.exec_ok = true;
        } catch (const std::exception& e) {
            rec.errors.push_back(fmt::format("execution failed: {}", e.what()));
        }
    }
    if (!rec.exec_ok) {
        return rec;
    }

    rec.exact_match = logql::ast_equal(ast, reference_ast);
    if (type_of(*rec.result) != tuple.query_type) {
        rec.errors.push_back(fmt::format("candidate returned a {} result for a {} question", to_string(type_of(*rec.result)),
                                         to_string(tuple.query_type)));
        return rec;
    }
    if (tuple.query_type == QueryType::Metric) {
        rec.score = compare_metric_result(std::get<engine::MetricResult>(reference),
                                          std::get<engine::MetricResult>(*rec.result))
                        ? 1.0
                        : 0.0;
    } else {
        rec.log_score =
            score_log_result(std::get<engine::LogResult>(reference), std::get<engine::LogResult>(*rec.result));
        rec.score = rec.log_score.f1;
    }
    return rec;
}

EvalMetrics aggregate(const std::vector<CandidateRecord>& records)
{
    std::vector<const CandidateRecord*> sorted;
    for (const auto& r : records) {
        sorted.push_back(&r);
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const CandidateRecord* a, const CandidateRecord* b) { return a->tuple_id < b->tuple_id; });

    struct Sums {
        std::size_t n = 0, metric = 0, log = 0, metric_ok = 0, exact = 0, exec = 0;
        double p = 0, r = 0, f1 = 0;
        Scores finish() const
        {
            Scores s;
            s.tuples = n;
            s.metric_tuples = metric;
            s.log_tuples = log;
            if (metric > 0) {
                s.metric_accuracy = static_cast<double>(metric_ok) / static_cast<double>(metric);
            }
            if (log > 0) {
                s.log_precision = p / static_cast<double>(log);
                s.log_recall = r / static_cast<double>(log);
                s.log_f1 = f1 / static_cast<double>(log);
            }
            if (n > 0) {
                s.exact_match_rate = static_cast<double>(exact) / static_cast<double>(n);
                s.executability_rate = static_cast<double>(exec) / static_cast<double>(n);
            }
            return s;
        }
    };
    const auto add = [](Sums& s, const CandidateRecord& rec) {
        ++s.n;
        s.exact += rec.exact_match ? 1 : 0;
        s.exec += rec.exec_ok ? 1 : 0;
        if (rec.query_type == QueryType::Metric) {
            ++s.metric;
            s.metric_ok += rec.score == 1.0 ? 1 : 0;
        } else {
            ++s.log;
            s.p += rec.log_score.precision;
            s.r += rec.log_score.recall;
            s.f1 += rec.log_score.f1;
        }
    };

    Sums overall;
    std::map<std::string, Sums> per_app;
    double logprob_sum = 0;
    std::size_t token_count = 0;
    EvalMetrics m;
    for (const auto* rec : sorted) {
        add(overall, *rec);
        add(per_app[rec->application], *rec);
        if (rec->logprobs) {
            for (const double lp : *rec->logprobs) {
                logprob_sum += lp;
                ++token_count;
            }
        }
        m.tuple_ids.push_back(rec->tuple_id);
    }
    m.overall = overall.finish();
    for (const auto& [app, sums] : per_app) {
        m.per_application.emplace(app, sums.finish());
    }
    if (token_count > 0) {
        m.perplexity = std::exp(-logprob_sum / static_cast<double>(token_count));
    }
    return m;
}

namespace {

nlohmann::json scores_json(const Scores& s)
{
    return {{"tuples", s.tuples},
            {"metric_tuples", s.metric_tuples},
            {"log_tuples", s.log_tuples},
            {"metric_accuracy", optional_json(s.metric_accuracy)},
            {"log_precision", optional_json(s.log_precision)},
            {"log_recall", optional_json(s.log_recall)},
            {"log_f1", optional_json(s.log_f1)},
            {"exact_match_rate", optional_json(s.exact_match_rate)},
            {"executability_rate", optional_json(s.executability_rate)}};
}

Scores scores_from_json(const nlohmann::json& j)
{
    Scores s;
    s.tuples = j.at("tuples").get<std::size_t>();
    s.metric_tuples = j.at("metric_tuples").get<std::size_t>();
    s.log_tuples = j.at("log_tuples").get<std::size_t>();
    s.metric_accuracy = optional_from_json(j, "metric_accuracy");
    s.log_precision = optional_from_json(j, "log_precision");
    s.log_recall = optional_from_json(j, "log_recall");
    s.log_f1 = optional_from_json(j, "log_f1");
    s.exact_match_rate = optional_from_json(j, "exact_match_rate");
    s.executability_rate = optional_from_json(j, "executability_rate");
    return s;
}

}  // namespace

nlohmann::json to_json(const EvalMetrics& m)
{
    nlohmann::json j;
    j["overall"] = scores_json(m.overall);
    j["per_application"] = nlohmann::json::object();
    for (const auto& [app, s] : m.per_application) {
        j["per_application"][app] = scores_json(s);
    }
    j["perplexity"] = optional_json(m.perplexity);
    j["tuple_ids"] = m.tuple_ids;
    return j;
}

EvalMetrics metrics_from_json(const nlohmann::json& j)
{
    try {
        EvalMetrics m;
        m.overall = scores_from_json(j.at("overall"));
        for (const auto& [app, s] : j.at("per_application").items()) {
            m.per_application.emplace(app, scores_from_json(s));
        }
        m.perplexity = optional_from_json(j, "perplexity");
        m.tuple_ids = j.at("tuple_ids").get<std::vector<std::string>>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(fmt::format("metrics: {}", e.what()));
    }
}

EvalRun evaluate_run(const StoreMap& stores, const std::vector<BenchmarkTuple>& tuples, gateway::Generator& generator,
                     const EvalOptions& options)
{
    std::map<std::string, gateway::PromptContext> prompts;
    for (const auto& t : tuples) {
        const auto it = stores.find(t.application);
        if (it == stores.end() || it->second == nullptr) {
            throw DatasetError(fmt::format("tuple \"{}\": no corpus loaded for application \"{}\"", t.id, t.application));
        }
        if (!prompts.contains(t.application)) {
            prompts.emplace(t.application,
                            gateway::prompt_context_from_store(*it->second, options.prompt_sample_lines));
        }
    }

    EvalRun run;
    run.records.resize(tuples.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    const auto worker = [&] {
        for (std::size_t i = next++; i < tuples.size(); i = next++) {
            const auto& t = tuples[i];
            const auto& store = *stores.find(t.application)->second;
            try {
                gateway::GenerationRequest req{t.id, t.application, t.nl_question, t.reference_query,
                                               gateway::build_prompt(t.nl_question, prompts.at(t.application))};
                gateway::GenerationResponse resp;
                std::optional<std::string> generation_error;
                try {
                    resp = generator.generate(req);
                } catch (const std::exception& e) {
                    generation_error = e.what();
                }
                CandidateRecord rec = evaluate_tuple(store, t, generation_error ? "" : resp.raw_text,
                                                     context_for(store, options));
                if (generation_error) {
                    rec.generation_ok = false;
                    rec.errors = {fmt::format("generation failed: {}", *generation_error)};
                } else {
                    rec.latency_ms = resp.latency_ms;
                    rec.logprobs = resp.token_logprobs;
                }
                run.records[i] = std::move(rec);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next = tuples.size();
            }
        }
    };

    const std::size_t n_threads = std::max<std::size_t>(1, std::min(options.parallelism, tuples.size()));
    std::vector<std::thread> threads;
    for (std::size_t i = 1; i < n_threads; ++i) {
        threads.emplace_back(worker);
    }
    worker();
    for (auto& th : threads) {
        th.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    run.metrics = aggregate(run.records);
    return run;
}

}  // namespace lqe::harness
