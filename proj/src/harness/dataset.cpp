#include "lqe/harness/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "lqe/common/strings.hpp"
#include "lqe/logql/diagnostic.hpp"
#include "lqe/logql/validate.hpp"

namespace lqe::harness {

std::string_view to_string(QueryType type) { return type == QueryType::Log ? "LOG" : "METRIC"; }

nlohmann::json to_json(const BenchmarkTuple& tuple)
{
    nlohmann::json j;
    j["id"] = tuple.id;
    j["application"] = tuple.application;
    j["use_case"] = tuple.use_case;
    j["query_type"] = to_string(tuple.query_type);
    j["nl_question"] = tuple.nl_question;
    j["reference_query"] = tuple.reference_query;
    if (tuple.expected_output) {
        j["expected_output"] = engine::to_json(*tuple.expected_output);
    }
    j["vars"] = nlohmann::json::object();
    for (const auto& [k, v] : tuple.vars) {
        j["vars"][k] = v;
    }
    return j;
}

namespace {

std::string string_field(const nlohmann::json& j, const std::string& id, const char* field, bool required = true)
{
    const auto it = j.find(field);
    if (it == j.end()) {
        if (required) {
            throw DatasetError(fmt::format("tuple \"{}\": missing field \"{}\"", id, field));
        }
        return {};
    }
    if (!it->is_string()) {
        throw DatasetError(fmt::format("tuple \"{}\": field \"{}\" must be a string", id, field));
    }
    return it->get<std::string>();
}

}  // namespace

BenchmarkTuple tuple_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) {
        throw DatasetError("record is not a JSON object");
    }
    BenchmarkTuple t;
    t.id = string_field(j, "?", "id");
    if (t.id.empty()) {
        throw DatasetError("tuple with empty \"id\"");
    }
    t.application = string_field(j, t.id, "application");
    t.use_case = string_field(j, t.id, "use_case", false);
    const std::string type = string_field(j, t.id, "query_type");
    if (type == "LOG") {
        t.query_type = QueryType::Log;
    } else if (type == "METRIC") {
        t.query_type = QueryType::Metric;
    } else {
        throw DatasetError(fmt::format("tuple \"{}\": field \"query_type\" must be LOG or METRIC, got \"{}\"", t.id,
                                       type));
    }
    t.nl_question = string_field(j, t.id, "nl_question");
    t.reference_query = string_field(j, t.id, "reference_query");

    if (const auto it = j.find("vars"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) {
            throw DatasetError(fmt::format("tuple \"{}\": field \"vars\" must be an object", t.id));
        }
        for (const auto& [k, v] : it->items()) {
            if (!v.is_string()) {
                throw DatasetError(fmt::format("tuple \"{}\": field \"vars.{}\" must be a string", t.id, k));
            }
            t.vars.emplace(k, v.get<std::string>());
        }
    }

    logql::QueryAst ast;
    try {
        ast = logql::parse(t.reference_query, t.vars);
    } catch (const logql::QueryError& e) {
        throw DatasetError(fmt::format("tuple \"{}\": field \"reference_query\": {}", t.id, e.what()));
    }
    if (const auto diags = logql::validate(ast); !diags.empty()) {
        throw DatasetError(fmt::format("tuple \"{}\": field \"reference_query\": {}", t.id,
                                       logql::format_diagnostic(diags.front())));
    }
    const QueryType actual = std::holds_alternative<logql::LogQuery>(ast) ? QueryType::Log : QueryType::Metric;
    if (actual != t.query_type) {
        throw DatasetError(fmt::format("tuple \"{}\": field \"query_type\" is {} but the reference query is a {} query",
                                       t.id, to_string(t.query_type), to_string(actual)));
    }

    if (const auto it = j.find("expected_output"); it != j.end() && !it->is_null()) {
        try {
            t.expected_output = engine::result_from_json(*it);
        } catch (const std::exception& e) {
            throw DatasetError(fmt::format("tuple \"{}\": field \"expected_output\": {}", t.id, e.what()));
        }
        const QueryType got =
            std::holds_alternative<engine::LogResult>(*t.expected_output) ? QueryType::Log : QueryType::Metric;
        if (got != t.query_type) {
            throw DatasetError(fmt::format("tuple \"{}\": field \"expected_output\" is a {} result for a {} query",
                                           t.id, to_string(got), to_string(t.query_type)));
        }
    }
    return t;
}

std::vector<BenchmarkTuple> parse_dataset(std::string_view text, const std::string& source)
{
    std::vector<BenchmarkTuple> out;
    std::set<std::string> ids;
    std::size_t line_no = 0;
    for (const auto& line : split(text, '\n')) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        try {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw DatasetError(fmt::format("invalid JSON: {}", e.what()));
            }
            BenchmarkTuple t = tuple_from_json(j);
            if (!ids.insert(t.id).second) {
                throw DatasetError(fmt::format("tuple \"{}\": duplicate id", t.id));
            }
            out.push_back(std::move(t));
        } catch (const DatasetError& e) {
            throw DatasetError(fmt::format("{}:{}: {}", source, line_no, e.what()));
        }
    }
    if (out.empty()) {
        throw DatasetError(fmt::format("{}: dataset is empty", source));
    }
    return out;
}

std::vector<BenchmarkTuple> load_dataset(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DatasetError(fmt::format("cannot read dataset {}", path.string()));
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str(), path.string());
}

void save_dataset(const std::filesystem::path& path, const std::vector<BenchmarkTuple>& tuples)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DatasetError(fmt::format("cannot write dataset {}", path.string()));
    }
    for (const auto& t : tuples) {
        out << to_json(t).dump() << '\n';
    }
}

Split split_dataset(const std::vector<BenchmarkTuple>& tuples, const SplitSpec& spec)
{
    const auto check_fraction = [](double f, const char* what) {
        if (!(f > 0 && f < 1)) {
            throw DatasetError(fmt::format("{} {} is not in (0, 1)", what, f));
        }
    };
    check_fraction(spec.test_fraction, "test fraction");
    std::vector<double> train = spec.train_fractions;
    for (double f : train) {
        check_fraction(f, "train fraction");
    }
    std::vector<std::size_t> by_size(train.size());
    for (std::size_t i = 0; i < by_size.size(); ++i) {
        by_size[i] = i;
    }
    std::stable_sort(by_size.begin(), by_size.end(), [&](std::size_t a, std::size_t b) { return train[a] < train[b]; });

    std::map<std::string, std::vector<const BenchmarkTuple*>> groups;
    for (const auto& t : tuples) {
        groups[t.application].push_back(&t);
    }

    Split split;
    split.train_subsets.resize(train.size());
    for (auto& [app, members] : groups) {
        const std::size_t n = members.size();
        if (n < 5) {
            throw DatasetError(fmt::format("application \"{}\" has {} tuples; splitting needs at least 5", app, n));
        }
        std::sort(members.begin(), members.end(),
                  [](const BenchmarkTuple* a, const BenchmarkTuple* b) { return a->id < b->id; });
        // Fisher-Yates with a plain modulo draw so the split does not depend on
        // the standard library's distribution implementation.
        std::mt19937_64 rng(spec.seed ^ fnv1a64(app));
        for (std::size_t i = n - 1; i > 0; --i) {
            std::swap(members[i], members[rng() % (i + 1)]);
        }

        const auto count = [n](double f) { return static_cast<std::size_t>(std::llround(f * static_cast<double>(n))); };
        const std::size_t n_test = count(spec.test_fraction);
        if (n_test == 0 || n_test >= n) {
            throw DatasetError(fmt::format("test fraction {} leaves application \"{}\" ({} tuples) with {} test tuples",
                                           spec.test_fraction, app, n, n_test));
        }
        for (std::size_t i = 0; i < n_test; ++i) {
            split.test.push_back(*members[i]);
        }
        const std::size_t pool = n - n_test;
        for (std::size_t i : by_size) {
            const std::size_t want = count(train[i]);
            if (want == 0 || want > pool) {
                throw DatasetError(fmt::format(
                    "train fraction {} asks for {} tuples of application \"{}\" but {} remain after the test split",
                    train[i], want, app, pool));
            }
            for (std::size_t k = 0; k < want; ++k) {
                split.train_subsets[i].push_back(*members[n_test + k]);
            }
        }
    }
    return split;
}

}  // namespace lqe::harness
