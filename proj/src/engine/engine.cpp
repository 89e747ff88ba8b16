#include "lqe/engine/engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <tuple>

#include "lqe/common/regex.hpp"
#include "lqe/logql/template.hpp"
#include "lqe/logql/validate.hpp"

namespace lqe::engine {

using namespace logql;

namespace {

bool matcher_accepts(const LabelMatcher& m, const Regex* re, const Labels& labels)
{
    const auto it = labels.find(m.name);
    const std::string_view value = it == labels.end() ? std::string_view() : std::string_view(it->second);
    switch (m.op) {
    case MatchOp::Eq:
        return value == m.value;
    case MatchOp::Neq:
        return value != m.value;
    case MatchOp::Re:
        return re->full_match(value);
    case MatchOp::Nre:
        return !re->full_match(value);
    }
    return false;
}

std::vector<StreamId> intersect(const std::vector<StreamId>& a, const std::vector<StreamId>& b)
{
    std::vector<StreamId> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

}  // namespace

std::vector<StreamId> select_streams(const LogStore& store, const std::vector<LabelMatcher>& matchers)
{
    std::vector<std::optional<Regex>> compiled;
    compiled.reserve(matchers.size());
    for (const auto& m : matchers) {
        compiled.push_back(m.op == MatchOp::Re || m.op == MatchOp::Nre ? std::optional(Regex::compile(m.value))
                                                                       : std::nullopt);
    }

    // Narrow with the postings of positive matchers that cannot match an
    // absent label, then check the remaining matchers stream by stream.
    std::optional<std::vector<StreamId>> candidates;
    const auto& postings = store.postings();
    for (std::size_t i = 0; i < matchers.size(); ++i) {
        const auto& m = matchers[i];
        std::vector<StreamId> ids;
        if (m.op == MatchOp::Eq && !m.value.empty()) {
            if (const auto label = postings.find(m.name); label != postings.end()) {
                if (const auto value = label->second.find(m.value); value != label->second.end()) {
                    ids = value->second;
                }
            }
        } else if (m.op == MatchOp::Re && !compiled[i]->full_match("")) {
            if (const auto label = postings.find(m.name); label != postings.end()) {
                for (const auto& [value, streams] : label->second) {
                    if (compiled[i]->full_match(value)) {
                        ids.insert(ids.end(), streams.begin(), streams.end());
                    }
                }
                std::sort(ids.begin(), ids.end());
            }
        } else {
            continue;
        }
        candidates = candidates ? intersect(*candidates, ids) : std::move(ids);
    }
    if (!candidates) {
        candidates.emplace(store.streams().size());
        for (StreamId id = 0; id < candidates->size(); ++id) {
            (*candidates)[id] = id;
        }
    }

    std::vector<StreamId> out;
    for (const StreamId id : *candidates) {
        const auto& labels = store.stream(id).labels;
        bool ok = true;
        for (std::size_t i = 0; i < matchers.size() && ok; ++i) {
            ok = matcher_accepts(matchers[i], compiled[i] ? &*compiled[i] : nullptr, labels);
        }
        if (ok) {
            out.push_back(id);
        }
    }
    return out;
}

std::optional<double> parse_number(std::string_view text)
{
    double value = 0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

// ---- pipeline ---------------------------------------------------------------

struct Pipeline::Stage {
    virtual ~Stage() = default;
    virtual bool apply(PipelineEntry& e, const Labels& stream_labels) const = 0;
};

namespace {

std::string_view label_or_empty(const Labels& labels, std::string_view name)
{
    const auto it = labels.find(name);
    return it == labels.end() ? std::string_view() : std::string_view(it->second);
}

class LineFilterStage final : public Pipeline::Stage {
public:
    explicit LineFilterStage(const LineFilter& f) : f_(f)
    {
        if (f.op == LineFilterOp::Matches || f.op == LineFilterOp::NotMatches) {
            re_ = Regex::compile(f.pattern);
        }
    }

    bool apply(PipelineEntry& e, const Labels&) const override
    {
        switch (f_.op) {
        case LineFilterOp::Contains:
            return e.line.find(f_.pattern) != std::string::npos;
        case LineFilterOp::NotContains:
            return e.line.find(f_.pattern) == std::string::npos;
        case LineFilterOp::Matches:
            return re_->search(e.line);
        case LineFilterOp::NotMatches:
            return !re_->search(e.line);
        }
        return false;
    }

private:
    LineFilter f_;
    std::optional<Regex> re_;
};

class LabelFilterStage final : public Pipeline::Stage {
public:
    explicit LabelFilterStage(const LabelFilter& f) : f_(f)
    {
        if (f.cmp == Comparator::Re || f.cmp == Comparator::Nre) {
            re_ = Regex::compile(std::get<std::string>(f.value));
        }
    }

    bool apply(PipelineEntry& e, const Labels&) const override
    {
        const std::string_view value = label_or_empty(e.labels, f_.name);
        if (const auto* target = std::get_if<double>(&f_.value)) {
            const auto number = parse_number(value);
            if (!number) {
                return false;
            }
            switch (f_.cmp) {
            case Comparator::Eq:
                return *number == *target;
            case Comparator::Neq:
                return *number != *target;
            case Comparator::Gt:
                return *number > *target;
            case Comparator::Ge:
                return *number >= *target;
            case Comparator::Lt:
                return *number < *target;
            case Comparator::Le:
                return *number <= *target;
            default:
                return false;
            }
        }
        const auto& target = std::get<std::string>(f_.value);
        switch (f_.cmp) {
        case Comparator::Eq:
            return value == target;
        case Comparator::Neq:
            return value != target;
        case Comparator::Re:
            return re_->full_match(value);
        case Comparator::Nre:
            return !re_->full_match(value);
        default:
            return false;
        }
    }

private:
    LabelFilter f_;
    std::optional<Regex> re_;
};

class RegexpExtractStage final : public Pipeline::Stage {
public:
    explicit RegexpExtractStage(const RegexpStage& s) : re_(Regex::compile(s.pattern)) {}

    bool apply(PipelineEntry& e, const Labels& stream_labels) const override
    {
        NamedCaptures captures;
        if (!re_.search(e.line, captures)) {
            e.labels["__error__"] = "regexp";
            return true;
        }
        for (auto& [name, value] : captures) {
            if (value.empty()) {
                continue;
            }
            if (stream_labels.contains(name)) {
                e.labels[name + "_extracted"] = std::move(value);
            } else {
                e.labels[name] = std::move(value);
            }
        }
        return true;
    }

private:
    Regex re_;
};

class LineFormat final : public Pipeline::Stage {
public:
    explicit LineFormat(const LineFormatStage& s) : tmpl_(LineTemplate::compile(s.tmpl)) {}

    bool apply(PipelineEntry& e, const Labels&) const override
    {
        e.line = tmpl_.render(e.labels, e.ts);
        return true;
    }

private:
    LineTemplate tmpl_;
};

class Unwrap final : public Pipeline::Stage {
public:
    explicit Unwrap(const UnwrapStage& s) : label_(s.label) {}

    bool apply(PipelineEntry& e, const Labels&) const override
    {
        e.unwrapped = parse_number(label_or_empty(e.labels, label_));
        return e.unwrapped.has_value();
    }

private:
    std::string label_;
};

}  // namespace

Pipeline::Pipeline(const std::vector<PipelineStage>& stages)
{
    for (const auto& stage : stages) {
        std::visit(
            [&](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, LineFilter>) {
                    stages_.push_back(std::make_shared<LineFilterStage>(s));
                } else if constexpr (std::is_same_v<T, LabelFilter>) {
                    stages_.push_back(std::make_shared<LabelFilterStage>(s));
                } else if constexpr (std::is_same_v<T, RegexpStage>) {
                    stages_.push_back(std::make_shared<RegexpExtractStage>(s));
                } else if constexpr (std::is_same_v<T, LineFormatStage>) {
                    stages_.push_back(std::make_shared<LineFormat>(s));
                } else {
                    stages_.push_back(std::make_shared<Unwrap>(s));
                    unwrap_label_ = s.label;
                }
            },
            stage);
    }
}

bool Pipeline::process(PipelineEntry& entry, const Labels& stream_labels) const
{
    for (const auto& stage : stages_) {
        if (!stage->apply(entry, stream_labels)) {
            return false;
        }
    }
    return true;
}

// ---- evaluation ---------------------------------------------------------------

namespace {

/// Global row order: timestamp, then stream rank (= label-set order), then
/// position within the stream.
struct Position {
    Timestamp ts;
    StreamId stream;
    std::size_t seq;

    auto operator<=>(const Position&) const = default;
};

struct Processed {
    Position pos;
    PipelineEntry entry;
};

/// Runs the pipeline over every selected entry within [from, to].
std::vector<Processed> scan(const LogStore& store, const LogQuery& query, Timestamp from, Timestamp to,
                            const Pipeline& pipeline)
{
    std::vector<Processed> out;
    for (const StreamId id : select_streams(store, query.selector)) {
        const auto& stream = store.stream(id);
        const auto& entries = stream.entries;
        const auto by_ts = [](const ingest::StreamEntry& e, Timestamp t) { return e.ts < t; };
        auto it = std::lower_bound(entries.begin(), entries.end(), from, by_ts);
        for (; it != entries.end() && it->ts <= to; ++it) {
            PipelineEntry e{it->ts, stream.labels, it->line, std::nullopt};
            if (pipeline.process(e, stream.labels)) {
                out.push_back(Processed{Position{it->ts, id, static_cast<std::size_t>(it - entries.begin())},
                                        std::move(e)});
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const Processed& a, const Processed& b) { return a.pos < b.pos; });
    return out;
}

std::vector<Sample> sorted_samples(std::map<std::string, Sample> by_key)
{
    std::vector<Sample> out;
    out.reserve(by_key.size());
    for (auto& [key, sample] : by_key) {
        out.push_back(std::move(sample));
    }
    return out;
}

std::vector<Sample> range_aggregation(const LogStore& store, const RangeAggregation& agg, const EvalContext& ctx)
{
    const Pipeline pipeline(agg.inner.pipeline);
    const Nanos range = agg.range->nanos();
    const auto rows = scan(store, agg.inner, ctx.now - range, ctx.now, pipeline);

    struct Series {
        Labels labels;
        double sum = 0;
        double min = 0;
        double max = 0;
        std::size_t count = 0;
    };
    std::map<std::string, Series> series;
    for (const auto& row : rows) {
        Labels labels = row.entry.labels;
        if (pipeline.unwrap_label()) {
            labels.erase(*pipeline.unwrap_label());
        }
        std::string key = label_set_string(labels);
        auto [it, inserted] = series.try_emplace(std::move(key));
        Series& s = it->second;
        if (inserted) {
            s.labels = std::move(labels);
        }
        double v = 0;
        if (agg.func == RangeFunc::BytesOverTime) {
            v = static_cast<double>(row.entry.line.size());
        } else if (row.entry.unwrapped) {
            v = *row.entry.unwrapped;
        }
        s.min = s.count == 0 ? v : std::min(s.min, v);
        s.max = s.count == 0 ? v : std::max(s.max, v);
        s.sum += v;
        ++s.count;
    }

    const double seconds = std::chrono::duration<double>(range).count();
    std::vector<Sample> out;
    out.reserve(series.size());
    for (auto& [key, s] : series) {
        double value = 0;
        switch (agg.func) {
        case RangeFunc::CountOverTime:
            value = static_cast<double>(s.count);
            break;
        case RangeFunc::Rate:
            value = static_cast<double>(s.count) / seconds;
            break;
        case RangeFunc::BytesOverTime:
        case RangeFunc::SumOverTime:
            value = s.sum;
            break;
        case RangeFunc::AvgOverTime:
            value = s.sum / static_cast<double>(s.count);
            break;
        case RangeFunc::MinOverTime:
            value = s.min;
            break;
        case RangeFunc::MaxOverTime:
            value = s.max;
            break;
        }
        out.push_back(Sample{std::move(s.labels), value});
    }
    return out;
}

Labels group_labels(const Labels& labels, const std::optional<Grouping>& grouping)
{
    Labels out;
    if (!grouping) {
        return out;
    }
    const auto listed = [&](const std::string& name) {
        return std::find(grouping->labels.begin(), grouping->labels.end(), name) != grouping->labels.end();
    };
    for (const auto& [name, value] : labels) {
        if (listed(name) != grouping->without) {
            out.emplace(name, value);
        }
    }
    return out;
}

std::vector<Sample> vector_aggregation(const LogStore& store, const VectorAggregation& agg, const EvalContext& ctx);

std::vector<Sample> evaluate(const LogStore& store, const MetricQuery& query, const EvalContext& ctx)
{
    if (const auto* range = std::get_if<RangeAggregation>(&query)) {
        return range_aggregation(store, *range, ctx);
    }
    return vector_aggregation(store, *std::get<Box<VectorAggregation>>(query), ctx);
}

std::vector<Sample> vector_aggregation(const LogStore& store, const VectorAggregation& agg, const EvalContext& ctx)
{
    const std::vector<Sample> input = evaluate(store, agg.inner, ctx);

    struct Group {
        Labels labels;
        std::vector<const Sample*> members;
    };
    std::map<std::string, Group> groups;
    for (const auto& sample : input) {
        Labels key_labels = group_labels(sample.labels, agg.grouping);
        auto [it, inserted] = groups.try_emplace(label_set_string(key_labels));
        if (inserted) {
            it->second.labels = std::move(key_labels);
        }
        it->second.members.push_back(&sample);
    }

    if (agg.func == VectorFunc::Topk || agg.func == VectorFunc::Bottomk) {
        const bool top = agg.func == VectorFunc::Topk;
        std::map<std::string, Sample> kept;
        for (auto& [key, group] : groups) {
            auto& members = group.members;
            // Members arrive in label-set order, so a stable sort on value
            // breaks ties by label set.
            std::stable_sort(members.begin(), members.end(), [top](const Sample* a, const Sample* b) {
                return top ? a->value > b->value : a->value < b->value;
            });
            const auto k = std::min<std::size_t>(static_cast<std::size_t>(*agg.k), members.size());
            for (std::size_t i = 0; i < k; ++i) {
                kept.emplace(label_set_string(members[i]->labels), *members[i]);
            }
        }
        return sorted_samples(std::move(kept));
    }

    std::map<std::string, Sample> out;
    for (auto& [key, group] : groups) {
        double sum = 0;
        double lo = group.members.front()->value;
        double hi = lo;
        for (const Sample* s : group.members) {
            sum += s->value;
            lo = std::min(lo, s->value);
            hi = std::max(hi, s->value);
        }
        const auto n = static_cast<double>(group.members.size());
        double value = 0;
        switch (agg.func) {
        case VectorFunc::Sum:
            value = sum;
            break;
        case VectorFunc::Avg:
            value = sum / n;
            break;
        case VectorFunc::Min:
            value = lo;
            break;
        case VectorFunc::Max:
            value = hi;
            break;
        case VectorFunc::Count:
            value = n;
            break;
        default:
            break;
        }
        out.emplace(key, Sample{std::move(group.labels), value});
    }
    return sorted_samples(std::move(out));
}

}  // namespace

LogResult execute_log_query(const LogStore& store, const LogQuery& query, const EvalContext& ctx)
{
    const Pipeline pipeline(query.pipeline);
    auto rows = scan(store, query, ctx.now - ctx.default_log_lookback, ctx.now, pipeline);
    LogResult result;
    std::size_t first = 0;
    std::size_t last = rows.size();
    if (rows.size() > ctx.limit) {
        result.truncated = true;
        if (ctx.direction == Direction::Backward) {
            first = rows.size() - ctx.limit;
        } else {
            last = ctx.limit;
        }
    }
    result.rows.reserve(last - first);
    for (std::size_t i = first; i < last; ++i) {
        auto& e = rows[i].entry;
        result.rows.push_back(LogRow{e.ts, std::move(e.labels), std::move(e.line)});
    }
    return result;
}

MetricResult execute_metric_query(const LogStore& store, const MetricQuery& query, const EvalContext& ctx)
{
    return MetricResult{evaluate(store, query, ctx), ctx.now};
}

QueryResult execute(const LogStore& store, const QueryAst& ast, const EvalContext& ctx)
{
    if (auto diags = validate(ast); !diags.empty()) {
        throw QueryError(std::move(diags));
    }
    if (const auto* log = std::get_if<LogQuery>(&ast)) {
        return execute_log_query(store, *log, ctx);
    }
    return execute_metric_query(store, std::get<MetricQuery>(ast), ctx);
}

QueryResult execute(const LogStore& store, std::string_view text, const Variables& vars, const EvalContext& ctx,
                    const ParseOptions& options)
{
    return execute(store, parse(text, vars, options), ctx);
}

}  // namespace lqe::engine
