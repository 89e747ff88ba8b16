#include "lqe/logql/canonical.hpp"

#include <algorithm>
#include <tuple>

namespace lqe::logql {

namespace {

void canonicalize_log(LogQuery& q)
{
    const auto key = [](const LabelMatcher& m) { return std::tie(m.name, m.op, m.value); };
    std::sort(q.selector.begin(), q.selector.end(),
              [&](const LabelMatcher& a, const LabelMatcher& b) { return key(a) < key(b); });
    q.selector.erase(std::unique(q.selector.begin(), q.selector.end()), q.selector.end());
}

void canonicalize_metric(MetricQuery& q)
{
    if (auto* range = std::get_if<RangeAggregation>(&q)) {
        canonicalize_log(range->inner);
        if (range->range) {
            range->range = range->range->normalized();
        }
        return;
    }
    auto& agg = *std::get<Box<VectorAggregation>>(q);
    if (agg.grouping) {
        auto& labels = agg.grouping->labels;
        std::sort(labels.begin(), labels.end());
        labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    }
    canonicalize_metric(agg.inner);
}

}  // namespace

QueryAst canonicalize(const QueryAst& ast)
{
    QueryAst out = ast;
    if (auto* log = std::get_if<LogQuery>(&out)) {
        canonicalize_log(*log);
    } else {
        canonicalize_metric(std::get<MetricQuery>(out));
    }
    return out;
}

bool ast_equal(const QueryAst& a, const QueryAst& b)
{
    return canonicalize(a) == canonicalize(b);
}

}  // namespace lqe::logql
