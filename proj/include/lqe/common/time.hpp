#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lqe {

using Nanos = std::chrono::nanoseconds;
using Timestamp = std::chrono::sys_time<Nanos>;

class TimeFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::int64_t to_unix_nanos(Timestamp ts) { return ts.time_since_epoch().count(); }
inline Timestamp from_unix_nanos(std::int64_t ns) { return Timestamp{Nanos{ns}}; }

/// Accepts `YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)`; a space may replace `T`.
Timestamp parse_rfc3339(std::string_view text);

/// UTC, fractional seconds with trailing zeros trimmed (Go's RFC3339Nano).
std::string format_rfc3339(Timestamp ts);

/// strptime-like parsing for log timestamps. Supported directives:
/// `%Y %y %m %d %e %b %H %M %S %f %%`. A space in the format matches one or
/// more spaces. `%f` consumes 1-9 fraction digits. Missing year fields take
/// `default_year`. Times are UTC.
Timestamp parse_timestamp(std::string_view text, std::string_view format, int default_year);

}  // namespace lqe
