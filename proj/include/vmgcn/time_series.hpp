#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

namespace vmgcn {

using Timestamp = std::chrono::sys_seconds;

/// One node's uniformly sampled flow signal (vehicles per interval).
struct TimeSeries {
    std::string node_id;
    Timestamp start_time{};
    std::chrono::seconds step{std::chrono::minutes(15)};
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    Timestamp time_at(std::size_t i) const {
        return start_time + step * static_cast<std::int64_t>(i);
    }
};

/// Fraction of the day elapsed at `t`, in [0, 1).
double time_of_day(Timestamp t);

/// Monday = 0 ... Sunday = 6.
int day_of_week(Timestamp t);

/// Parses "YYYY-MM-DD HH:MM[:SS]", "YYYY-MM-DDTHH:MM[:SS]" or integer epoch
/// seconds. Throws InvalidInput on anything else.
Timestamp parse_timestamp(const std::string& text);

/// "YYYY-MM-DD HH:MM:SS", UTC.
std::string format_timestamp(Timestamp t);

}  // namespace vmgcn
