#pragma once

#include <string>
#include <string_view>

namespace mrddi {

/// Shortest text that reads back to the same double; "nan"/"inf" otherwise.
std::string format_number(double v);

/// Quotes a CSV field when it holds a comma, quote or line break.
std::string csv_field(std::string_view s);

}  // namespace mrddi
