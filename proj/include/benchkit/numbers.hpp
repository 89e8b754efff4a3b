#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace benchkit {

/// Locale-independent real-number parse: optional sign, decimal digits with
/// optional fraction, optional exponent. Surrounding text is not allowed.
std::optional<double> parse_real(std::string_view text);

/// Shortest text that parses back to exactly `value`.
std::string format_real(double value);

/// Like format_real but always shows a decimal point ("3" -> "3.0").
std::string format_seconds(double value);

}  // namespace benchkit
