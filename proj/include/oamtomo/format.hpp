#pragma once

#include <string>

namespace oamtomo {

/// Value with a parenthesized one-sigma uncertainty in the last quoted
/// digits: the uncertainty keeps two significant digits and the value is
/// rounded to the same decimal place, e.g. (0.936, 0.048, percent) ->
/// "93.6(4.8)%" and (2.34, 0.12) -> "2.34(12)". A zero uncertainty prints as
/// "(0)" with `zero_decimals` decimals on the value.
std::string format_with_uncertainty(double value, double sigma, bool percent = false,
                                    int zero_decimals = 1);

}  // namespace oamtomo
