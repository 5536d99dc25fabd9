#pragma once

#include <string>
#include <utility>
#include <vector>

namespace retmap::csv {

/// Data cells: 17 significant digits.
std::string num(double v);

/// Summary cells: fixed 6 decimals.
std::string fixed6(double v);

using SummaryRows = std::vector<std::pair<std::string, std::string>>;

}  // namespace retmap::csv
