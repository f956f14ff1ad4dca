#pragma once

#include <string>
#include <vector>

#include "lsmc/types.hpp"

namespace lsmc {

/// Close-price history: header `date,TICKER,...`, one row per date in
/// ascending order, strictly positive prices.
struct PriceTable {
  std::vector<std::string> tickers;
  std::vector<std::string> dates;
  Matrix prices;  // rows align with dates, columns with tickers
};

/// Parse a price CSV.  Violations (ragged rows, non-numeric or non-positive
/// prices, out-of-order dates) raise std::invalid_argument naming the row.
PriceTable read_price_csv(const std::string& path);

/// Per-period log returns, one row per adjacent date pair.
Matrix log_returns(const PriceTable& table);

/// Write rows of preformatted cells under a header line.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Shortest decimal text that round-trips the value ("NA" for NaN).
std::string format_cell(double value);

}  // namespace lsmc
