#include "lsmc/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace lsmc {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t start = 0;
    while (start < cell.size() && cell[start] == ' ') ++start;
    cells.push_back(cell.substr(start));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

PriceTable read_price_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("price csv: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("price csv: empty file " + path);
  auto header = split_line(line);
  if (header.size() < 2 || header[0] != "date")
    throw std::invalid_argument("price csv: header must be 'date,TICKER,...' in " + path);

  PriceTable table;
  table.tickers.assign(header.begin() + 1, header.end());
  for (std::size_t i = 0; i < table.tickers.size(); ++i)
    if (table.tickers[i].empty())
      throw std::invalid_argument("price csv: empty ticker in header column " +
                                  std::to_string(i + 2));

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      throw std::invalid_argument("price csv: row " + std::to_string(line_no) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()));
    if (!table.dates.empty() && cells[0] <= table.dates.back())
      throw std::invalid_argument("price csv: dates not strictly ascending at row " +
                                  std::to_string(line_no));
    table.dates.push_back(cells[0]);
    std::vector<double> prices;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      char* end = nullptr;
      const double v = std::strtod(cells[c].c_str(), &end);
      if (end == cells[c].c_str() || *end != '\0' || !std::isfinite(v) || v <= 0.0)
        throw std::invalid_argument("price csv: bad price for " + table.tickers[c - 1] +
                                    " at row " + std::to_string(line_no));
      prices.push_back(v);
    }
    rows.push_back(std::move(prices));
  }
  if (rows.size() < 2)
    throw std::invalid_argument("price csv: need at least two data rows in " + path);

  table.prices.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.tickers.size()));
  for (Index r = 0; r < table.prices.rows(); ++r)
    for (Index c = 0; c < table.prices.cols(); ++c)
      table.prices(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return table;
}

Matrix log_returns(const PriceTable& table) {
  const Index T = table.prices.rows();
  Matrix out(T - 1, table.prices.cols());
  for (Index r = 1; r < T; ++r)
    out.row(r - 1) = (table.prices.row(r).array() / table.prices.row(r - 1).array()).log();
  return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (std::size_t i = 0; i < header.size(); ++i)
    out << header[i] << (i + 1 < header.size() ? "," : "");
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::invalid_argument("write_csv: row width does not match the header");
    for (std::size_t i = 0; i < row.size(); ++i)
      out << row[i] << (i + 1 < row.size() ? "," : "");
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string format_cell(double value) {
  if (std::isnan(value)) return "NA";
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

}  // namespace lsmc
