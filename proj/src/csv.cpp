#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "navar/data.hpp"
#include "navar/error.hpp"
#include "navar/io_util.hpp"

namespace navar {

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, delimiter)) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == delimiter) cells.emplace_back();
  return cells;
}

Table read_table(const std::string& path, bool has_header, char delimiter) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path + "'");
  Table table;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split(line, delimiter);
    if (first) {
      width = cells.size();
      first = false;
      if (has_header) {
        table.header = std::move(cells);
        continue;
      }
    } else if (cells.size() != width) {
      fail(ErrorCode::kParse, path + ": line " + std::to_string(line_no) + " has " +
                                  std::to_string(cells.size()) + " fields, expected " +
                                  std::to_string(width));
    }
    table.rows.push_back(std::move(cells));
    table.line_numbers.push_back(line_no);
  }
  return table;
}

double cell_value(const Table& table, const std::string& path, std::size_t row,
                  std::size_t col) {
  const std::string& text = table.rows[row][col];
  double value = 0.0;
  if (!parse_double(text, value)) {
    fail(ErrorCode::kParse, path + ": non-numeric cell '" + text + "' at line " +
                                std::to_string(table.line_numbers[row]) + ", column " +
                                std::to_string(col + 1));
  }
  return value;
}

}  // namespace

TimeSeriesDataset load_csv(const std::string& path, const CsvOptions& options) {
  const Table table = read_table(path, options.has_header, options.delimiter);
  if (table.rows.empty()) fail(ErrorCode::kParse, path + ": no data rows");
  const std::size_t width = table.rows.front().size();

  std::optional<std::size_t> replicate_col;
  if (options.has_header && !options.replicate_column.empty()) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (table.header[c] == options.replicate_column) replicate_col = c;
    }
  }
  const std::size_t n = width - (replicate_col ? 1 : 0);
  if (n == 0) fail(ErrorCode::kParse, path + ": no variable columns");

  TimeSeriesDataset ds;
  for (std::size_t c = 0; c < width; ++c) {
    if (replicate_col && c == *replicate_col) continue;
    ds.variable_names.push_back(options.has_header ? table.header[c]
                                                   : "X" + std::to_string(ds.variable_names.size() + 1));
  }

  std::vector<double> block;
  std::size_t block_rows = 0;
  std::string current_id;
  auto flush = [&]() {
    if (block_rows == 0) return;
    ds.replicates.emplace_back(std::vector<std::size_t>{block_rows, n}, std::move(block));
    block.clear();
    block_rows = 0;
  };
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (replicate_col) {
      const std::string& id = table.rows[r][*replicate_col];
      if (r == 0) current_id = id;
      if (id != current_id) {
        flush();
        current_id = id;
      }
    }
    for (std::size_t c = 0; c < width; ++c) {
      if (replicate_col && c == *replicate_col) continue;
      block.push_back(cell_value(table, path, r, c));
    }
    ++block_rows;
  }
  flush();
  return ds;
}

TimeSeriesDataset load_csv_replicates(std::span<const std::string> paths,
                                      const CsvOptions& options) {
  if (paths.empty()) fail(ErrorCode::kIo, "no input files given");
  TimeSeriesDataset merged;
  for (const std::string& path : paths) {
    TimeSeriesDataset part = load_csv(path, options);
    if (merged.replicates.empty()) {
      merged.variable_names = part.variable_names;
    } else if (part.variable_names != merged.variable_names) {
      fail(ErrorCode::kParse, path + ": columns differ from the first file");
    }
    for (Tensor& r : part.replicates) merged.replicates.push_back(std::move(r));
  }
  return merged;
}

void save_csv(const TimeSeriesDataset& dataset, const std::string& path, char delimiter) {
  dataset.validate();
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write '" + path + "'");
  const bool multi = dataset.replicates.size() > 1;
  const std::size_t n = dataset.variables();
  std::vector<std::string> names = dataset.variable_names;
  for (std::size_t i = names.size(); i < n; ++i) names.push_back("X" + std::to_string(i + 1));
  if (multi) out << "replicate" << delimiter;
  for (std::size_t i = 0; i < n; ++i) out << (i ? std::string(1, delimiter) : "") << names[i];
  out << '\n';
  for (std::size_t r = 0; r < dataset.replicates.size(); ++r) {
    const Tensor& x = dataset.replicates[r];
    for (std::size_t t = 0; t < x.rows(); ++t) {
      if (multi) out << r << delimiter;
      for (std::size_t i = 0; i < n; ++i) {
        if (i) out << delimiter;
        out << format_double(x(t, i));
      }
      out << '\n';
    }
  }
  if (!out) fail(ErrorCode::kIo, "failed writing '" + path + "'");
}

GroundTruthGraph load_truth_csv(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) fail(ErrorCode::kIo, "cannot open '" + path + "'");
  std::string first_line;
  std::getline(probe, first_line);
  probe.close();
  bool header = false;
  for (const std::string& cell : split(first_line, ',')) {
    double v = 0.0;
    if (!parse_double(cell, v)) header = true;
  }
  const Table table = read_table(path, header, ',');
  const std::size_t n = table.rows.size();
  if (n == 0) fail(ErrorCode::kParse, path + ": empty truth matrix");
  GroundTruthGraph g = GroundTruthGraph::empty(n);
  for (std::size_t r = 0; r < n; ++r) {
    if (table.rows[r].size() != n) {
      fail(ErrorCode::kParse, path + ": truth matrix is not square at line " +
                                  std::to_string(table.line_numbers[r]));
    }
    for (std::size_t c = 0; c < n; ++c) {
      const double v = cell_value(table, path, r, c);
      if (v != 0.0 && v != 1.0) {
        fail(ErrorCode::kParse, path + ": truth entry at line " +
                                    std::to_string(table.line_numbers[r]) + ", column " +
                                    std::to_string(c + 1) + " is not 0 or 1");
      }
      g.set_link(r, c, v == 1.0);
    }
  }
  return g;
}

void save_truth_csv(const GroundTruthGraph& truth, const std::string& path,
                    std::span<const std::string> names) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write '" + path + "'");
  if (!names.empty()) {
    for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
    out << '\n';
  }
  for (std::size_t i = 0; i < truth.variables; ++i) {
    for (std::size_t j = 0; j < truth.variables; ++j) {
      out << (j ? "," : "") << (truth.link(i, j) ? 1 : 0);
    }
    out << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "failed writing '" + path + "'");
}

}  // namespace navar
