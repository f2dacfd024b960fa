#include "ufpgd/trace_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ufpgd/errors.hpp"

namespace ufpgd {
namespace {

constexpr const char* kTraceHeader =
    "run_id,index,lagrangian,residual,pcg,sum_rate,active_columns";

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

double parse_double(const std::string& text) {
  std::size_t used = 0;
  double value = std::stod(text, &used);
  if (used != text.size()) {
    throw DataFormatError("trace CSV: bad numeric cell '" + text + "'");
  }
  return value;
}

}  // namespace

std::string format_trace_csv(const std::vector<TraceRow>& rows) {
  std::string out = kTraceHeader;
  out.push_back('\n');
  for (const TraceRow& row : rows) {
    out += row.run_id;
    out.push_back(',');
    out += std::to_string(row.record.index);
    out.push_back(',');
    out += format_double(row.record.lagrangian);
    out.push_back(',');
    out += format_double(row.record.residual);
    out.push_back(',');
    out += format_double(row.record.pcg);
    out.push_back(',');
    out += format_double(row.record.sum_rate);
    out.push_back(',');
    out += format_double(row.record.active_columns);
    out.push_back('\n');
  }
  return out;
}

void write_trace_csv(const std::string& path,
                     const std::vector<TraceRow>& rows) {
  write_file_atomic(path, format_trace_csv(rows));
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataFormatError("cannot open trace file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw DataFormatError("trace CSV: missing or wrong header in " + path);
  }
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields = split_fields(line);
    if (fields.size() != 7) {
      throw DataFormatError("trace CSV: expected 7 columns, got " +
                            std::to_string(fields.size()));
    }
    TraceRow row;
    row.run_id = fields[0];
    try {
      row.record.index = std::stol(fields[1]);
      row.record.lagrangian = parse_double(fields[2]);
      row.record.residual = parse_double(fields[3]);
      row.record.pcg = parse_double(fields[4]);
      row.record.sum_rate = parse_double(fields[5]);
      row.record.active_columns = parse_double(fields[6]);
    } catch (const std::logic_error&) {
      throw DataFormatError("trace CSV: unparsable row '" + line + "'");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  std::filesystem::path target(path);
  std::filesystem::path temp = target;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open for writing: " + temp.string());
    }
    out.write(contents.data(),
              static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      throw std::runtime_error("write failed: " + temp.string());
    }
  }
  std::filesystem::rename(temp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (!in.good() && !in.eof()) {
    throw std::runtime_error("read failed: " + path);
  }
  return buffer.str();
}

}  // namespace ufpgd
