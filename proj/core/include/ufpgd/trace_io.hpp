#pragma once

#include <string>
#include <vector>

#include "ufpgd/pgd.hpp"

namespace ufpgd {

// CSV schema shared by solver traces, per-layer evaluation curves and
// training curves exported as traces:
//   run_id,index,lagrangian,residual,pcg,sum_rate,active_columns
// Numeric cells carry 17 significant digits, enough to round-trip
// doubles exactly up to decimal formatting.
struct TraceRow {
  std::string run_id;
  TraceRecord record;
};

std::string format_trace_csv(const std::vector<TraceRow>& rows);

// Atomic: written to a temp file in the target directory, then renamed.
void write_trace_csv(const std::string& path,
                     const std::vector<TraceRow>& rows);

// Throws DataFormatError on a malformed header or row.
std::vector<TraceRow> read_trace_csv(const std::string& path);

// Writes `contents` so that `path` never holds a partial file.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

}  // namespace ufpgd
