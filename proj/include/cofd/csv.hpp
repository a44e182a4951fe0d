#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "cofd/fdi.hpp"
#include "cofd/simkit.hpp"

namespace cofd::csv {

// Shortest decimal that reads back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string_view> split(std::string_view line, char separator);

std::string trace_header(int n, int m, int k);
std::string trace_csv(const TraceLog& log);

std::string decisions_header();
std::string decisions_csv(const std::vector<Decision>& decisions);

std::string residual_header(int p);
// One document per observer slot h = 1..max bank size. Slot h only has rows
// for the steps whose active bank has at least h observers.
std::vector<std::string> residual_csvs(const TraceLog& log);

struct ResidualStream {
  std::vector<double> time;
  std::vector<int> phase;
  std::vector<std::vector<Vector>> residuals;  // per step, per observer
};

// Re-aligns residual documents. `bank_size(phase)` gives the number of
// observers active in a phase. Throws SchemaMismatch on any malformed,
// truncated or misaligned input.
ResidualStream parse_residuals(const std::vector<std::string>& documents, int p,
                               const std::function<int(int)>& bank_size);

// Number of data rows of a trace document (header validated).
std::size_t trace_rows(const std::string& document, int n, int m, int k);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace cofd::csv
