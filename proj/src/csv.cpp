#include "cofd/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace cofd::csv {

namespace {

[[noreturn]] void mismatch(const std::string& message) { throw Error(Errc::SchemaMismatch, message); }

void append_double(std::string& out, double value) {
  std::array<char, 32> buffer{};
  const auto [end, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  if (ec != std::errc()) throw Error(Errc::NonFinite, "cannot format value");
  out.append(buffer.data(), end);
}

void append_vector(std::string& out, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(',');
    append_double(out, v(i));
  }
}

std::string numbered(std::string_view prefix, int count) {
  std::string out;
  for (int i = 1; i <= count; ++i) {
    out += ',';
    out += prefix;
    out += std::to_string(i);
  }
  return out;
}

// Lines of a document; every line, including the last, must end in '\n'.
std::vector<std::string_view> lines_of(std::string_view document, std::string_view what) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < document.size()) {
    const auto end = document.find('\n', start);
    if (end == std::string_view::npos) mismatch(std::string(what) + ": last line is not terminated");
    lines.push_back(document.substr(start, end - start));
    start = end + 1;
  }
  if (lines.empty()) mismatch(std::string(what) + ": empty document");
  return lines;
}

}  // namespace

std::string format_double(double value) {
  std::string out;
  append_double(out, value);
  return out;
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) mismatch("not a number: '" + std::string(text) + "'");
  return value;
}

long long parse_int(std::string_view text) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) mismatch("not an integer: '" + std::string(text) + "'");
  return value;
}

std::vector<std::string_view> split(std::string_view line, char separator) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto end = line.find(separator, start);
    if (end == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, end - start));
    start = end + 1;
  }
}

std::string trace_header(int n, int m, int k) {
  return "time" + numbered("x", n) + numbered("u", m) + numbered("tau_c", k) + numbered("tau", k) + ",phase,alloc\n";
}

std::string trace_csv(const TraceLog& log) {
  if (log.steps() == 0) return trace_header(0, 0, 0);
  std::string out = trace_header(static_cast<int>(log.x.front().size()), static_cast<int>(log.u.front().size()),
                                 static_cast<int>(log.tau_c.front().size()));
  for (std::size_t i = 0; i < log.steps(); ++i) {
    append_double(out, log.time[i]);
    append_vector(out, log.x[i]);
    append_vector(out, log.u[i]);
    append_vector(out, log.tau_c[i]);
    append_vector(out, log.tau[i]);
    out += ',' + std::to_string(log.phase[i]) + ',';
    out += to_string(log.allocation[i]);
    out += '\n';
  }
  return out;
}

std::size_t trace_rows(const std::string& document, int n, int m, int k) {
  const auto lines = lines_of(document, "trace");
  if (std::string(lines.front()) + "\n" != trace_header(n, m, k)) mismatch("trace: unexpected header");
  const std::size_t columns = static_cast<std::size_t>(1 + n + m + 2 * k + 2);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (split(lines[i], ',').size() != columns) mismatch("trace: row " + std::to_string(i) + " has the wrong width");
  }
  return lines.size() - 1;
}

std::string decisions_header() { return "time,phase,status,hypotheses,escalate,signatures\n"; }

std::string decisions_csv(const std::vector<Decision>& decisions) {
  std::string out = decisions_header();
  for (const auto& d : decisions) {
    append_double(out, d.time);
    out += ',' + std::to_string(d.phase) + ',';
    out += to_string(d.status);
    out += ',';
    for (std::size_t i = 0; i < d.hypotheses.size(); ++i) {
      if (i) out += ';';
      out += d.hypotheses[i];
    }
    out += d.escalate ? ",1," : ",0,";
    for (std::size_t h = 0; h < d.signatures.size(); ++h) {
      if (h) out += '|';
      out += pattern_string(d.signatures[h]);
    }
    out += '\n';
  }
  return out;
}

std::string residual_header(int p) { return "time,phase" + numbered("r", p) + "\n"; }

std::vector<std::string> residual_csvs(const TraceLog& log) {
  std::size_t slots = 0;
  int p = 0;
  for (const auto& step : log.residuals) {
    slots = std::max(slots, step.size());
    if (!step.empty()) p = static_cast<int>(step.front().size());
  }
  std::vector<std::string> docs(slots, residual_header(p));
  for (std::size_t k = 0; k < log.steps(); ++k) {
    for (std::size_t h = 0; h < log.residuals[k].size(); ++h) {
      auto& out = docs[h];
      append_double(out, log.time[k]);
      out += ',' + std::to_string(log.phase[k]);
      append_vector(out, log.residuals[k][h]);
      out += '\n';
    }
  }
  return docs;
}

ResidualStream parse_residuals(const std::vector<std::string>& documents, int p,
                               const std::function<int(int)>& bank_size) {
  if (documents.empty()) mismatch("no residual files");
  const std::string header = residual_header(p);
  struct Row {
    std::string_view time;
    int phase;
    Vector r;
  };
  std::vector<std::vector<Row>> files;
  for (std::size_t h = 0; h < documents.size(); ++h) {
    const std::string what = "residual_" + std::to_string(h + 1);
    const auto lines = lines_of(documents[h], what);
    if (std::string(lines.front()) + "\n" != header) mismatch(what + ": unexpected header");
    std::vector<Row> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto fields = split(lines[i], ',');
      if (fields.size() != static_cast<std::size_t>(2 + p)) {
        mismatch(what + ": row " + std::to_string(i) + " has the wrong width");
      }
      Row row{fields[0], static_cast<int>(parse_int(fields[1])), Vector(p)};
      for (int q = 0; q < p; ++q) row.r(q) = parse_double(fields[static_cast<std::size_t>(2 + q)]);
      rows.push_back(std::move(row));
    }
    files.push_back(std::move(rows));
  }

  ResidualStream stream;
  std::vector<std::size_t> cursor(files.size(), 0);
  for (const auto& master : files.front()) {
    const int size = bank_size(master.phase);
    if (size < 1 || static_cast<std::size_t>(size) > files.size()) {
      mismatch("phase " + std::to_string(master.phase) + " needs " + std::to_string(size) + " residual files");
    }
    std::vector<Vector> step;
    for (int h = 0; h < size; ++h) {
      auto& at = cursor[static_cast<std::size_t>(h)];
      const auto& rows = files[static_cast<std::size_t>(h)];
      if (at >= rows.size() || rows[at].time != master.time || rows[at].phase != master.phase) {
        mismatch("residual_" + std::to_string(h + 1) + " is missing the row at t=" + std::string(master.time));
      }
      step.push_back(rows[at].r);
      ++at;
    }
    stream.time.push_back(parse_double(master.time));
    stream.phase.push_back(master.phase);
    stream.residuals.push_back(std::move(step));
  }
  for (std::size_t h = 0; h < files.size(); ++h) {
    if (cursor[h] != files[h].size()) mismatch("residual_" + std::to_string(h + 1) + " has unmatched rows");
  }
  return stream;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ConfigError, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::ConfigError, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(Errc::ConfigError, "write failed for " + path.string());
}

}  // namespace cofd::csv
