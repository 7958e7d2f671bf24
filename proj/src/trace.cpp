#include "s3gd/trace.hpp"

#include "s3gd/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>

namespace s3gd {

void Trace::validate() const {
  for (std::size_t t = 1; t < records.size(); ++t) {
    if (records[t].iter <= records[t - 1].iter) throw ValidationError("trace iterations not strictly increasing");
    if (records[t].wall_s < records[t - 1].wall_s) throw ValidationError("trace wall times decrease");
  }
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

namespace {

void put_optional(std::ostream& out, const std::optional<double>& v) {
  out << ',';
  if (v) out << format_number(*v);
}

std::optional<double> parse_field(std::string_view tok, std::size_t line, bool required) {
  if (tok.empty()) {
    if (required) throw ParseError("missing required field", line);
    return std::nullopt;
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError("bad number '" + std::string(tok) + "'", line);
  return v;
}

}  // namespace

std::string format_trace_csv(const Trace& trace) {
  std::ostringstream out;
  out << kTraceHeader << '\n';
  for (const auto& r : trace.records) {
    out << r.iter << ',' << format_number(r.wall_s) << ',' << format_number(r.train_obj);
    put_optional(out, r.test_obj);
    put_optional(out, r.grad_corr);
    put_optional(out, r.est_var);
    out << '\n';
  }
  return out.str();
}

void write_trace_csv(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << format_trace_csv(trace);
}

Trace parse_trace_csv(const std::string& text) {
  Trace trace;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kTraceHeader) throw ParseError("unexpected trace header", 1);
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 6) throw ParseError("expected 6 fields", line_no);
    TraceRecord r;
    std::int64_t it = 0;
    auto [ptr, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), it);
    if (ec != std::errc() || ptr != f[0].data() + f[0].size()) throw ParseError("bad iteration index", line_no);
    r.iter = it;
    r.wall_s = *parse_field(f[1], line_no, true);
    r.train_obj = *parse_field(f[2], line_no, true);
    r.test_obj = parse_field(f[3], line_no, false);
    r.grad_corr = parse_field(f[4], line_no, false);
    r.est_var = parse_field(f[5], line_no, false);
    trace.records.push_back(r);
  }
  if (line_no == 0) throw ParseError("empty trace file", 0);
  if (!trace.records.empty()) trace.iterations = trace.records.back().iter;
  return trace;
}

Trace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace_csv(buf.str());
}

}  // namespace s3gd
