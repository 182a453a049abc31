#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "scmtagg/cli.hpp"

namespace scmtagg::cli {

namespace {

constexpr std::string_view kHeader = "unit,period,subperiod,outcome,treated";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::int64_t parse_index(std::string_view field, std::size_t line, const char* name) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || v <= 0) {
    throw Error::at_line(ErrorCode::ParseError, line,
                         std::string(name) + " '" + std::string(field) + "' is not a positive integer");
  }
  return v;
}

double parse_outcome(std::string_view field, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error::at_line(ErrorCode::ParseError, line,
                         "outcome '" + std::string(field) + "' is not a number");
  }
  return v;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace

std::string format_number(double x) {
  if (x == 0.0) return "0";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

std::vector<RawObservation> read_csv_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());

  std::vector<RawObservation> records;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (!header_seen) {
      if (view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
      if (view != kHeader) {
        throw Error::at_line(ErrorCode::ParseError, line_no,
                             "expected header '" + std::string(kHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    if (view.empty()) continue;
    const auto fields = split(view);
    if (fields.size() != 5) {
      throw Error::at_line(ErrorCode::ParseError, line_no,
                           "expected 5 fields, found " + std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw Error::at_line(ErrorCode::ParseError, line_no, "empty unit label");
    RawObservation rec;
    rec.unit = std::string(fields[0]);
    rec.period = parse_index(fields[1], line_no, "period");
    rec.subperiod = parse_index(fields[2], line_no, "subperiod");
    rec.outcome = parse_outcome(fields[3], line_no);
    if (fields[4] == "1") {
      rec.treated = true;
    } else if (fields[4] != "0") {
      throw Error::at_line(ErrorCode::ParseError, line_no,
                           "treated must be 0 or 1, got '" + std::string(fields[4]) + "'");
    }
    records.push_back(std::move(rec));
  }
  if (!header_seen) throw Error::at_line(ErrorCode::ParseError, 1, "file is empty");
  return records;
}

PanelData ingest_csv(const std::filesystem::path& path, std::size_t t0,
                     const std::optional<std::string>& treated_unit) {
  std::vector<RawObservation> records = read_csv_records(path);
  if (treated_unit) {
    bool found = false;
    for (auto& rec : records) {
      rec.treated = rec.unit == *treated_unit;
      found = found || rec.treated;
    }
    if (!found) throw Error(ErrorCode::NoTreated, "treated unit '" + *treated_unit + "' not in input");
  }
  try {
    return validate_panel(records, t0);
  } catch (const Error& e) {
    if (e.cell()) throw Error(e.code(), path.string() + ": " + e.message(), *e.cell());
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

void write_effects_csv(const std::filesystem::path& path, const std::vector<EffectEstimate>& effects) {
  std::ofstream out = open_output(path);
  out << "period,subperiod,observed,imputed,effect\n";
  for (const auto& e : effects) {
    out << e.period << ',' << e.subperiod << ',' << format_number(e.observed) << ','
        << format_number(e.imputed) << ',' << format_number(e.effect) << '\n';
  }
  finish(out, path);
}

void write_frontier_csv(const std::filesystem::path& path, const std::vector<FrontierPoint>& points) {
  std::ofstream out = open_output(path);
  out << "nu,rmse_dis,rmse_agg\n";
  for (const auto& p : points) {
    out << format_number(p.nu) << ',' << format_number(p.rmse_dis) << ',' << format_number(p.rmse_agg)
        << '\n';
  }
  finish(out, path);
}

void write_placebo_csv(const std::filesystem::path& path, const std::vector<PlaceboSeries>& placebos) {
  std::ofstream out = open_output(path);
  out << "unit,period,subperiod,effect\n";
  for (const auto& p : placebos) {
    for (const auto& e : p.effects) {
      out << p.unit << ',' << e.period << ',' << e.subperiod << ',' << format_number(e.effect) << '\n';
    }
  }
  finish(out, path);
}

}  // namespace scmtagg::cli
