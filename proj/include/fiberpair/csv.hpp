#pragma once

// Plot-ready CSV tables for the counting and fringe runs.
//
// Numbers are written in the shortest decimal form that parses back to the
// same double, so a written table reads back bit-for-bit. UTF-8, LF endings,
// header row first.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fiberpair/analysis.hpp"
#include "fiberpair/errors.hpp"
#include "fiberpair/experiments.hpp"
#include "fiberpair/text.hpp"

namespace fiberpair {

inline std::string format_number(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw IoError("cannot format number");
  return std::string(buf.data(), ptr);
}

inline std::string format_number(std::uint64_t value) { return std::to_string(value); }

inline constexpr std::array<std::string_view, 11> kCountsColumns = {
    "pump_photons",        "gates",                "singles_signal",           "singles_idler",
    "coinc_same",          "coinc_delayed",        "rate_signal_per_gate",     "rate_idler_per_gate",
    "coinc_rate_per_gate", "accidental_rate_per_gate", "pairs_per_second"};

inline constexpr std::array<std::string_view, 9> kFringeColumns = {
    "phase_rad",     "gates",         "singles_signal",      "singles_idler",      "coinc_same",
    "coinc_delayed", "coinc_corrected", "coinc_corrected_err", "classical_reference"};

struct CountsRow {
  double pump_photons = 0.0;
  std::uint64_t gates = 0;
  std::uint64_t singles_signal = 0;
  std::uint64_t singles_idler = 0;
  std::uint64_t coinc_same = 0;
  std::uint64_t coinc_delayed = 0;
  double rate_signal_per_gate = 0.0;
  double rate_idler_per_gate = 0.0;
  double coinc_rate_per_gate = 0.0;
  double accidental_rate_per_gate = 0.0;
  double pairs_per_second = 0.0;  ///< same-gate coincidence rate times the repetition rate
};

struct FringeRow {
  double phase_rad = 0.0;
  std::uint64_t gates = 0;
  std::uint64_t singles_signal = 0;
  std::uint64_t singles_idler = 0;
  std::uint64_t coinc_same = 0;
  std::uint64_t coinc_delayed = 0;
  double coinc_corrected = 0.0;
  double coinc_corrected_err = 0.0;
  double classical_reference = 0.0;
};

inline std::vector<CountsRow> make_counts_rows(const std::vector<CountingPoint>& points, double rep_rate_hz) {
  std::vector<CountsRow> rows;
  rows.reserve(points.size());
  for (const auto& p : points) {
    const auto& c = p.counts;
    rows.push_back({p.pump_photons, c.gates_total, c.singles_signal, c.singles_idler, c.coinc_same_pulse,
                    c.coinc_delayed, c.rate_signal(), c.rate_idler(), c.coinc_rate(),
                    c.rate_signal() * c.rate_idler(), c.coinc_rate() * rep_rate_hz});
  }
  return rows;
}

inline std::vector<FringeRow> make_fringe_rows(const FringeScanResult& scan) {
  std::vector<FringeRow> rows;
  rows.reserve(scan.points.size());
  for (const auto& p : scan.points) {
    const auto& c = p.counts;
    const auto corrected =
        subtract_accidentals(static_cast<double>(c.coinc_same_pulse), static_cast<double>(c.coinc_delayed));
    rows.push_back({p.phase, c.gates_total, c.singles_signal, c.singles_idler, c.coinc_same_pulse, c.coinc_delayed,
                    corrected.value, corrected.error, p.classical_reference});
  }
  return rows;
}

namespace detail {

template <std::size_t N>
std::string header_line(const std::array<std::string_view, N>& columns) {
  std::string out;
  for (std::size_t i = 0; i < N; ++i) {
    if (i) out += ',';
    out += columns[i];
  }
  return out + '\n';
}

template <class... Ts>
std::string csv_line(const Ts&... values) {
  std::string out;
  ((out += (out.empty() ? "" : ","), out += format_number(values)), ...);
  return out + '\n';
}

}  // namespace detail

inline std::string counts_csv(const std::vector<CountsRow>& rows) {
  std::string out = detail::header_line(kCountsColumns);
  for (const auto& r : rows) {
    out += detail::csv_line(r.pump_photons, r.gates, r.singles_signal, r.singles_idler, r.coinc_same,
                            r.coinc_delayed, r.rate_signal_per_gate, r.rate_idler_per_gate, r.coinc_rate_per_gate,
                            r.accidental_rate_per_gate, r.pairs_per_second);
  }
  return out;
}

inline std::string fringes_csv(const std::vector<FringeRow>& rows) {
  std::string out = detail::header_line(kFringeColumns);
  for (const auto& r : rows) {
    out += detail::csv_line(r.phase_rad, r.gates, r.singles_signal, r.singles_idler, r.coinc_same, r.coinc_delayed,
                            r.coinc_corrected, r.coinc_corrected_err, r.classical_reference);
  }
  return out;
}

/// Header-keyed CSV table with string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.emplace_back(detail::trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                           : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (table.header.empty()) {
      table.header = std::move(cells);
    } else {
      if (cells.size() != table.header.size()) {
        throw IoError("line " + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                      " cells, found " + std::to_string(cells.size()));
      }
      table.rows.push_back(std::move(cells));
    }
  }
  if (table.header.empty()) throw IoError("CSV input is empty");
  return table;
}

namespace detail {

template <std::size_t N>
std::map<std::string, std::size_t> check_schema(const CsvTable& table, const std::array<std::string_view, N>& expected) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < table.header.size(); ++i) index[table.header[i]] = i;
  std::vector<std::string> missing, extra;
  for (auto col : expected) {
    if (!index.contains(std::string(col))) missing.emplace_back(col);
  }
  for (const auto& [name, i] : index) {
    bool known = false;
    for (auto col : expected) known = known || col == name;
    if (!known) extra.push_back(name);
  }
  if (index.size() != table.header.size()) throw IoError("schema error: duplicate column names");
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "schema error:";
    if (!missing.empty()) {
      msg += " missing columns";
      for (const auto& m : missing) msg += " " + m;
      if (!extra.empty()) msg += ";";
    }
    if (!extra.empty()) {
      msg += " unexpected columns";
      for (const auto& e : extra) msg += " " + e;
    }
    throw IoError(msg);
  }
  return index;
}

inline double cell_double(const std::vector<std::string>& row, std::size_t i, std::size_t row_no) {
  double v = 0.0;
  const auto& s = row[i];
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw IoError("row " + std::to_string(row_no) + ": '" + s + "' is not a number");
  }
  return v;
}

inline std::uint64_t cell_u64(const std::vector<std::string>& row, std::size_t i, std::size_t row_no) {
  std::uint64_t v = 0;
  const auto& s = row[i];
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw IoError("row " + std::to_string(row_no) + ": '" + s + "' is not a non-negative integer");
  }
  return v;
}

}  // namespace detail

inline std::vector<CountsRow> read_counts_csv(std::string_view text) {
  const CsvTable table = parse_csv(text);
  const auto col = detail::check_schema(table, kCountsColumns);
  std::vector<CountsRow> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    auto d = [&](const char* name) { return detail::cell_double(cells, col.at(name), r + 1); };
    auto u = [&](const char* name) { return detail::cell_u64(cells, col.at(name), r + 1); };
    rows.push_back({d("pump_photons"), u("gates"), u("singles_signal"), u("singles_idler"), u("coinc_same"),
                    u("coinc_delayed"), d("rate_signal_per_gate"), d("rate_idler_per_gate"),
                    d("coinc_rate_per_gate"), d("accidental_rate_per_gate"), d("pairs_per_second")});
    if (rows.back().gates == 0) throw IoError("row " + std::to_string(r + 1) + ": gates must be > 0");
  }
  return rows;
}

inline std::vector<FringeRow> read_fringes_csv(std::string_view text) {
  const CsvTable table = parse_csv(text);
  const auto col = detail::check_schema(table, kFringeColumns);
  std::vector<FringeRow> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    auto d = [&](const char* name) { return detail::cell_double(cells, col.at(name), r + 1); };
    auto u = [&](const char* name) { return detail::cell_u64(cells, col.at(name), r + 1); };
    rows.push_back({d("phase_rad"), u("gates"), u("singles_signal"), u("singles_idler"), u("coinc_same"),
                    u("coinc_delayed"), d("coinc_corrected"), d("coinc_corrected_err"), d("classical_reference")});
    if (rows.back().gates == 0) throw IoError("row " + std::to_string(r + 1) + ": gates must be > 0");
  }
  return rows;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Writes through a temporary sibling and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace fiberpair
