#include "gafrl/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_map>

#include "gafrl/config.hpp"
#include "gafrl/errors.hpp"

namespace gafrl {

double Candle::body() const { return std::abs(close - open); }
double Candle::upper_shadow() const { return high - std::max(open, close); }
double Candle::lower_shadow() const { return std::min(open, close) - low; }

void validate_candle(const Candle& c, const std::string& where) {
  const double prices[] = {c.open, c.high, c.low, c.close};
  for (double p : prices) {
    if (!std::isfinite(p) || !(p > 0.0)) {
      throw ValidationError("non-positive or non-finite price at " + where);
    }
  }
  if (!std::isfinite(c.volume) || c.volume < 0.0) {
    throw ValidationError("negative or non-finite volume at " + where);
  }
  if (c.high < c.low) throw ValidationError("high < low at " + where);
  if (c.low > std::min(c.open, c.close)) {
    throw ValidationError("low above open/close at " + where);
  }
  if (c.high < std::max(c.open, c.close)) {
    throw ValidationError("high below open/close at " + where);
  }
}

CandleSeries::CandleSeries(std::vector<Candle> bars, std::int64_t bar_interval)
    : bars_(std::move(bars)), bar_interval_(bar_interval) {
  if (bars_.empty()) throw InsufficientDataError("empty candle series");
  if (bar_interval_ < 0) throw ValidationError("negative bar interval");
  for (std::size_t i = 0; i < bars_.size(); ++i) {
    validate_candle(bars_[i], "bar " + std::to_string(i));
    if (i > 0 && bars_[i].timestamp <= bars_[i - 1].timestamp) {
      throw OrderingError("timestamps not strictly increasing at bar " +
                          std::to_string(i));
    }
  }
  if (bar_interval_ == 0 && bars_.size() > 1) {
    std::int64_t step = std::numeric_limits<std::int64_t>::max();
    for (std::size_t i = 1; i < bars_.size(); ++i) {
      step = std::min(step, bars_[i].timestamp - bars_[i - 1].timestamp);
    }
    bar_interval_ = step;
  }
  for (std::size_t i = 1; i < bars_.size(); ++i) {
    if (bars_[i].timestamp - bars_[i - 1].timestamp != bar_interval_) {
      gaps_.push_back(i);
    }
  }
}

bool CandleSeries::has_gap_between(std::size_t first, std::size_t last) const {
  // A gap at index i sits between bars i-1 and i.
  const auto it = std::upper_bound(gaps_.begin(), gaps_.end(), first);
  return it != gaps_.end() && *it <= last;
}

CandleSeries CandleSeries::slice(std::size_t first, std::size_t last) const {
  if (first >= last || last > bars_.size()) {
    throw InsufficientDataError("invalid slice [" + std::to_string(first) + ", " +
                                std::to_string(last) + ")");
  }
  return CandleSeries(
      std::vector<Candle>(bars_.begin() + static_cast<std::ptrdiff_t>(first),
                          bars_.begin() + static_cast<std::ptrdiff_t>(last)),
      bar_interval_);
}

CandleSeries CandleSeries::between(std::int64_t from, std::int64_t to) const {
  std::vector<Candle> out;
  for (const auto& c : bars_) {
    if (c.timestamp >= from && c.timestamp <= to) out.push_back(c);
  }
  if (out.empty()) {
    throw InsufficientDataError("no bars in timestamp range [" +
                                std::to_string(from) + ", " + std::to_string(to) +
                                "]");
  }
  return CandleSeries(std::move(out), bar_interval_);
}

Window::Window(std::vector<Candle> bars, std::size_t origin_index)
    : bars_(std::move(bars)), origin_(origin_index) {
  if (bars_.size() < 2) throw InsufficientDataError("window needs at least 2 bars");
}

namespace {

template <typename F>
std::vector<double> column(std::span<const Candle> bars, F f) {
  std::vector<double> out;
  out.reserve(bars.size());
  for (const auto& c : bars) out.push_back(f(c));
  return out;
}

}  // namespace

std::vector<double> Window::opens() const {
  return column(bars_, [](const Candle& c) { return c.open; });
}
std::vector<double> Window::highs() const {
  return column(bars_, [](const Candle& c) { return c.high; });
}
std::vector<double> Window::lows() const {
  return column(bars_, [](const Candle& c) { return c.low; });
}
std::vector<double> Window::closes() const {
  return column(bars_, [](const Candle& c) { return c.close; });
}

CsvSchema CsvSchema::from_config(const KeyValueConfig& cfg) {
  CsvSchema s;
  s.timestamp_column = cfg.get_string("csv.timestamp", s.timestamp_column);
  s.open_column = cfg.get_string("csv.open", s.open_column);
  s.high_column = cfg.get_string("csv.high", s.high_column);
  s.low_column = cfg.get_string("csv.low", s.low_column);
  s.close_column = cfg.get_string("csv.close", s.close_column);
  s.volume_column = cfg.get_string("csv.volume", s.volume_column);
  s.bar_interval = cfg.get_int("csv.bar_interval", s.bar_interval);
  s.allow_gaps = cfg.get_bool("csv.allow_gaps", s.allow_gaps);
  return s;
}

std::vector<std::string> split_csv_record(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      if (!cur.empty() || was_quoted) {
        throw ParseError(line_no, "unexpected quote");
      }
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
      was_quoted = false;
    } else if (ch == '\r' && i + 1 == line.size()) {
      // tolerate CRLF line endings
    } else {
      if (was_quoted) throw ParseError(line_no, "text after closing quote");
      cur.push_back(ch);
    }
  }
  if (quoted) throw ParseError(line_no, "unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

namespace {

template <typename T>
T parse_number(const std::string& raw, std::size_t line_no, const std::string& what) {
  const std::string text = trim(raw);
  T out{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ParseError(line_no, "malformed " + what + " '" + raw + "'");
  }
  return out;
}

}  // namespace

CandleSeries parse_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);  // UTF-8 BOM

  const auto header = split_csv_record(line, line_no);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) index[trim(header[i])] = i;
  auto col = [&](const std::string& name) {
    const auto it = index.find(name);
    if (it == index.end()) throw ParseError(1, "header lacks column '" + name + "'");
    return it->second;
  };
  const std::size_t ts = col(schema.timestamp_column);
  const std::size_t op = col(schema.open_column);
  const std::size_t hi = col(schema.high_column);
  const std::size_t lo = col(schema.low_column);
  const std::size_t cl = col(schema.close_column);
  const std::size_t vo = col(schema.volume_column);
  const std::size_t needed = std::max({ts, op, hi, lo, cl, vo}) + 1;

  std::vector<Candle> bars;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_record(line, line_no);
    if (f.size() < needed) {
      throw ParseError(line_no, "expected at least " + std::to_string(needed) +
                                    " fields, got " + std::to_string(f.size()));
    }
    Candle c;
    c.timestamp = parse_number<std::int64_t>(f[ts], line_no, "timestamp");
    c.open = parse_number<double>(f[op], line_no, "open");
    c.high = parse_number<double>(f[hi], line_no, "high");
    c.low = parse_number<double>(f[lo], line_no, "low");
    c.close = parse_number<double>(f[cl], line_no, "close");
    c.volume = parse_number<double>(f[vo], line_no, "volume");
    const std::string where = "line " + std::to_string(line_no);
    validate_candle(c, where);
    if (!bars.empty() && c.timestamp <= bars.back().timestamp) {
      throw OrderingError("timestamp not strictly increasing at " + where);
    }
    bars.push_back(c);
  }
  if (bars.empty()) throw InsufficientDataError("CSV has no data rows");

  CandleSeries series(std::move(bars), schema.bar_interval);
  if (!schema.allow_gaps && !series.gaps().empty()) {
    throw OrderingError("timestamp gap before bar " +
                        std::to_string(series.gaps().front()));
  }
  return series;
}

CandleSeries parse_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV file " + path);
  return parse_csv(in, schema);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_csv(const CandleSeries& series, std::ostream& out) {
  out << "timestamp,open,high,low,close,volume\n";
  for (const auto& c : series.bars()) {
    out << c.timestamp << ',' << format_double(c.open) << ',' << format_double(c.high)
        << ',' << format_double(c.low) << ',' << format_double(c.close) << ','
        << format_double(c.volume) << '\n';
  }
}

void write_csv(const CandleSeries& series, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write CSV file " + path);
  write_csv(series, out);
}

std::vector<Window> make_windows(const CandleSeries& series, std::size_t window,
                                 bool skip_gaps) {
  if (window < 2) throw InsufficientDataError("window size must be at least 2");
  if (series.size() <= window) {
    throw InsufficientDataError("series of " + std::to_string(series.size()) +
                                " bars cannot fill a window of " +
                                std::to_string(window) + " plus a next bar");
  }
  std::vector<Window> out;
  const std::size_t count = series.size() - window;
  out.reserve(count);
  const auto bars = series.bars();
  for (std::size_t k = 0; k < count; ++k) {
    if (skip_gaps && series.has_gap_between(k, k + window)) continue;
    out.emplace_back(std::vector<Candle>(bars.begin() + static_cast<std::ptrdiff_t>(k),
                                         bars.begin() +
                                             static_cast<std::ptrdiff_t>(k + window)),
                     k);
  }
  return out;
}

}  // namespace gafrl
