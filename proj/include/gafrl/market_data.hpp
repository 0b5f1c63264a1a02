#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace gafrl {

class KeyValueConfig;

struct Candle {
  std::int64_t timestamp = 0;  // seconds since epoch
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  double volume = 0.0;

  double body() const;
  double range() const { return high - low; }
  double upper_shadow() const;
  double lower_shadow() const;
  bool bullish() const { return close > open; }
  bool bearish() const { return close < open; }

  bool operator==(const Candle&) const = default;
};

// Throws ValidationError naming `where` if any OHLCV invariant fails.
// Bounds are checked exactly, without an epsilon.
void validate_candle(const Candle& c, const std::string& where);

// An immutable, validated bar sequence. Timestamps strictly increase; a step
// that differs from bar_interval is recorded as a gap rather than filled.
class CandleSeries {
 public:
  // bar_interval == 0 infers the interval as the smallest timestamp step.
  explicit CandleSeries(std::vector<Candle> bars, std::int64_t bar_interval = 0);

  std::span<const Candle> bars() const { return bars_; }
  const Candle& operator[](std::size_t i) const { return bars_[i]; }
  std::size_t size() const { return bars_.size(); }
  std::int64_t bar_interval() const { return bar_interval_; }

  // Indices i such that bars[i].timestamp - bars[i-1].timestamp != interval.
  const std::vector<std::size_t>& gaps() const { return gaps_; }
  bool has_gap_between(std::size_t first, std::size_t last) const;

  // Bars [first, last) as a new series with the same interval.
  CandleSeries slice(std::size_t first, std::size_t last) const;

  // Bars whose timestamps fall in [from, to] inclusive.
  CandleSeries between(std::int64_t from, std::int64_t to) const;

 private:
  std::vector<Candle> bars_;
  std::int64_t bar_interval_ = 0;
  std::vector<std::size_t> gaps_;
};

// Exactly `size` consecutive bars of a parent series.
class Window {
 public:
  Window(std::vector<Candle> bars, std::size_t origin_index);

  std::span<const Candle> bars() const { return bars_; }
  const Candle& operator[](std::size_t i) const { return bars_[i]; }
  std::size_t size() const { return bars_.size(); }
  std::size_t origin_index() const { return origin_; }

  std::vector<double> opens() const;
  std::vector<double> highs() const;
  std::vector<double> lows() const;
  std::vector<double> closes() const;

 private:
  std::vector<Candle> bars_;
  std::size_t origin_;
};

// Column names and series policy for CSV ingestion.
struct CsvSchema {
  std::string timestamp_column = "timestamp";
  std::string open_column = "open";
  std::string high_column = "high";
  std::string low_column = "low";
  std::string close_column = "close";
  std::string volume_column = "volume";
  std::int64_t bar_interval = 0;  // 0 = infer
  bool allow_gaps = true;         // false turns any gap into an OrderingError

  // Reads csv.timestamp, csv.open, ..., csv.bar_interval, csv.allow_gaps.
  static CsvSchema from_config(const KeyValueConfig& cfg);
};

// Splits one CSV record honoring RFC 4180 quoting (no embedded newlines).
std::vector<std::string> split_csv_record(std::string_view line, std::size_t line_no);

CandleSeries parse_csv(const std::string& path, const CsvSchema& schema = {});
CandleSeries parse_csv(std::istream& in, const CsvSchema& schema = {});

// Writes a header and one row per bar using the shortest round-trip
// representation of every double.
void write_csv(const CandleSeries& series, const std::string& path);
void write_csv(const CandleSeries& series, std::ostream& out);

// Windows at origins 0..size-W-1; bar origin+W stays available as the next
// bar. With skip_gaps, windows whose bars or next bar straddle a timestamp
// gap are dropped.
std::vector<Window> make_windows(const CandleSeries& series, std::size_t window,
                                 bool skip_gaps = true);

// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace gafrl
