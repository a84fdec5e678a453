#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <boost/crc.hpp>

namespace lfpp {

/// One crossing-distance observation.
struct ResultRecord {
  int dim = 0;
  double xi = 0.0;
  int scale_index = 0;
  std::uint64_t seed = 0;
  double log_distance = 0.0;
  double wall_seconds = 0.0;

  friend bool operator==(const ResultRecord&, const ResultRecord&) = default;
};

using RecordKey = std::tuple<int, double, int, std::uint64_t>;

inline RecordKey key_of(const ResultRecord& r) { return {r.dim, r.xi, r.scale_index, r.seed}; }

inline constexpr std::string_view kRecordHeader = "d,xi,k,seed,log_distance,wall_seconds";

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

std::string to_csv_row(const ResultRecord& record);
ResultRecord parse_csv_row(std::string_view line);

/// Sorts by (d, xi, k, seed).
void sort_records(std::vector<ResultRecord>& records);

/// Append-only CSV store with a CRC-32 sidecar (`<file>.crc32`). The sidecar
/// holds the checksum and byte length of the acknowledged content; bytes past
/// that length (an append cut short) are discarded on open, anything else
/// that disagrees with the checksum is reported as corruption.
class RecordStore {
 public:
  explicit RecordStore(std::filesystem::path path);

  const std::filesystem::path& path() const noexcept { return path_; }
  const std::vector<ResultRecord>& records() const noexcept { return records_; }
  bool contains(const RecordKey& key) const { return keys_.count(key) != 0; }
  /// Discarded-tail bytes found when the store was opened.
  std::uintmax_t recovered_bytes() const noexcept { return recovered_bytes_; }

  /// Appends unless a record with the same key exists. Returns whether written.
  bool append(const ResultRecord& record);

  static std::filesystem::path sidecar_path(const std::filesystem::path& csv);

 private:
  void write_sidecar() const;

  std::filesystem::path path_;
  std::vector<ResultRecord> records_;
  std::set<RecordKey> keys_;
  boost::crc_32_type crc_;
  std::uintmax_t length_ = 0;
  std::uintmax_t recovered_bytes_ = 0;
};

/// Reads a store read-only, verifying its checksum.
std::vector<ResultRecord> read_records(const std::filesystem::path& csv);

}  // namespace lfpp
