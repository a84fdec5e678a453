#include "lfpp/records.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lfpp/error.hpp"

namespace lfpp {
namespace {

struct Sidecar {
  std::uint32_t crc = 0;
  std::uintmax_t length = 0;
};

std::string read_file(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) fail(ErrorKind::io, "cannot open " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::uint32_t crc_of(std::string_view bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

Sidecar read_sidecar(const std::filesystem::path& csv) {
  const auto p = RecordStore::sidecar_path(csv);
  std::ifstream is(p);
  if (!is) fail(ErrorKind::checksum_mismatch, "missing checksum file " + p.string());
  std::string hex;
  Sidecar s;
  if (!(is >> hex >> s.length) || hex.size() != 8) fail(ErrorKind::checksum_mismatch, "unreadable checksum file " + p.string());
  auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), s.crc, 16);
  if (ec != std::errc() || ptr != hex.data() + hex.size()) fail(ErrorKind::checksum_mismatch, "unreadable checksum file");
  return s;
}

std::vector<ResultRecord> parse_body(std::string_view text, const std::filesystem::path& p) {
  std::vector<ResultRecord> out;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (header) {
      if (line != kRecordHeader) fail(ErrorKind::io, p.string() + ": unexpected header");
      header = false;
      continue;
    }
    if (!line.empty()) out.push_back(parse_csv_row(line));
  }
  return out;
}

// Content up to the acknowledged length, after checking its checksum.
std::string_view verified_prefix(std::string_view text, const Sidecar& s, const std::filesystem::path& p) {
  if (s.length > text.size() || crc_of(text.substr(0, s.length)) != s.crc) {
    fail(ErrorKind::checksum_mismatch, "checksum mismatch for " + p.string());
  }
  return text.substr(0, s.length);
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) fail(ErrorKind::io, "cannot format number");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(ErrorKind::io, "not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::string to_csv_row(const ResultRecord& r) {
  std::string row = std::to_string(r.dim);
  row += ',' + format_double(r.xi);
  row += ',' + std::to_string(r.scale_index);
  row += ',' + std::to_string(r.seed);
  row += ',' + format_double(r.log_distance);
  row += ',' + format_double(r.wall_seconds);
  return row;
}

ResultRecord parse_csv_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    cells.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (cells.size() != 6) fail(ErrorKind::io, "record row needs 6 fields: '" + std::string(line) + "'");
  auto parse_int = [&](std::string_view s, auto& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail(ErrorKind::io, "bad integer '" + std::string(s) + "'");
  };
  ResultRecord r;
  parse_int(cells[0], r.dim);
  r.xi = parse_double(cells[1]);
  parse_int(cells[2], r.scale_index);
  parse_int(cells[3], r.seed);
  r.log_distance = parse_double(cells[4]);
  r.wall_seconds = parse_double(cells[5]);
  return r;
}

void sort_records(std::vector<ResultRecord>& records) {
  std::sort(records.begin(), records.end(),
            [](const ResultRecord& a, const ResultRecord& b) { return key_of(a) < key_of(b); });
}

std::filesystem::path RecordStore::sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p += ".crc32";
  return p;
}

RecordStore::RecordStore(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    const std::string header = std::string(kRecordHeader) + '\n';
    std::ofstream os(path_, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorKind::io, "cannot create " + path_.string());
    os << header;
    crc_.process_bytes(header.data(), header.size());
    length_ = header.size();
    write_sidecar();
    return;
  }
  const std::string text = read_file(path_);
  const Sidecar s = read_sidecar(path_);
  const std::string_view body = verified_prefix(text, s, path_);
  if (text.size() > body.size()) {
    recovered_bytes_ = text.size() - body.size();
    std::filesystem::resize_file(path_, body.size());
  }
  records_ = parse_body(body, path_);
  for (const auto& r : records_) keys_.insert(key_of(r));
  crc_.process_bytes(body.data(), body.size());
  length_ = s.length;
}

bool RecordStore::append(const ResultRecord& record) {
  if (!keys_.insert(key_of(record)).second) return false;
  const std::string row = to_csv_row(record) + '\n';
  {
    std::ofstream os(path_, std::ios::binary | std::ios::app);
    if (!os) fail(ErrorKind::io, "cannot append to " + path_.string());
    os << row;
    os.flush();
    if (!os) fail(ErrorKind::io, "append failed for " + path_.string());
  }
  crc_.process_bytes(row.data(), row.size());
  length_ += row.size();
  records_.push_back(record);
  write_sidecar();
  return true;
}

void RecordStore::write_sidecar() const {
  char hex[9];
  std::snprintf(hex, sizeof hex, "%08x", static_cast<unsigned>(crc_.checksum()));
  const auto p = sidecar_path(path_);
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) fail(ErrorKind::io, "cannot write " + tmp.string());
    os << hex << ' ' << length_ << '\n';
  }
  std::filesystem::rename(tmp, p);
}

std::vector<ResultRecord> read_records(const std::filesystem::path& csv) {
  const std::string text = read_file(csv);
  const Sidecar s = read_sidecar(csv);
  return parse_body(verified_prefix(text, s, csv), csv);
}

}  // namespace lfpp
