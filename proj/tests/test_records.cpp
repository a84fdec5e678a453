#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "generators.hpp"
#include "lfpp/error.hpp"
#include "lfpp/records.hpp"

using namespace lfpp;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::io;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lfpp-records-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ResultRecord random_record(gen::Gen& g) {
  ResultRecord r;
  r.dim = g.integer(2, 5);
  r.xi = g.uniform(0.0, 2.0);
  r.scale_index = g.integer(1, 12);
  r.seed = g.engine()();
  r.log_distance = g.normal(0.0, 3.0);
  r.wall_seconds = g.coin() ? 0.0 : g.uniform(0.0, 100.0);
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("records") {
  TEST_CASE("numbers round-trip through their text form") {
    for (int c = 0; c < 500; ++c) {
      gen::Gen g("format-double", c);
      const double x = g.normal() * std::pow(10.0, g.integer(-30, 30));
      CHECK(parse_double(format_double(x)) == x);
    }
    CHECK(parse_double(format_double(0.1)) == 0.1);
    CHECK(format_double(0.5) == "0.5");
    CHECK(kind_of([] { parse_double("1.5x"); }) == ErrorKind::io);
  }

  TEST_CASE("rows round-trip") {
    for (int c = 0; c < 200; ++c) {
      gen::Gen g("csv-row", c);
      const ResultRecord r = random_record(g);
      CHECK(parse_csv_row(to_csv_row(r)) == r);
    }
    CHECK(kind_of([] { parse_csv_row("2,0.1,5"); }) == ErrorKind::io);
    CHECK(kind_of([] { parse_csv_row("2,0.1,five,1,0,0"); }) == ErrorKind::io);
  }

  TEST_CASE("sorting is by key") {
    gen::Gen g("sort", 0);
    std::vector<ResultRecord> rs;
    for (int i = 0; i < 50; ++i) rs.push_back(random_record(g));
    sort_records(rs);
    for (std::size_t i = 1; i < rs.size(); ++i) CHECK_FALSE(key_of(rs[i]) < key_of(rs[i - 1]));
  }

  TEST_CASE("store persists, reopens and skips duplicate keys") {
    const fs::path dir = fresh_dir("persist");
    gen::Gen g("store", 0);
    std::vector<ResultRecord> written;
    {
      RecordStore store(dir / "r.csv");
      for (int i = 0; i < 20; ++i) {
        written.push_back(random_record(g));
        CHECK(store.append(written.back()));
      }
      ResultRecord dup = written[3];
      dup.log_distance += 1.0;
      CHECK_FALSE(store.append(dup));
    }
    RecordStore again(dir / "r.csv");
    CHECK(again.records() == written);
    CHECK(again.contains(key_of(written[7])));
    CHECK(again.recovered_bytes() == 0);
    CHECK(read_records(dir / "r.csv") == written);
    fs::remove_all(dir);
  }

  TEST_CASE("a cut-short append is dropped on open") {
    const fs::path dir = fresh_dir("tail");
    gen::Gen g("tail", 0);
    std::vector<ResultRecord> written;
    {
      RecordStore store(dir / "r.csv");
      for (int i = 0; i < 5; ++i) {
        written.push_back(random_record(g));
        store.append(written.back());
      }
    }
    {
      std::ofstream os(dir / "r.csv", std::ios::binary | std::ios::app);
      os << "3,0.25,7,12";  // no newline, no checksum update
    }
    RecordStore reopened(dir / "r.csv");
    CHECK(reopened.recovered_bytes() == 11);
    CHECK(reopened.records() == written);
    ResultRecord extra = random_record(g);
    CHECK(reopened.append(extra));
    written.push_back(extra);
    CHECK(read_records(dir / "r.csv") == written);
    fs::remove_all(dir);
  }

  TEST_CASE("corruption is reported") {
    const fs::path dir = fresh_dir("corrupt");
    gen::Gen g("corrupt", 0);
    {
      RecordStore store(dir / "r.csv");
      for (int i = 0; i < 5; ++i) store.append(random_record(g));
    }
    std::string text = slurp(dir / "r.csv");
    const auto pos = text.find('\n') + 3;
    text[pos] = text[pos] == '7' ? '8' : '7';
    {
      std::ofstream os(dir / "r.csv", std::ios::binary | std::ios::trunc);
      os << text;
    }
    CHECK(kind_of([&] { read_records(dir / "r.csv"); }) == ErrorKind::checksum_mismatch);
    CHECK(kind_of([&] { RecordStore s(dir / "r.csv"); }) == ErrorKind::checksum_mismatch);
    fs::remove(RecordStore::sidecar_path(dir / "r.csv"));
    CHECK(kind_of([&] { read_records(dir / "r.csv"); }) == ErrorKind::checksum_mismatch);
    fs::remove_all(dir);
  }

  TEST_CASE("truncated content is corruption, not a recoverable tail") {
    const fs::path dir = fresh_dir("short");
    gen::Gen g("short", 0);
    {
      RecordStore store(dir / "r.csv");
      for (int i = 0; i < 3; ++i) store.append(random_record(g));
    }
    fs::resize_file(dir / "r.csv", fs::file_size(dir / "r.csv") - 4);
    CHECK(kind_of([&] { read_records(dir / "r.csv"); }) == ErrorKind::checksum_mismatch);
    fs::remove_all(dir);
  }
}
