#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "emsserve/error.h"
#include "emsserve/hashing.h"
#include "io_util.h"

namespace emsserve {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedSpec: return "MalformedSpec";
    case ErrorKind::MissingModality: return "MissingModality";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::InvalidArgs: return "InvalidArgs";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::ProfileMiss: return "ProfileMiss";
    case ErrorKind::VersionRegression: return "VersionRegression";
    case ErrorKind::BeforeTraceStart: return "BeforeTraceStart";
    case ErrorKind::NoProbeYet: return "NoProbeYet";
    case ErrorKind::UnservableModule: return "UnservableModule";
    case ErrorKind::UnknownEpisode: return "UnknownEpisode";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::ZeroConcentration: return "ZeroConcentration";
    case ErrorKind::NegativeQuantity: return "NegativeQuantity";
    case ErrorKind::UnknownEntry: return "UnknownEntry";
    case ErrorKind::MismatchedRuns: return "MismatchedRuns";
  }
  return "Unknown";
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

namespace detail {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorKind::IoError, "read failed for " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.flush();
  if (!out) fail(ErrorKind::IoError, "write failed for " + path.string());
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::string_view trim(std::string_view s) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  auto b = s.find_first_not_of(kSpace);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(kSpace);
  return s.substr(b, e - b + 1);
}

}  // namespace detail
}  // namespace emsserve
