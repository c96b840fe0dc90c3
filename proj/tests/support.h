#pragma once

// Shared fixtures and independent oracles for the test suites. Oracles here
// re-derive expected values from first principles; they never call the
// library code they check.

#include <algorithm>
#include <optional>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include "emsserve/episodes.h"
#include "emsserve/error.h"
#include "emsserve/profiling.h"

namespace testsupport {

inline std::filesystem::path data_dir() { return EMSSERVE_DATA_DIR; }

// Kind of the emsserve::Error thrown by fn, or nullopt if it returns.
template <typename Fn>
std::optional<emsserve::ErrorKind> error_kind(Fn&& fn) {
  try {
    fn();
  } catch (const emsserve::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("emsserve-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Full (n+1)x(m+1) edit-distance matrix over code points.
inline std::size_t full_dp_levenshtein(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
  return d[a.size()][b.size()];
}

inline std::string encode_utf8(const std::u32string& s) {
  std::string out;
  for (char32_t c : s) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xc0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3f)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xe0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3f)));
    } else {
      out.push_back(static_cast<char>(0xf0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3f)));
    }
  }
  return out;
}

// Random string of up to max_len code points from a small alphabet with a
// few multi-byte characters, so collisions are common.
inline std::u32string random_u32(std::mt19937_64& rng, std::size_t max_len) {
  static const std::u32string alphabet = U"abcdeéü中\U0001F600";
  std::size_t len = rng() % (max_len + 1);
  std::u32string s;
  for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
  return s;
}

// Per-role costs of the standard M1/M2/M3 family on one device.
struct Roles {
  double text, vitals, image, header;
  double of(emsserve::Modality m) const {
    switch (m) {
      case emsserve::Modality::Text: return text;
      case emsserve::Modality::Vitals: return vitals;
      case emsserve::Modality::Image: return image;
    }
    return 0;
  }
};

struct EpisodeTotals {
  double baseline = 0;
  double emsserve = 0;
  std::vector<double> baseline_steps;
  std::vector<double> emsserve_steps;
};

// All-local accounting for the standard family, written out per role:
// M1 = {T}, M2 = {T, V}, M3 = {T, V, I}.
inline EpisodeTotals standard_family_totals(std::string_view tags, const Roles& r,
                                            double parallel_threshold = 0.010) {
  using emsserve::Modality;
  auto consumers = [](Modality m) -> std::vector<int> {  // sizes of models using m
    switch (m) {
      case Modality::Text: return {1, 2, 3};
      case Modality::Vitals: return {2, 3};
      case Modality::Image: return {3};
    }
    return {};
  };
  bool seen[3] = {false, false, false};
  EpisodeTotals out;
  for (char c : tags) {
    Modality m = c == 'S' ? Modality::Text : c == 'V' ? Modality::Vitals : Modality::Image;
    seen[static_cast<int>(m)] = true;
    int active = 0;
    if (seen[0]) active = 1;
    if (seen[0] && seen[1]) active = 2;
    if (seen[0] && seen[1] && seen[2]) active = 3;

    double base = 0;
    if (active > 0) {
      base += r.text;
      if (active >= 2) base += r.vitals;
      if (active >= 3) base += r.image;
      base += r.header;
    } else {
      for (Modality o : {Modality::Text, Modality::Vitals, Modality::Image})
        if (seen[static_cast<int>(o)]) base += r.of(o) * static_cast<double>(consumers(o).size());
    }

    int units = 0;
    for (int size : consumers(m))
      if (size >= active) ++units;
    double ems = r.of(m);
    if (r.of(m) < parallel_threshold) ems += r.of(m) * (units - 1);
    if (active > 0) ems += r.header;

    out.baseline += base;
    out.emsserve += ems;
    out.baseline_steps.push_back(base);
    out.emsserve_steps.push_back(ems);
  }
  return out;
}

inline emsserve::LatencyProfile standard_profile(const Roles& r, const std::string& device = "glass") {
  emsserve::LatencyProfile p;
  for (std::string m : {"M1", "M2", "M3"}) {
    p.set(m + "_T", device, r.text);
    p.set(m + "_H", device, r.header);
  }
  p.set("M2_V", device, r.vitals);
  p.set("M3_V", device, r.vitals);
  p.set("M3_I", device, r.image);
  return p;
}

}  // namespace testsupport
