#include "emsserve/medkit.h"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <json.hpp>

#include "emsserve/error.h"
#include "io_util.h"

namespace emsserve {

namespace {

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int len = b0 < 0x80 ? 1 : (b0 >> 5) == 0x6 ? 2 : (b0 >> 4) == 0xe ? 3 : (b0 >> 3) == 0x1e ? 4 : 0;
    bool ok = len > 0 && i + static_cast<std::size_t>(len) <= s.size();
    char32_t cp = len == 1 ? b0 : len == 2 ? (b0 & 0x1f) : len == 3 ? (b0 & 0x0f) : (b0 & 0x07);
    for (int k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
      if ((b & 0xc0) != 0x80) ok = false;
      cp = (cp << 6) | (b & 0x3f);
    }
    if (!ok) {
      // Stray byte: keep it distinguishable from any valid code point.
      out.push_back(0x110000 + b0);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

std::size_t levenshtein_cp(const std::u32string& a, const std::u32string& b) {
  const std::u32string& s = a.size() < b.size() ? b : a;
  const std::u32string& t = a.size() < b.size() ? a : b;
  std::vector<std::size_t> prev(t.size() + 1);
  std::vector<std::size_t> cur(t.size() + 1);
  for (std::size_t j = 0; j <= t.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= s.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= t.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (s[i - 1] == t[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[t.size()];
}

std::size_t allowed_distance(double max_rel_ed, std::size_t name_len) {
  // The epsilon keeps products like 0.34 * 50 from rounding up past 17.
  return static_cast<std::size_t>(std::ceil(max_rel_ed * static_cast<double>(name_len) - 1e-9));
}

void check_threshold(double max_rel_ed) {
  if (!(max_rel_ed > 0 && max_rel_ed <= 1))
    fail(ErrorKind::InvalidArgs, "max_rel_ed must be in (0, 1]");
}

}  // namespace

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein_cp(decode_utf8(a), decode_utf8(b));
}

std::string normalize_token(std::string_view s) {
  std::string out(detail::trim(s));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

MedsDictionary::MedsDictionary(std::vector<MedEntry> entries, std::set<std::string> universe)
    : entries_(std::move(entries)), universe_(std::move(universe)) {
  const bool derive = universe_.empty();
  std::set<std::string> names;
  for (const auto& e : entries_) {
    if (e.name.empty()) fail(ErrorKind::SchemaError, "medicine with empty name");
    if (!names.insert(e.name).second)
      fail(ErrorKind::SchemaError, "duplicate medicine '" + e.name + "'");
    for (double c : e.concentrations)
      if (!(c > 0) || !std::isfinite(c))
        fail(ErrorKind::SchemaError, e.name + ": concentrations must be positive");
    for (const auto& d : e.diseases) {
      if (derive)
        universe_.insert(d);
      else if (!universe_.contains(d))
        fail(ErrorKind::SchemaError, e.name + ": disease '" + d + "' is not in the universe");
    }
  }
}

const MedEntry* MedsDictionary::find(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return &e;
  return nullptr;
}

MedsDictionary dictionary_from_json_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::SchemaError, std::string("dictionary JSON: ") + e.what());
  }
  try {
    const nlohmann::json* list = &j;
    std::set<std::string> universe;
    if (j.is_object()) {
      list = &j.at("entries");
      if (j.contains("disease_universe"))
        universe = j.at("disease_universe").get<std::set<std::string>>();
    }
    if (!list->is_array()) fail(ErrorKind::SchemaError, "dictionary entries must be an array");
    std::vector<MedEntry> entries;
    for (const auto& item : *list) {
      MedEntry e;
      e.name = item.at("name").get<std::string>();
      e.concentrations = item.value("concentrations", std::vector<double>{});
      e.diseases = item.value("diseases", std::vector<std::string>{});
      entries.push_back(std::move(e));
    }
    return MedsDictionary(std::move(entries), std::move(universe));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::SchemaError, std::string("dictionary JSON: ") + e.what());
  }
}

MedsDictionary load_dictionary(const std::filesystem::path& path) {
  return dictionary_from_json_text(detail::read_file(path));
}

std::string dictionary_to_json_text(const MedsDictionary& dict) {
  nlohmann::json j;
  j["schema"] = 1;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : dict.entries())
    j["entries"].push_back({{"name", e.name}, {"concentrations", e.concentrations}, {"diseases", e.diseases}});
  j["disease_universe"] = dict.disease_universe();
  return j.dump(2) + "\n";
}

std::optional<EdMatch> ed_match(std::string_view token, const MedsDictionary& dict,
                                double max_rel_ed) {
  check_threshold(max_rel_ed);
  const std::u32string needle = decode_utf8(normalize_token(token));
  std::optional<EdMatch> best;
  std::size_t best_len = 0;
  for (const auto& e : dict.entries()) {
    const std::u32string name = decode_utf8(normalize_token(e.name));
    const std::size_t d = levenshtein_cp(needle, name);
    if (!best || d < best->distance || (d == best->distance && e.name < best->entry->name)) {
      best = EdMatch{&e, d};
      best_len = name.size();
    }
  }
  if (!best || best->distance > allowed_distance(max_rel_ed, best_len)) return std::nullopt;
  return best;
}

std::optional<double> match_concentration(std::string_view token, const std::vector<double>& known,
                                          double max_rel_ed) {
  check_threshold(max_rel_ed);
  std::string norm = normalize_token(token);
  for (std::string_view unit : {"mg/ml", "mg"}) {
    if (norm.size() > unit.size() && norm.ends_with(unit)) {
      norm = std::string(detail::trim(std::string_view(norm).substr(0, norm.size() - unit.size())));
      break;
    }
  }
  double value = 0;
  if (detail::parse_double(norm, value)) {
    if (known.empty() && value > 0) return value;
    if (std::find(known.begin(), known.end(), value) != known.end()) return value;
  }
  const std::u32string needle = decode_utf8(norm);
  std::optional<double> best;
  std::size_t best_d = 0;
  std::size_t best_len = 0;
  std::string best_text;
  for (double k : known) {
    const std::string text = detail::format_double(k);
    const std::size_t d = levenshtein_cp(needle, decode_utf8(text));
    if (!best || d < best_d || (d == best_d && text < best_text)) {
      best = k;
      best_d = d;
      best_len = text.size();
      best_text = text;
    }
  }
  if (!best || best_d > allowed_distance(max_rel_ed, best_len)) return std::nullopt;
  return best;
}

DoseResult med_math(double quantity_mg, double concentration_mg_per_ml) {
  if (!(concentration_mg_per_ml > 0))
    fail(ErrorKind::ZeroConcentration, "concentration must be positive");
  if (quantity_mg < 0) fail(ErrorKind::NegativeQuantity, "quantity must not be negative");
  if (!std::isfinite(quantity_mg) || !std::isfinite(concentration_mg_per_ml))
    fail(ErrorKind::InvalidArgs, "dose inputs must be finite");
  return DoseResult{quantity_mg / concentration_mg_per_ml, quantity_mg, concentration_mg_per_ml};
}

std::vector<std::string> disease_lookup(const MedEntry& entry, const MedsDictionary& dict) {
  const MedEntry* found = dict.find(entry.name);
  if (!found || !(*found == entry))
    fail(ErrorKind::UnknownEntry, "'" + entry.name + "' is not in the dictionary");
  return found->diseases;
}

}  // namespace emsserve
