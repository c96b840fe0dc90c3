#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace emsserve {

struct MedEntry {
  std::string name;
  std::vector<double> concentrations;  // mg per ml
  std::vector<std::string> diseases;

  bool operator==(const MedEntry&) const = default;
};

class MedsDictionary {
 public:
  MedsDictionary() = default;
  // Throws SchemaError on empty or duplicate names, non-positive
  // concentrations, or diseases outside `disease_universe`. An empty
  // universe is filled from the entries.
  MedsDictionary(std::vector<MedEntry> entries, std::set<std::string> disease_universe = {});

  const std::vector<MedEntry>& entries() const { return entries_; }
  const std::set<std::string>& disease_universe() const { return universe_; }
  const MedEntry* find(std::string_view name) const;

 private:
  std::vector<MedEntry> entries_;
  std::set<std::string> universe_;
};

// Accepts [{name, concentrations, diseases}, ...] or
// {"entries": [...], "disease_universe": [...]}.
MedsDictionary dictionary_from_json_text(std::string_view text);
MedsDictionary load_dictionary(const std::filesystem::path& path);
std::string dictionary_to_json_text(const MedsDictionary& dict);

// Edit distance over Unicode code points (invalid UTF-8 falls back to bytes).
std::size_t levenshtein(std::string_view a, std::string_view b);

// Lower-case ASCII and trim surrounding whitespace.
std::string normalize_token(std::string_view s);

struct EdMatch {
  const MedEntry* entry = nullptr;
  std::size_t distance = 0;
};

// Closest entry by edit distance after normalization; ties go to the
// lexicographically smaller name. Accepted iff the distance is at most
// ceil(max_rel_ed * len(name)). Throws InvalidArgs unless 0 < max_rel_ed <= 1.
std::optional<EdMatch> ed_match(std::string_view token, const MedsDictionary& dict,
                                double max_rel_ed = 0.34);

// Numeric parse first ("4.2", "4.2mg/ml"); otherwise edit distance against
// the shortest renderings of `known`.
std::optional<double> match_concentration(std::string_view token, const std::vector<double>& known,
                                          double max_rel_ed = 0.34);

struct DoseResult {
  double volume_ml = 0;
  double quantity_mg = 0;
  double concentration_mg_per_ml = 0;

  bool operator==(const DoseResult&) const = default;
};

// volume = quantity / concentration. Throws ZeroConcentration for
// concentration <= 0 and NegativeQuantity for quantity < 0.
DoseResult med_math(double quantity_mg, double concentration_mg_per_ml);

// Throws UnknownEntry if `entry` is not in `dict`.
std::vector<std::string> disease_lookup(const MedEntry& entry, const MedsDictionary& dict);

}  // namespace emsserve
