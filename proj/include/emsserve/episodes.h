#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "emsserve/model_family.h"

namespace emsserve {

struct ArrivalEvent {
  std::uint64_t index = 1;  // 1-based position in the episode
  Modality modality = Modality::Text;
  std::string payload_id;
  std::uint64_t payload_bytes = 0;
  double arrival_offset = 0;  // seconds from episode start

  bool operator==(const ArrivalEvent&) const = default;
};

struct Episode {
  std::string episode_id;
  std::vector<ArrivalEvent> events;

  bool operator==(const Episode&) const = default;
};

struct PayloadSizes {
  std::uint64_t speech = 480'000;
  std::uint64_t vitals = 1'000;
  std::uint64_t image = 1'500'000;

  std::uint64_t for_modality(Modality m) const;
};

// Throws ConfigError if the episode is empty, indices are not 1..n, payload
// ids repeat or offsets are negative.
void validate_episode(const Episode& episode);

// Builds an episode from an arrival string such as "SVVI". Payload ids are
// "<modality>-<k>" with k counting per modality; event k arrives at k-1 s.
Episode episode_from_sequence(std::string episode_id, std::string_view tags,
                              const PayloadSizes& sizes = {});

// The three recorded arrival sequences (1 speech, 10 vitals, 10 images
// each). Throws UnknownEpisode for other n.
Episode builtin_episode(int n, const PayloadSizes& sizes = {});
std::string_view builtin_sequence(int n);

// Deterministic permutation of `base`; indices and offsets follow the new
// positions, payload ids and sizes travel with their events.
Episode shuffled_episode(const Episode& base, std::uint64_t seed);

// One speech plus 0..max_vitals vitals and 0..max_images images, shuffled.
Episode random_episode(std::uint64_t seed, int max_vitals = 30, int max_images = 10,
                       const PayloadSizes& sizes = {});

std::string modality_sequence(const Episode& episode);

// One event per line: modality[,payload_bytes[,arrival_offset_s]].
// Blank lines and '#' comments are skipped.
Episode parse_episode_text(std::string_view text, std::string episode_id,
                           const PayloadSizes& sizes = {});
Episode load_episode_file(const std::filesystem::path& path, const PayloadSizes& sizes = {});
std::string episode_to_text(const Episode& episode);

}  // namespace emsserve
