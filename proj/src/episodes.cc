#include "emsserve/episodes.h"

#include <array>
#include <charconv>
#include <random>
#include <set>
#include <sstream>

#include "emsserve/error.h"
#include "io_util.h"

namespace emsserve {

namespace {

// Recorded arrival orders. Rows 2 and 3 are fixed data; the seeds that
// produced them are unknown.
constexpr std::array<std::string_view, 3> kBuiltinSequences = {
    "SVVVVVVVVVVIIIIIIIIII",
    "IVIVIVISVIVIIVVIVVIVI",
    "VVVVVVIIIIIIVIVVIISVI",
};

// std::uniform_int_distribution is implementation-defined; this keeps
// shuffles identical across standard libraries.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

std::string payload_prefix(Modality m) {
  switch (m) {
    case Modality::Text: return "speech";
    case Modality::Vitals: return "vitals";
    case Modality::Image: return "image";
  }
  return "payload";
}

}  // namespace

std::uint64_t PayloadSizes::for_modality(Modality m) const {
  switch (m) {
    case Modality::Text: return speech;
    case Modality::Vitals: return vitals;
    case Modality::Image: return image;
  }
  return 0;
}

void validate_episode(const Episode& episode) {
  if (episode.events.empty())
    fail(ErrorKind::ConfigError, "episode '" + episode.episode_id + "' has no events");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < episode.events.size(); ++i) {
    const auto& e = episode.events[i];
    if (e.index != i + 1)
      fail(ErrorKind::ConfigError, "episode '" + episode.episode_id +
                                       "': event indices must run 1..n");
    if (e.payload_id.empty() || !ids.insert(e.payload_id).second)
      fail(ErrorKind::ConfigError, "episode '" + episode.episode_id +
                                       "': payload ids must be unique and non-empty");
    if (!(e.arrival_offset >= 0))
      fail(ErrorKind::ConfigError, "episode '" + episode.episode_id +
                                       "': negative arrival offset");
  }
}

Episode episode_from_sequence(std::string episode_id, std::string_view tags,
                              const PayloadSizes& sizes) {
  Episode ep{std::move(episode_id), {}};
  std::array<int, 3> counters{};
  for (char c : tags) {
    if (c == ' ' || c == ',') continue;
    Modality m = modality_from_tag(c);
    auto& k = counters[static_cast<std::size_t>(m)];
    ArrivalEvent ev;
    ev.index = ep.events.size() + 1;
    ev.modality = m;
    ev.payload_id = payload_prefix(m) + "-" + std::to_string(k++);
    ev.payload_bytes = sizes.for_modality(m);
    ev.arrival_offset = static_cast<double>(ev.index - 1);
    ep.events.push_back(std::move(ev));
  }
  validate_episode(ep);
  return ep;
}

std::string_view builtin_sequence(int n) {
  if (n < 1 || n > 3)
    fail(ErrorKind::UnknownEpisode, "no built-in episode " + std::to_string(n));
  return kBuiltinSequences[static_cast<std::size_t>(n - 1)];
}

Episode builtin_episode(int n, const PayloadSizes& sizes) {
  return episode_from_sequence("episode-" + std::to_string(n), builtin_sequence(n), sizes);
}

Episode shuffled_episode(const Episode& base, std::uint64_t seed) {
  validate_episode(base);
  std::vector<ArrivalEvent> events = base.events;
  std::mt19937_64 rng(seed);
  for (std::size_t i = events.size(); i > 1; --i) {
    std::size_t j = uniform_below(rng, i);
    std::swap(events[i - 1], events[j]);
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    events[i].index = i + 1;
    events[i].arrival_offset = base.events[i].arrival_offset;
  }
  return Episode{base.episode_id + "-shuffled-" + std::to_string(seed), std::move(events)};
}

Episode random_episode(std::uint64_t seed, int max_vitals, int max_images,
                       const PayloadSizes& sizes) {
  if (max_vitals < 0 || max_images < 0)
    fail(ErrorKind::InvalidArgs, "negative modality counts");
  std::mt19937_64 rng(seed ^ 0x5eed5eed5eedULL);
  const auto n_v = uniform_below(rng, static_cast<std::uint64_t>(max_vitals) + 1);
  const auto n_i = uniform_below(rng, static_cast<std::uint64_t>(max_images) + 1);
  std::string tags = "S" + std::string(n_v, 'V') + std::string(n_i, 'I');
  Episode ordered = episode_from_sequence("random", tags, sizes);
  Episode out = shuffled_episode(ordered, seed);
  out.episode_id = "random-" + std::to_string(seed);
  return out;
}

std::string modality_sequence(const Episode& episode) {
  std::string s;
  for (const auto& e : episode.events) s.push_back(arrival_tag(e.modality));
  return s;
}

Episode parse_episode_text(std::string_view text, std::string episode_id,
                           const PayloadSizes& sizes) {
  Episode ep{std::move(episode_id), {}};
  std::array<int, 3> counters{};
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string_view> fields;
    std::size_t p = 0;
    while (true) {
      auto c = line.find(',', p);
      fields.push_back(detail::trim(line.substr(p, c - p)));
      if (c == std::string_view::npos) break;
      p = c + 1;
    }
    auto where = [&] { return "episode line " + std::to_string(line_no) + ": "; };
    if (fields.size() > 3 || fields[0].size() != 1)
      fail(ErrorKind::SchemaError, where() + "expected modality[,bytes[,offset]]");
    Modality m = modality_from_tag(fields[0][0]);
    ArrivalEvent ev;
    ev.index = ep.events.size() + 1;
    ev.modality = m;
    ev.payload_id = payload_prefix(m) + "-" + std::to_string(counters[static_cast<std::size_t>(m)]++);
    ev.payload_bytes = sizes.for_modality(m);
    ev.arrival_offset = static_cast<double>(ev.index - 1);
    if (fields.size() >= 2 && !fields[1].empty()) {
      const auto f = fields[1];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), ev.payload_bytes);
      if (ec != std::errc{} || ptr != f.data() + f.size())
        fail(ErrorKind::SchemaError, where() + "payload_bytes must be a non-negative integer");
    }
    if (fields.size() == 3) {
      if (!detail::parse_double(fields[2], ev.arrival_offset) || ev.arrival_offset < 0)
        fail(ErrorKind::SchemaError, where() + "arrival offset must be a non-negative number");
    }
    ep.events.push_back(std::move(ev));
  }
  validate_episode(ep);
  return ep;
}

Episode load_episode_file(const std::filesystem::path& path, const PayloadSizes& sizes) {
  return parse_episode_text(detail::read_file(path), path.stem().string(), sizes);
}

std::string episode_to_text(const Episode& episode) {
  std::ostringstream out;
  out << "# " << episode.episode_id << "\n";
  for (const auto& e : episode.events)
    out << arrival_tag(e.modality) << ',' << e.payload_bytes << ','
        << detail::format_double(e.arrival_offset) << '\n';
  return out.str();
}

}  // namespace emsserve
