#include "emsserve/model_family.h"

#include <algorithm>
#include <set>

#include "emsserve/error.h"
#include "emsserve/hashing.h"
#include "io_util.h"
#include "json.hpp"

namespace emsserve {

using nlohmann::json;

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::Text: return "text";
    case Modality::Vitals: return "vitals";
    case Modality::Image: return "image";
  }
  return "?";
}

Modality parse_modality(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "text" || lower == "t" || lower == "s" || lower == "speech")
    return Modality::Text;
  if (lower == "vitals" || lower == "v") return Modality::Vitals;
  if (lower == "image" || lower == "i") return Modality::Image;
  fail(ErrorKind::SchemaError, "unknown modality '" + std::string(s) + "'");
}

char arrival_tag(Modality m) {
  switch (m) {
    case Modality::Text: return 'S';
    case Modality::Vitals: return 'V';
    case Modality::Image: return 'I';
  }
  return '?';
}

Modality modality_from_tag(char tag) {
  switch (tag) {
    case 'S': case 's': return Modality::Text;
    case 'V': case 'v': return Modality::Vitals;
    case 'I': case 'i': return Modality::Image;
    default: break;
  }
  fail(ErrorKind::SchemaError, std::string("unknown arrival tag '") + tag + "'");
}

PayloadKind payload_kind_for(Modality m) {
  switch (m) {
    case Modality::Text: return PayloadKind::Speech;
    case Modality::Vitals: return PayloadKind::VitalsSeries;
    case Modality::Image: return PayloadKind::ImageFrame;
  }
  return PayloadKind::Speech;
}

const EncoderSpec* ModelSpec::encoder_for(Modality m) const {
  for (const auto& e : encoders)
    if (e.modality == m) return &e;
  return nullptr;
}

std::size_t ModelSpec::concat_dim() const {
  std::size_t total = 0;
  for (const auto& e : encoders) total += e.feature_dim;
  return total;
}

void validate(const ModelSpec& model) {
  const std::string& id = model.model_id;
  if (id.empty()) fail(ErrorKind::MalformedSpec, "model_id is empty");
  if (model.encoders.empty())
    fail(ErrorKind::MalformedSpec, id + ": no encoders");
  if (model.n_classes == 0)
    fail(ErrorKind::MalformedSpec, id + ": n_classes must be positive");
  std::array<bool, 3> seen{};
  std::set<std::string> ids;
  for (const auto& e : model.encoders) {
    auto slot = static_cast<std::size_t>(e.modality);
    if (seen[slot])
      fail(ErrorKind::MalformedSpec,
           id + ": two encoders share modality " + std::string(to_string(e.modality)));
    seen[slot] = true;
    if (e.module_id.empty())
      fail(ErrorKind::MalformedSpec, id + ": encoder with empty module_id");
    if (!ids.insert(e.module_id).second)
      fail(ErrorKind::MalformedSpec, id + ": duplicate module_id " + e.module_id);
    if (e.feature_dim == 0)
      fail(ErrorKind::MalformedSpec, id + ": " + e.module_id + " has feature_dim 0");
  }
  if (model.header_inputs && *model.header_inputs != model.concat_dim()) {
    fail(ErrorKind::MalformedSpec,
         id + ": header declares " + std::to_string(*model.header_inputs) +
             " inputs but encoders total " + std::to_string(model.concat_dim()));
  }
}

SplitModel split(const ModelSpec& model) {
  validate(model);
  SplitModel out;
  out.source_model_id = model.model_id;
  out.declared_header_inputs = model.header_inputs;
  for (const auto& e : model.encoders) {
    out.parts.emplace(e.modality, e);
    out.listing_order.push_back(e.modality);
  }
  out.header.header_id = model.header_id;
  out.header.n_classes = model.n_classes;
  for (const auto& [m, e] : out.parts) {  // std::map iterates in modality order
    out.header.order.push_back(m);
    out.header.dims.push_back(e.feature_dim);
    out.header.input_dim += e.feature_dim;
  }
  return out;
}

ModelSpec reassemble(const SplitModel& s) {
  ModelSpec m;
  m.model_id = s.source_model_id;
  m.header_id = s.header.header_id;
  m.n_classes = s.header.n_classes;
  m.header_inputs = s.declared_header_inputs;
  for (Modality mod : s.listing_order) {
    auto it = s.parts.find(mod);
    if (it == s.parts.end())
      fail(ErrorKind::MalformedSpec, s.source_model_id + ": part missing for " +
                                         std::string(to_string(mod)));
    m.encoders.push_back(it->second);
  }
  if (m.concat_dim() != s.header.input_dim)
    fail(ErrorKind::MalformedSpec, s.source_model_id + ": header layout disagrees with parts");
  return m;
}

FeatureVector eval_encoder(const EncoderSpec& encoder, std::string_view payload_id,
                           std::uint64_t payload_version) {
  // Seeded by modality + payload only, so every model's encoder for the same
  // modality yields the same features for the same payload.
  std::uint64_t seed = fnv1a(to_string(encoder.modality));
  seed = fnv1a(std::string_view("\x1f", 1), seed);
  seed = fnv1a(payload_id, seed);
  std::uint64_t state = seed ^ (payload_version * 0xd1b54a32d192ed03ULL);

  FeatureVector fv;
  fv.producer_module = encoder.module_id;
  fv.payload_version = payload_version;
  fv.values.resize(encoder.feature_dim);
  for (auto& v : fv.values) {
    const std::uint64_t bits = splitmix64_next(state) >> 11;  // 53 random bits
    v = static_cast<double>(bits) * 0x1.0p-52 - 1.0;          // [-1, 1)
  }
  return fv;
}

Recommendation eval_header(const ModelSpec& model,
                           const std::map<Modality, FeatureVector>& features,
                           std::uint64_t step) {
  std::uint64_t h = kFnvOffset;
  for (Modality m : kAllModalities) {
    const EncoderSpec* enc = model.encoder_for(m);
    if (!enc) continue;
    auto it = features.find(m);
    if (it == features.end())
      fail(ErrorKind::MissingModality,
           model.model_id + " needs " + std::string(to_string(m)) + " features");
    if (it->second.values.size() != enc->feature_dim)
      fail(ErrorKind::DimMismatch,
           model.model_id + ": " + std::string(to_string(m)) + " features have " +
               std::to_string(it->second.values.size()) + " values, expected " +
               std::to_string(enc->feature_dim));
    h = fnv1a_doubles(it->second.values, h);
  }
  return Recommendation{static_cast<std::size_t>(h % model.n_classes), model.model_id, step};
}

Recommendation eval_monolithic(const ModelSpec& model,
                               const std::map<Modality, PayloadRef>& payloads,
                               std::uint64_t step) {
  std::map<Modality, FeatureVector> features;
  for (const auto& e : model.encoders) {
    auto it = payloads.find(e.modality);
    if (it == payloads.end())
      fail(ErrorKind::MissingModality,
           model.model_id + " has no " + std::string(to_string(e.modality)) + " payload");
    features.emplace(e.modality, eval_encoder(e, it->second.payload_id, it->second.version));
  }
  return eval_header(model, features, step);
}

ModelFamily::ModelFamily(std::vector<ModelSpec> models) : models_(std::move(models)) {
  if (models_.empty()) fail(ErrorKind::MalformedSpec, "model family is empty");
  std::set<std::string> model_ids;
  std::set<std::string> module_ids;
  for (const auto& m : models_) {
    validate(m);
    if (!model_ids.insert(m.model_id).second)
      fail(ErrorKind::MalformedSpec, "duplicate model_id " + m.model_id);
    if (!m.header_id.empty() && !module_ids.insert(m.header_id).second)
      fail(ErrorKind::MalformedSpec, "duplicate module id " + m.header_id);
    for (const auto& e : m.encoders)
      if (!module_ids.insert(e.module_id).second)
        fail(ErrorKind::MalformedSpec, "module id " + e.module_id + " used twice in family");
  }
}

ModelFamily ModelFamily::standard() {
  auto enc = [](std::string id, Modality m, std::size_t dim) {
    return EncoderSpec{std::move(id), m, dim, payload_kind_for(m)};
  };
  std::vector<ModelSpec> models;
  models.push_back({"M1", {enc("M1_T", Modality::Text, 512)}, "M1_H", 46, std::nullopt});
  models.push_back({"M2",
                    {enc("M2_T", Modality::Text, 512), enc("M2_V", Modality::Vitals, 32)},
                    "M2_H", 46, std::nullopt});
  models.push_back({"M3",
                    {enc("M3_T", Modality::Text, 512), enc("M3_V", Modality::Vitals, 32),
                     enc("M3_I", Modality::Image, 16)},
                    "M3_H", 46, std::nullopt});
  return ModelFamily(std::move(models));
}

const ModelSpec* ModelFamily::find(std::string_view model_id) const {
  for (const auto& m : models_)
    if (m.model_id == model_id) return &m;
  return nullptr;
}

const ModelSpec& ModelFamily::model(std::string_view model_id) const {
  if (const auto* m = find(model_id)) return *m;
  fail(ErrorKind::ConfigError, "no model " + std::string(model_id) + " in family");
}

const ModelSpec* ModelFamily::active_model(const std::array<bool, 3>& observed) const {
  const ModelSpec* best = nullptr;
  for (const auto& m : models_) {
    bool ready = std::all_of(m.encoders.begin(), m.encoders.end(), [&](const EncoderSpec& e) {
      return observed[static_cast<std::size_t>(e.modality)];
    });
    if (ready && (!best || m.encoders.size() > best->encoders.size())) best = &m;
  }
  return best;
}

namespace {

json model_to_json(const ModelSpec& m) {
  json encs = json::array();
  for (const auto& e : m.encoders)
    encs.push_back({{"module_id", e.module_id},
                    {"modality", std::string(to_string(e.modality))},
                    {"feature_dim", e.feature_dim}});
  json j = {{"model_id", m.model_id}, {"encoders", encs}, {"n_classes", m.n_classes}};
  if (!m.header_id.empty()) j["header_id"] = m.header_id;
  if (m.header_inputs) j["header_inputs"] = *m.header_inputs;
  return j;
}

ModelSpec model_from_json(const json& j) {
  try {
    ModelSpec m;
    m.model_id = j.at("model_id").get<std::string>();
    m.n_classes = j.value("n_classes", std::size_t{46});
    m.header_id = j.value("header_id", m.model_id + "_H");
    if (j.contains("header_inputs")) m.header_inputs = j.at("header_inputs").get<std::size_t>();
    for (const auto& e : j.at("encoders")) {
      EncoderSpec spec;
      spec.module_id = e.at("module_id").get<std::string>();
      spec.modality = parse_modality(e.at("modality").get<std::string>());
      spec.feature_dim = e.at("feature_dim").get<std::size_t>();
      spec.payload_kind = payload_kind_for(spec.modality);
      m.encoders.push_back(std::move(spec));
    }
    return m;
  } catch (const json::exception& ex) {
    fail(ErrorKind::SchemaError, std::string("model family: ") + ex.what());
  }
}

}  // namespace

ModelFamily family_from_json_text(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(ErrorKind::SchemaError, "model family: invalid JSON");
  const json* list = &j;
  if (j.is_object()) {
    if (!j.contains("models")) fail(ErrorKind::SchemaError, "model family: missing 'models'");
    list = &j.at("models");
  }
  if (!list->is_array()) fail(ErrorKind::SchemaError, "model family: expected an array");
  std::vector<ModelSpec> models;
  for (const auto& item : *list) models.push_back(model_from_json(item));
  return ModelFamily(std::move(models));
}

std::string family_to_json_text(const ModelFamily& family) {
  json list = json::array();
  for (const auto& m : family.models()) list.push_back(model_to_json(m));
  return list.dump(2) + "\n";
}

ModelFamily load_family(const std::filesystem::path& path) {
  return family_from_json_text(detail::read_file(path));
}

void save_family(const ModelFamily& family, const std::filesystem::path& path) {
  detail::write_file(path, family_to_json_text(family));
}

}  // namespace emsserve
