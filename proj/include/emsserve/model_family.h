#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace emsserve {

// Concatenation order of encoder outputs follows the enumerator order.
enum class Modality : std::uint8_t { Text = 0, Vitals = 1, Image = 2 };

inline constexpr std::array<Modality, 3> kAllModalities = {
    Modality::Text, Modality::Vitals, Modality::Image};

enum class PayloadKind : std::uint8_t { Speech, VitalsSeries, ImageFrame };

std::string_view to_string(Modality m);
Modality parse_modality(std::string_view s);
// Single-letter arrival tags used by episodes: S, V, I.
char arrival_tag(Modality m);
Modality modality_from_tag(char tag);
PayloadKind payload_kind_for(Modality m);

struct EncoderSpec {
  std::string module_id;
  Modality modality = Modality::Text;
  std::size_t feature_dim = 1;
  PayloadKind payload_kind = PayloadKind::Speech;

  bool operator==(const EncoderSpec&) const = default;
};

struct ModelSpec {
  std::string model_id;
  std::vector<EncoderSpec> encoders;
  std::string header_id;
  std::size_t n_classes = 46;
  // Input width the header was declared with; unset means "sum of encoders".
  std::optional<std::size_t> header_inputs;

  bool operator==(const ModelSpec&) const = default;

  const EncoderSpec* encoder_for(Modality m) const;
  bool has(Modality m) const { return encoder_for(m) != nullptr; }
  std::size_t concat_dim() const;
};

// Throws MalformedSpec on duplicate modalities, empty encoder sets, zero
// dims, zero classes or a header width that disagrees with the encoders.
void validate(const ModelSpec& model);

struct HeaderLayout {
  std::string header_id;
  std::vector<Modality> order;
  std::vector<std::size_t> dims;
  std::size_t input_dim = 0;
  std::size_t n_classes = 0;

  bool operator==(const HeaderLayout&) const = default;
};

struct SplitModel {
  std::string source_model_id;
  std::map<Modality, EncoderSpec> parts;
  HeaderLayout header;
  // Kept so reassembly reproduces the source spec field for field.
  std::vector<Modality> listing_order;
  std::optional<std::size_t> declared_header_inputs;
};

SplitModel split(const ModelSpec& model);
ModelSpec reassemble(const SplitModel& split_model);

struct FeatureVector {
  std::vector<double> values;
  std::string producer_module;
  std::uint64_t payload_version = 0;

  bool operator==(const FeatureVector&) const = default;
};

struct Recommendation {
  std::size_t class_index = 0;
  std::string model_id;
  std::uint64_t step = 0;

  bool operator==(const Recommendation&) const = default;
};

struct PayloadRef {
  std::string payload_id;
  std::uint64_t version = 0;

  bool operator==(const PayloadRef&) const = default;
};

FeatureVector eval_encoder(const EncoderSpec& encoder,
                           std::string_view payload_id,
                           std::uint64_t payload_version);

Recommendation eval_header(const ModelSpec& model,
                           const std::map<Modality, FeatureVector>& features,
                           std::uint64_t step = 0);

Recommendation eval_monolithic(const ModelSpec& model,
                               const std::map<Modality, PayloadRef>& payloads,
                               std::uint64_t step = 0);

// An ordered set of models served together, e.g. M1 (T), M2 (T+V) and
// M3 (T+V+I). Module ids must be unique across the whole family.
class ModelFamily {
 public:
  ModelFamily() = default;
  explicit ModelFamily(std::vector<ModelSpec> models);

  // M1{Text 512}, M2{Text 512, Vitals 32}, M3{Text 512, Vitals 32, Image 16}.
  static ModelFamily standard();

  const std::vector<ModelSpec>& models() const { return models_; }
  const ModelSpec& model(std::string_view model_id) const;
  const ModelSpec* find(std::string_view model_id) const;

  // Largest model whose modalities are all in `observed`; earlier family
  // members win ties. nullptr if none qualifies.
  const ModelSpec* active_model(
      const std::array<bool, 3>& observed) const;

 private:
  std::vector<ModelSpec> models_;
};

ModelFamily load_family(const std::filesystem::path& path);
void save_family(const ModelFamily& family, const std::filesystem::path& path);
ModelFamily family_from_json_text(std::string_view text);
std::string family_to_json_text(const ModelFamily& family);

}  // namespace emsserve
