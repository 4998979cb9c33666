#include "groundnet/model.hpp"

#include <cstring>
#include <fstream>

#include "groundnet/errors.hpp"
#include "json.hpp"

namespace groundnet {

namespace {

using nlohmann::json;

constexpr char kCheckpointMagic[8] = {'G', 'N', 'E', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error("truncated checkpoint file");
  return value;
}

}  // namespace

RelateNorm relate_norm_from_name(const std::string& name) {
  if (name == "column-softmax") return RelateNorm::ColumnSoftmax;
  if (name == "raw-renormalize") return RelateNorm::RawRenormalize;
  throw Error("unknown relate normalization: " + name);
}

const char* relate_norm_name(RelateNorm v) {
  return v == RelateNorm::ColumnSoftmax ? "column-softmax" : "raw-renormalize";
}

SupportingNodes supporting_nodes_from_name(const std::string& name) {
  if (name == "all") return SupportingNodes::AllIntermediate;
  if (name == "locate-only") return SupportingNodes::LocateOnly;
  throw Error("unknown supporting-node selection: " + name);
}

const char* supporting_nodes_name(SupportingNodes v) {
  return v == SupportingNodes::AllIntermediate ? "all" : "locate-only";
}

void ModelConfig::validate() const {
  if (hidden_size <= 0 || embed_size <= 0 || visual_dim <= 0) {
    throw Error("model dimensions must be positive");
  }
  if (attend_scope == "free-form" || attend_scope == "syntax-guided-locate") {
    throw Error("attend scope '" + attend_scope + "' is a recognized variant but not implemented");
  }
  if (attend_scope != "node-span") {
    throw Error("unknown attend scope: " + attend_scope);
  }
}

Vocabulary Vocabulary::build(const std::vector<Scene>& scenes) {
  Vocabulary v;
  v.words = {"<null>", "<unk>"};
  v.index = {{"<null>", kNullId}, {"<unk>", kUnkId}};
  for (const Scene& scene : scenes) {
    for (const std::string& w : scene.expression) {
      if (v.index.emplace(w, static_cast<std::int64_t>(v.words.size())).second) {
        v.words.push_back(w);
      }
    }
  }
  return v;
}

std::int64_t Vocabulary::id_of(const std::string& word) const {
  auto it = index.find(word);
  return it == index.end() ? kUnkId : it->second;
}

Tensor& ModelParams::at(const std::string& name) {
  for (auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw Error("unknown parameter: " + name);
}

const Tensor& ModelParams::at(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw Error("unknown parameter: " + name);
}

bool ModelParams::has(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return true;
  }
  return false;
}

bool ModelParams::decays(const std::string& name) {
  return name.find(".bias") == std::string::npos;
}

ModelParams init_params(const ModelConfig& config, std::int64_t vocab_size, Rng& rng) {
  config.validate();
  const std::int64_t h = config.hidden_size;
  const std::int64_t e = config.embed_size;
  ModelParams p;
  std::uint64_t stream = 0;
  auto xavier = [&](const std::string& name, std::int64_t rows, std::int64_t cols) {
    Rng r = rng.split(stream++);
    p.tensors.emplace_back(name, Tensor::xavier({rows, cols}, r));
  };

  xavier("embed", vocab_size, e);
  // Two-layer bidirectional recurrent encoder. Gate order [i, f, g, o];
  // forget-gate biases start at 1.0.
  for (const std::string& cell : {"l1f", "l1b", "l2f", "l2b"}) {
    const std::int64_t input = cell[1] == '1' ? e : 2 * h;
    xavier("lstm." + cell + ".w_ih", 4 * h, input);
    xavier("lstm." + cell + ".w_hh", 4 * h, h);
    Tensor bias = Tensor::zeros({4 * h});
    for (std::int64_t i = h; i < 2 * h; ++i) bias.at(i) = 1.0;
    p.tensors.emplace_back("lstm." + cell + ".bias", std::move(bias));
  }
  xavier("attend.w", 1, 4 * h);
  xavier("locate.w_proj", e, config.visual_dim + 5);
  xavier("locate.w_score", 1, e);
  xavier("relate.w_proj", e, 10);
  xavier("relate.w_score", 1, e);
  return p;
}

void save_checkpoint(const Model& model, const std::string& path) {
  json header;
  header["format"] = "groundnet-checkpoint";
  header["version"] = kCheckpointVersion;
  header["config"] = {
      {"hidden_size", model.config.hidden_size},
      {"embed_size", model.config.embed_size},
      {"visual_dim", model.config.visual_dim},
      {"relate_norm", relate_norm_name(model.config.relate_norm)},
      {"supporting_nodes", supporting_nodes_name(model.config.supporting_nodes)},
      {"attend_scope", model.config.attend_scope},
  };
  header["vocab"] = model.vocab.words;
  header["stopwords"] = model.stopwords;
  header["meta"] = model.meta;
  const std::string header_bytes = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open checkpoint for writing: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_pod(out, kCheckpointVersion);
  write_pod(out, static_cast<std::uint64_t>(header_bytes.size()));
  out.write(header_bytes.data(), static_cast<std::streamsize>(header_bytes.size()));
  write_pod(out, static_cast<std::uint64_t>(model.params.tensors.size()));
  for (const auto& [name, tensor] : model.params.tensors) {
    write_pod(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(out, static_cast<std::uint32_t>(tensor.rank()));
    for (std::int64_t d : tensor.shape()) write_pod(out, static_cast<std::int64_t>(d));
    out.write(reinterpret_cast<const char*>(tensor.data()),
              static_cast<std::streamsize>(tensor.size() * sizeof(double)));
  }
  if (!out) throw Error("failed writing checkpoint: " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw Error("not a groundnet checkpoint: " + path);
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw Error("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = read_pod<std::uint64_t>(in);
  std::string header_bytes(header_len, '\0');
  in.read(header_bytes.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw Error("truncated checkpoint header");
  const json header = json::parse(header_bytes);

  Model model;
  const json& cfg = header.at("config");
  model.config.hidden_size = cfg.at("hidden_size").get<std::int64_t>();
  model.config.embed_size = cfg.at("embed_size").get<std::int64_t>();
  model.config.visual_dim = cfg.at("visual_dim").get<std::int64_t>();
  model.config.relate_norm = relate_norm_from_name(cfg.at("relate_norm").get<std::string>());
  model.config.supporting_nodes =
      supporting_nodes_from_name(cfg.at("supporting_nodes").get<std::string>());
  model.config.attend_scope = cfg.at("attend_scope").get<std::string>();
  model.vocab.words = header.at("vocab").get<std::vector<std::string>>();
  for (std::size_t i = 0; i < model.vocab.words.size(); ++i) {
    model.vocab.index[model.vocab.words[i]] = static_cast<std::int64_t>(i);
  }
  model.stopwords = header.at("stopwords").get<std::vector<std::string>>();
  model.meta = header.at("meta").get<std::map<std::string, std::string>>();

  const auto tensor_count = read_pod<std::uint64_t>(in);
  for (std::uint64_t t = 0; t < tensor_count; ++t) {
    const auto name_len = read_pod<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rank = read_pod<std::uint32_t>(in);
    std::vector<std::int64_t> shape(rank);
    std::int64_t total = 1;
    for (auto& d : shape) {
      d = read_pod<std::int64_t>(in);
      total *= d;
    }
    std::vector<double> values(static_cast<std::size_t>(total));
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) throw Error("truncated checkpoint tensor: " + name);
    model.params.tensors.emplace_back(name, Tensor::from(std::move(shape), std::move(values)));
  }
  return model;
}

}  // namespace groundnet
