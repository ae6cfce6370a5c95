#include "sga/io/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <map>

#include "sga/io/config.hpp"
#include "sga/util/errors.hpp"
#include "sga/util/hash.hpp"

namespace sga::io {

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float get_f32(const std::string& in, std::size_t at) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

NamedTensor named(const std::string& name, const ad::Shape& shape, std::span<const float> values) {
  return {name, shape, std::vector<float>(values.begin(), values.end())};
}

}  // namespace

std::string config_hash(const model::ModelConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(model_config_json(cfg).dump())));
  return buf;
}

Checkpoint make_checkpoint(const model::SgaModel<float>& m, const scene::Taxonomy& taxonomy,
                           const engine::TrainState& state) {
  Checkpoint c;
  c.model = m.config();
  c.taxonomy = taxonomy;
  c.epochs_done = state.epochs_done;
  c.adam_step = state.adam.step;
  const auto& entries = m.parameters().entries();
  for (const auto& [name, t] : entries) c.tensors.push_back(named(name, t.shape(), t.data()));
  if (!state.adam.m.empty()) {
    for (std::size_t i = 0; i < entries.size(); ++i)
      c.tensors.push_back(named("adam.m/" + entries[i].first, entries[i].second.shape(), state.adam.m.at(i)));
    for (std::size_t i = 0; i < entries.size(); ++i)
      c.tensors.push_back(named("adam.v/" + entries[i].first, entries[i].second.shape(), state.adam.v.at(i)));
  }
  return c;
}

std::string encode_checkpoint(const Checkpoint& c) {
  nlohmann::json manifest = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& t : c.tensors) {
    if (ad::numel(t.shape) != t.values.size()) {
      throw ad::ContractError("checkpoint: tensor " + t.name + " has " + std::to_string(t.values.size()) +
                              " values for shape " + ad::shape_str(t.shape));
    }
    manifest.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}, {"bytes", 4 * t.values.size()}});
    offset += 4 * t.values.size();
  }
  nlohmann::json header = {
      {"format", "sga-checkpoint"},
      {"version", kCheckpointVersion},
      {"config_hash", config_hash(c.model)},
      {"model", model_config_json(c.model)},
      {"taxonomy", {{"object_classes", c.taxonomy.object_classes}, {"predicate_classes", c.taxonomy.predicate_classes}}},
      {"train", {{"epochs_done", c.epochs_done}, {"adam_step", c.adam_step}}},
      {"tensors", manifest},
      {"body_bytes", offset}};
  const std::string head = header.dump();
  std::string out(kCheckpointMagic, 8);
  put_u64(out, head.size());
  out += head;
  out.reserve(out.size() + offset);
  for (const auto& t : c.tensors)
    for (float v : t.values) put_f32(out, v);
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes, const std::string& source) {
  auto bad = [&](const std::string& msg) { return CompatibilityError(source + ": " + msg); };
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) throw bad("not an sga checkpoint");
  const std::uint64_t head_len = get_u64(bytes, 8);
  if (head_len > bytes.size() - 16) throw bad("truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, head_len));
  } catch (const nlohmann::json::exception& e) {
    throw bad(std::string("malformed header: ") + e.what());
  }
  Checkpoint c;
  const std::size_t body = 16 + head_len;
  try {
    if (header.at("format") != "sga-checkpoint") throw bad("unexpected format tag");
    if (header.at("version") != kCheckpointVersion) {
      throw bad("unsupported version " + header.at("version").dump());
    }
    c.model = model_config_from_json(header.at("model"));
    if (header.at("config_hash") != config_hash(c.model)) throw bad("config hash does not match the model config");
    c.taxonomy.object_classes = header.at("taxonomy").at("object_classes").get<std::vector<std::string>>();
    c.taxonomy.predicate_classes = header.at("taxonomy").at("predicate_classes").get<std::vector<std::string>>();
    c.epochs_done = header.at("train").at("epochs_done").get<std::size_t>();
    c.adam_step = header.at("train").at("adam_step").get<std::uint64_t>();
    const std::size_t body_bytes = header.at("body_bytes").get<std::size_t>();
    if (body_bytes != bytes.size() - body) throw bad("body is " + std::to_string(bytes.size() - body) +
                                                     " bytes, header says " + std::to_string(body_bytes));
    std::size_t expected_offset = 0;
    for (const auto& m : header.at("tensors")) {
      NamedTensor t;
      t.name = m.at("name").get<std::string>();
      t.shape = m.at("shape").get<std::vector<std::size_t>>();
      const auto offset = m.at("offset").get<std::size_t>();
      const auto nbytes = m.at("bytes").get<std::size_t>();
      if (nbytes != 4 * ad::numel(t.shape)) throw bad("tensor " + t.name + ": byte count does not match shape");
      if (offset != expected_offset) throw bad("tensor " + t.name + ": overlapping or non-contiguous offset");
      if (offset + nbytes > body_bytes) throw bad("tensor " + t.name + ": extends past the body");
      t.values.resize(nbytes / 4);
      for (std::size_t i = 0; i < t.values.size(); ++i) t.values[i] = get_f32(bytes, body + offset + 4 * i);
      expected_offset = offset + nbytes;
      c.tensors.push_back(std::move(t));
    }
    if (expected_offset != body_bytes) throw bad("unreferenced bytes at the end of the body");
  } catch (const nlohmann::json::exception& e) {
    throw bad(std::string("malformed header: ") + e.what());
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path), path.string());
}

RestoredModel restore(const Checkpoint& ckpt) {
  RestoredModel out;
  out.model = std::make_unique<model::SgaModel<float>>(ckpt.model, 0);
  std::map<std::string, const NamedTensor*> by_name;
  for (const auto& t : ckpt.tensors) by_name[t.name] = &t;
  const auto& entries = out.model->parameters().entries();
  auto take = [&](const std::string& name, const ad::Shape& shape) -> const NamedTensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw CompatibilityError("checkpoint: missing tensor " + name);
    if (it->second->shape != shape) {
      throw CompatibilityError("checkpoint: tensor " + name + " has shape " + ad::shape_str(it->second->shape) +
                               ", model expects " + ad::shape_str(shape));
    }
    const auto& t = *it->second;
    by_name.erase(it);
    return t;
  };
  for (const auto& [name, tensor] : entries) {
    const auto& t = take(name, tensor.shape());
    auto dst = tensor;
    std::copy(t.values.begin(), t.values.end(), dst.mutable_data().begin());
  }
  if (by_name.count("adam.m/" + entries.front().first)) {
    for (const auto& [name, tensor] : entries) out.state.adam.m.push_back(take("adam.m/" + name, tensor.shape()).values);
    for (const auto& [name, tensor] : entries) out.state.adam.v.push_back(take("adam.v/" + name, tensor.shape()).values);
  }
  if (!by_name.empty()) throw CompatibilityError("checkpoint: unexpected tensor " + by_name.begin()->first);
  out.state.adam.step = ckpt.adam_step;
  out.state.epochs_done = ckpt.epochs_done;
  return out;
}

void check_taxonomy(const Checkpoint& ckpt, const scene::Taxonomy& corpus) {
  if (ckpt.taxonomy == corpus) return;
  throw CompatibilityError("checkpoint taxonomy (" + std::to_string(ckpt.taxonomy.num_object_classes()) +
                           " object classes, " + std::to_string(ckpt.taxonomy.num_predicates()) +
                           " predicates) differs from the corpus (" + std::to_string(corpus.num_object_classes()) +
                           " object classes, " + std::to_string(corpus.num_predicates()) + " predicates)");
}

}  // namespace sga::io
