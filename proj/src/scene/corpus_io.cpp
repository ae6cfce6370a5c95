#include "sga/scene/corpus_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sga/util/errors.hpp"

namespace sga::scene {

using nlohmann::json;

namespace {

const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw CorpusParseError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw CorpusParseError(path + ": missing field '" + key + "'");
  return *it;
}

const json& array_field(const json& obj, const char* key, const std::string& path) {
  const auto& v = field(obj, key, path);
  if (!v.is_array()) throw CorpusParseError(path + "." + key + ": expected an array");
  return v;
}

std::size_t index_value(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw CorpusParseError(path + ": expected a nonnegative integer");
  }
  return v.get<std::size_t>();
}

std::vector<std::string> names(const json& doc, const char* key) {
  const auto& arr = array_field(doc, key, "$");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string()) {
      throw CorpusParseError(std::string("$.") + key + "[" + std::to_string(i) + "]: expected a string");
    }
    out.push_back(arr[i].get<std::string>());
  }
  return out;
}

SceneGraph parse_frame(const json& jf, const std::string& path) {
  SceneGraph frame;
  const auto& idx = field(jf, "frame", path);
  if (!idx.is_number_integer()) throw CorpusParseError(path + ".frame: expected an integer");
  frame.frame_index = idx.get<std::int64_t>();

  const auto& objects = array_field(jf, "objects", path);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string op = path + ".objects[" + std::to_string(i) + "]";
    ObjectInstance o;
    o.category = index_value(field(objects[i], "category", op), op + ".category");
    const auto& bb = field(objects[i], "bbox", op);
    if (!bb.is_array() || bb.size() != 4) throw CorpusParseError(op + ".bbox: expected 4 numbers");
    for (std::size_t k = 0; k < 4; ++k) {
      if (!bb[k].is_number()) throw CorpusParseError(op + ".bbox: expected 4 numbers");
      o.bbox[k] = bb[k].get<float>();
    }
    frame.objects.push_back(o);
  }

  const auto& rels = array_field(jf, "relationships", path);
  for (std::size_t k = 0; k < rels.size(); ++k) {
    const std::string rp = path + ".relationships[" + std::to_string(k) + "]";
    RelationshipTriplet t;
    t.subject_idx = index_value(field(rels[k], "subject", rp), rp + ".subject");
    t.object_idx = index_value(field(rels[k], "object", rp), rp + ".object");
    t.predicate = index_value(field(rels[k], "predicate", rp), rp + ".predicate");
    frame.triplets.push_back(t);
  }
  return frame;
}

}  // namespace

Corpus parse_corpus(std::string_view text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CorpusParseError(source + ": " + e.what());
  }
  if (!doc.is_object()) throw CorpusParseError(source + ": top level must be an object");

  auto taxonomy = std::make_shared<Taxonomy>();
  taxonomy->object_classes = names(doc, "object_classes");
  taxonomy->predicate_classes = names(doc, "predicate_classes");

  Corpus corpus;
  corpus.taxonomy = taxonomy;
  std::set<std::string> seen;
  const auto& videos = array_field(doc, "videos", "$");
  for (std::size_t v = 0; v < videos.size(); ++v) {
    const std::string vp = "$.videos[" + std::to_string(v) + "]";
    VideoAnnotation video;
    const auto& id = field(videos[v], "id", vp);
    if (!id.is_string()) throw CorpusParseError(vp + ".id: expected a string");
    video.video_id = id.get<std::string>();
    video.taxonomy = taxonomy;
    if (!seen.insert(video.video_id).second) {
      throw ValidationError("video '" + video.video_id + "': duplicate id");
    }
    const auto& frames = array_field(videos[v], "frames", vp);
    for (std::size_t f = 0; f < frames.size(); ++f) {
      video.frames.push_back(parse_frame(frames[f], vp + ".frames[" + std::to_string(f) + "]"));
    }
    for (std::size_t f = 0; f < video.frames.size(); ++f) {
      const std::string where = "video '" + video.video_id + "' frame " + std::to_string(video.frames[f].frame_index);
      validate_frame(video.frames[f], *taxonomy, where);
      if (f > 0 && video.frames[f].frame_index <= video.frames[f - 1].frame_index) {
        throw ValidationError(where + ": frames must be strictly increasing");
      }
    }
    if (video.frames.size() >= kMinAnnotatedFrames) corpus.videos.push_back(std::move(video));
  }
  std::sort(corpus.videos.begin(), corpus.videos.end(),
            [](const VideoAnnotation& a, const VideoAnnotation& b) { return a.video_id < b.video_id; });
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), path.string());
}

std::string serialize_corpus(const Corpus& corpus, int indent) {
  json doc;
  doc["object_classes"] = corpus.taxonomy->object_classes;
  doc["predicate_classes"] = corpus.taxonomy->predicate_classes;
  json videos = json::array();
  for (const auto& video : corpus.videos) {
    json jv;
    jv["id"] = video.video_id;
    json frames = json::array();
    for (const auto& frame : video.frames) {
      json jf;
      jf["frame"] = frame.frame_index;
      json objects = json::array();
      for (const auto& o : frame.objects) {
        objects.push_back({{"category", o.category}, {"bbox", {o.bbox[0], o.bbox[1], o.bbox[2], o.bbox[3]}}});
      }
      jf["objects"] = std::move(objects);
      json rels = json::array();
      for (const auto& t : frame.triplets) {
        rels.push_back({{"subject", t.subject_idx}, {"object", t.object_idx}, {"predicate", t.predicate}});
      }
      jf["relationships"] = std::move(rels);
      frames.push_back(std::move(jf));
    }
    jv["frames"] = std::move(frames);
    videos.push_back(std::move(jv));
  }
  doc["videos"] = std::move(videos);
  return doc.dump(indent);
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write corpus file " + path.string());
  out << serialize_corpus(corpus) << '\n';
  if (!out) throw IoError("failed writing corpus file " + path.string());
}

}  // namespace sga::scene
