#include "eod/io.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_set>

#include "eod/error.hpp"

namespace eod {

namespace {

std::vector<double> number_array(const json& j, const char* field) {
  if (!j.is_array()) throw std::runtime_error(std::string(field) + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw std::runtime_error(std::string(field) + " must hold numbers");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw std::runtime_error(std::string(field) + " has a non-finite value");
    out.push_back(d);
  }
  return out;
}

std::string string_field(const json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end() || !it->is_string())
    throw std::runtime_error(std::string("missing string field '") + field + "'");
  return it->get<std::string>();
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::not_found, "cannot open " + path.string());
  return in;
}

template <class T>
std::vector<T> take_or_throw(ParseResult<T> r, const std::filesystem::path& path) {
  if (!r.ok()) {
    const auto& d = r.errors.front();
    fail(ErrorCode::parse_error,
         path.string() + ":" + std::to_string(d.line) + ": " + d.message);
  }
  return std::move(r.items);
}

}  // namespace

json to_json(const BoundingBox& box) { return json::array({box.x, box.y, box.w, box.h}); }

BoundingBox box_from_json(const json& j) {
  auto v = number_array(j, "box");
  if (v.size() != 4) throw std::runtime_error("box must have 4 entries [x,y,w,h]");
  BoundingBox b{v[0], v[1], v[2], v[3]};
  if (!b.valid()) throw std::runtime_error("box must have x,y >= 0 and w,h > 0");
  return b;
}

ParseResult<Candidate> parse_candidates(std::istream& in) {
  ParseResult<Candidate> r;
  std::optional<std::size_t> dim;
  std::optional<std::size_t> scene_dim;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) throw std::runtime_error("record must be a JSON object");
      Candidate c;
      if (auto it = j.find("id"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw std::runtime_error("id must be a string");
        c.id = it->get<std::string>();
      } else {
        c.id = std::to_string(r.items.size());
      }
      c.image_id = string_field(j, "image_id");
      if (!j.contains("box")) throw std::runtime_error("missing field 'box'");
      c.box = box_from_json(j.at("box"));
      if (!j.contains("objectness") || !j.at("objectness").is_number())
        throw std::runtime_error("missing numeric field 'objectness'");
      c.objectness = j.at("objectness").get<double>();
      if (!(c.objectness >= 0 && c.objectness <= 1))
        throw std::runtime_error("objectness must lie in [0, 1]");
      if (!j.contains("features")) throw std::runtime_error("missing field 'features'");
      c.features = number_array(j.at("features"), "features");
      if (c.features.empty()) throw std::runtime_error("features must be non-empty");
      if (!dim) dim = c.features.size();
      if (c.features.size() != *dim)
        throw std::runtime_error("feature dimension " + std::to_string(c.features.size()) +
                                 " differs from " + std::to_string(*dim));
      if (auto it = j.find("scene_features"); it != j.end() && !it->is_null()) {
        c.scene_features = number_array(*it, "scene_features");
        if (!scene_dim) scene_dim = c.scene_features->size();
        if (c.scene_features->size() != *scene_dim)
          throw std::runtime_error("scene feature dimension " +
                                   std::to_string(c.scene_features->size()) +
                                   " differs from " + std::to_string(*scene_dim));
      }
      if (auto it = j.find("crop_uri"); it != j.end() && !it->is_null())
        c.crop_uri = it->get<std::string>();
      if (auto it = j.find("gt_class"); it != j.end() && !it->is_null()) {
        c.gt_class = it->get<std::string>();
        if (c.gt_class->empty()) throw std::runtime_error("gt_class must be non-empty");
      }
      if (!ids.insert(c.id).second) throw std::runtime_error("duplicate id '" + c.id + "'");
      r.items.push_back(std::move(c));
    } catch (const std::exception& e) {
      r.errors.push_back({lineno, e.what()});
    }
  }
  return r;
}

ParseResult<GroundTruthObject> parse_ground_truth(std::istream& in) {
  ParseResult<GroundTruthObject> r;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) throw std::runtime_error("record must be a JSON object");
      GroundTruthObject gt;
      gt.image_id = string_field(j, "image_id");
      if (!j.contains("box")) throw std::runtime_error("missing field 'box'");
      gt.box = box_from_json(j.at("box"));
      gt.class_name = string_field(j, "class");
      if (gt.class_name.empty()) throw std::runtime_error("class must be non-empty");
      if (gt.class_name == kNoObject)
        throw std::runtime_error(std::string("class '") + kNoObject + "' is reserved");
      r.items.push_back(std::move(gt));
    } catch (const std::exception& e) {
      r.errors.push_back({lineno, e.what()});
    }
  }
  return r;
}

std::vector<Candidate> load_candidates(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return take_or_throw(parse_candidates(in), path);
}

std::vector<GroundTruthObject> load_ground_truth(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return take_or_throw(parse_ground_truth(in), path);
}

Dataset load_dataset(const std::filesystem::path& candidates,
                     const std::optional<std::filesystem::path>& ground_truth, const MatchConfig& cfg) {
  auto cands = load_candidates(candidates);
  std::vector<GroundTruthObject> gts;
  if (ground_truth) {
    gts = load_ground_truth(*ground_truth);
    cands = annotate_candidates(std::move(cands), gts, cfg);
  }
  return Dataset(std::move(cands), std::move(gts));
}

json to_json(const Candidate& c) {
  json j;
  j["id"] = c.id;
  j["image_id"] = c.image_id;
  j["box"] = to_json(c.box);
  j["objectness"] = c.objectness;
  j["features"] = c.features;
  if (c.scene_features) j["scene_features"] = *c.scene_features;
  if (c.crop_uri) j["crop_uri"] = *c.crop_uri;
  if (c.gt_class) j["gt_class"] = *c.gt_class;
  return j;
}

json to_json(const GroundTruthObject& gt) {
  return {{"image_id", gt.image_id}, {"box", to_json(gt.box)}, {"class", gt.class_name}};
}

void write_candidates(std::ostream& out, const std::vector<Candidate>& cands) {
  for (const auto& c : cands) out << to_json(c).dump() << '\n';
}

void write_ground_truth(std::ostream& out, const std::vector<GroundTruthObject>& gts) {
  for (const auto& gt : gts) out << to_json(gt).dump() << '\n';
}

void save_candidates(const std::filesystem::path& path, const std::vector<Candidate>& cands) {
  std::ostringstream os;
  write_candidates(os, cands);
  write_text_atomic(path, os.str());
}

void save_ground_truth(const std::filesystem::path& path,
                       const std::vector<GroundTruthObject>& gts) {
  std::ostringstream os;
  write_ground_truth(os, gts);
  write_text_atomic(path, os.str());
}

json to_json(const DatasetSplit& split) {
  return {{"refill_bag_ids", split.refill_bag_ids},
          {"unlabeled_pool_ids", split.unlabeled_pool_ids},
          {"heldout_classes", split.heldout_classes},
          {"seed", split.seed}};
}

DatasetSplit split_from_json(const json& j) {
  try {
    DatasetSplit s;
    s.refill_bag_ids = j.at("refill_bag_ids").get<std::vector<std::string>>();
    s.unlabeled_pool_ids = j.at("unlabeled_pool_ids").get<std::vector<std::string>>();
    s.heldout_classes = j.at("heldout_classes").get<std::vector<std::string>>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("malformed split: ") + e.what());
  }
}

json to_json(const DatasetStats& s) {
  return {{"n_images", s.n_images},         {"w_per_image", s.w_per_image},
          {"n_candidates", s.n_candidates}, {"n_gt", s.n_gt},
          {"feature_dim", s.feature_dim},   {"class_histogram", s.class_histogram}};
}

json read_json_file(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, path.string() + ": " + e.what());
  }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) fail(ErrorCode::io_error, "cannot write " + tmp.string());
  std::size_t done = 0;
  while (done < text.size()) {
    const auto n = ::write(fd, text.data() + done, text.size() - done);
    if (n <= 0) {
      ::close(fd);
      fail(ErrorCode::io_error, "write failed for " + tmp.string());
    }
    done += static_cast<std::size_t>(n);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) fail(ErrorCode::io_error, "fsync failed for " + tmp.string());
  std::filesystem::rename(tmp, path);
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

}  // namespace eod
