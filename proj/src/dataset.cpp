#include "poselift/data/dataset.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace poselift {

using nlohmann::json;

namespace {

template <int Dim>
BasicPose<Dim> pose_from_json(const json& j, int k, const char* field) {
  if (!j.is_array() || static_cast<int>(j.size()) != k)
    throw FormatError(std::string(field) + ": expected " + std::to_string(k) + " joints");
  Vector v(Dim * k);
  for (int i = 0; i < k; ++i) {
    const json& p = j[static_cast<std::size_t>(i)];
    if (!p.is_array() || p.size() != Dim)
      throw FormatError(std::string(field) + ": joint " + std::to_string(i) + " needs " + std::to_string(Dim) +
                        " coordinates");
    for (int d = 0; d < Dim; ++d) v(Dim * i + d) = p[static_cast<std::size_t>(d)].get<double>();
  }
  return BasicPose<Dim>(std::move(v));
}

template <int Dim>
json pose_to_json(const BasicPose<Dim>& p) {
  json out = json::array();
  for (int i = 0; i < p.joints(); ++i) {
    json row = json::array();
    for (int d = 0; d < Dim; ++d) row.push_back(p.coords()(Dim * i + d));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

std::size_t SequenceDataset::frame_count() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.frames.size();
  return n;
}

bool SequenceDataset::fully_3d() const {
  for (const auto& s : sequences)
    for (const auto& f : s.frames)
      if (!f.joints3d) return false;
  return frame_count() > 0;
}

void SequenceDataset::validate() const {
  if (k < 1) throw FormatError("dataset: k must be positive");
  if (static_cast<int>(joint_names.size()) != k)
    throw FormatError("dataset: " + std::to_string(joint_names.size()) + " joint names for k=" + std::to_string(k));
  if (std::set<std::string>(joint_names.begin(), joint_names.end()).size() != joint_names.size())
    throw FormatError("dataset: joint names are not unique");
  std::set<std::string> ids;
  for (const auto& s : sequences) {
    if (!ids.insert(s.id).second) throw FormatError("dataset: duplicate sequence '" + s.id + "'");
    long prev = -1;
    for (const auto& f : s.frames) {
      if (f.seq_id != s.id) throw FormatError("dataset: frame of '" + f.seq_id + "' filed under '" + s.id + "'");
      if (f.t < 0 || f.t <= prev)
        throw FormatError("dataset: '" + s.id + "' frame indices must be non-negative and strictly increasing");
      prev = f.t;
      if (f.joints2d.joints() != k || (f.joints3d && f.joints3d->joints() != k) ||
          (f.visibility && static_cast<int>(f.visibility->size()) != k))
        throw FormatError("dataset: '" + s.id + "' t=" + std::to_string(f.t) + " does not have k=" +
                          std::to_string(k) + " joints");
    }
  }
}

SequenceDataset parse_dataset(std::istream& in) {
  SequenceDataset ds;
  std::unordered_map<std::string, std::size_t> index;
  std::string line;
  long lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fail = [&](const std::string& what) {
      return FormatError("line " + std::to_string(lineno) + ": " + what);
    };
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw fail(std::string("malformed JSON (") + e.what() + ")");
    }
    try {
      if (!have_header) {
        if (!j.contains("k")) throw FormatError("expected header with \"k\" and \"joint_names\"");
        ds.k = j.at("k").get<int>();
        ds.joint_names = j.at("joint_names").get<std::vector<std::string>>();
        ds.units_2d = j.value("units_2d", "px");
        ds.units_3d = j.value("units_3d", "mm");
        if (ds.k < 1 || static_cast<int>(ds.joint_names.size()) != ds.k)
          throw FormatError("header declares k=" + std::to_string(ds.k) + " with " +
                     std::to_string(ds.joint_names.size()) + " joint names");
        have_header = true;
        continue;
      }
      FrameRecord f;
      f.seq_id = j.at("seq_id").get<std::string>();
      f.t = j.at("t").get<long>();
      f.joints2d = pose_from_json<2>(j.at("joints2d"), ds.k, "joints2d");
      if (j.contains("joints3d") && !j["joints3d"].is_null())
        f.joints3d = pose_from_json<3>(j["joints3d"], ds.k, "joints3d");
      if (j.contains("visibility") && !j["visibility"].is_null()) {
        f.visibility = j["visibility"].get<std::vector<bool>>();
        if (static_cast<int>(f.visibility->size()) != ds.k) throw FormatError("visibility: expected k entries");
      }
      auto it = index.find(f.seq_id);
      if (it == index.end()) {
        it = index.emplace(f.seq_id, ds.sequences.size()).first;
        ds.sequences.push_back(Sequence{f.seq_id, {}});
      } else if (it->second + 1 != ds.sequences.size()) {
        throw FormatError("frames of sequence '" + f.seq_id + "' are interleaved with another sequence");
      }
      auto& frames = ds.sequences[it->second].frames;
      if (f.t < 0 || (!frames.empty() && f.t <= frames.back().t))
        throw FormatError("frame index t must be non-negative and strictly increasing within '" + f.seq_id + "'");
      frames.push_back(std::move(f));
    } catch (const std::exception& e) {
      throw fail(e.what());
    }
  }
  if (!have_header || ds.sequences.empty()) throw FormatError("no sequences");
  return ds;
}

SequenceDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return parse_dataset(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_dataset(const SequenceDataset& ds, std::ostream& out) {
  ds.validate();
  json header = {{"k", ds.k}, {"joint_names", ds.joint_names}, {"units_2d", ds.units_2d}, {"units_3d", ds.units_3d}};
  out << header.dump() << '\n';
  for (const auto& s : ds.sequences) {
    for (const auto& f : s.frames) {
      json j;
      j["seq_id"] = f.seq_id;
      j["t"] = f.t;
      j["joints2d"] = pose_to_json(f.joints2d);
      if (f.joints3d) j["joints3d"] = pose_to_json(*f.joints3d);
      if (f.visibility) j["visibility"] = *f.visibility;
      out << j.dump() << '\n';
    }
  }
}

void save_dataset(const SequenceDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  write_dataset(ds, out);
  if (!out) throw FormatError("write failed: " + path.string());
}

}  // namespace poselift
