#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "artikit/config.hpp"
#include "artikit/types.hpp"

namespace artikit {

namespace fs = std::filesystem;
using nlohmann::json;

struct FrameInfo {
  int index = 0;
  double timestamp = 0.0;
};

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<int> frame_ids;

  size_t size() const { return points.size(); }
};

/// All per-clip inputs: frames, poses, intrinsics, fingertip observations,
/// depth/normal data, 2D line segments, optional masks / cloud / reasoner
/// reference. Immutable after loading.
struct ClipBundle {
  std::string clip_id;
  std::string scene_id = "scene0";
  std::string up_axis = "+z";
  std::vector<FrameInfo> frames;
  Intrinsics intrinsics;
  std::vector<CameraPose> poses;  // aligned with frames
  std::vector<FingertipObservation> fingertips;
  std::vector<LineSegment2D> lines;
  NormalSampleSet normals;
  std::map<int, DepthMap> depth;  // keyed by frame index
  std::map<int, Mask> masks;      // optional, keyed by frame index
  std::optional<PointCloud> cloud;
  std::optional<std::string> reasoner_file;  // relative path recorded in manifest
  std::vector<std::string> warnings;         // non-fatal findings from loading

  int frame_position(int frame_index) const {
    for (size_t i = 0; i < frames.size(); ++i)
      if (frames[i].index == frame_index) return static_cast<int>(i);
    throw Error("invariant violation: unknown frame index " + std::to_string(frame_index));
  }

  const CameraPose& pose_of(int frame_index) const { return poses[frame_position(frame_index)]; }
};

namespace io {

inline json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error("schema mismatch: " + path.string() + ": " + e.what());
  }
  return j;
}

inline void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

inline Vec3 vec3_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw Error("schema mismatch: " + where + " expects [x,y,z]");
  Vec3 v(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  if (!v.allFinite()) throw Error("invariant violation: " + where + " not finite");
  return v;
}

inline json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

// Raw depth stream: uint32 width, uint32 height (little endian), then
// width*height float32, row-major.
inline DepthMap read_depth(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing file: " + path.string());
  std::uint32_t w = 0, h = 0;
  in.read(reinterpret_cast<char*>(&w), 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  if (!in) throw Error("schema mismatch: " + path.string() + ": truncated header");
  DepthMap d;
  d.width = static_cast<int>(w);
  d.height = static_cast<int>(h);
  d.values.resize(static_cast<size_t>(w) * h);
  in.read(reinterpret_cast<char*>(d.values.data()), static_cast<std::streamsize>(d.values.size() * 4));
  if (!in) throw Error("schema mismatch: " + path.string() + ": truncated payload");
  return d;
}

inline void write_depth(const fs::path& path, const DepthMap& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const std::uint32_t w = static_cast<std::uint32_t>(d.width);
  const std::uint32_t h = static_cast<std::uint32_t>(d.height);
  out.write(reinterpret_cast<const char*>(&w), 4);
  out.write(reinterpret_cast<const char*>(&h), 4);
  out.write(reinterpret_cast<const char*>(d.values.data()), static_cast<std::streamsize>(d.values.size() * 4));
}

// Mask stream: same header as depth, payload is 1 byte per pixel, 0/255.
inline Mask read_mask(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing file: " + path.string());
  std::uint32_t w = 0, h = 0;
  in.read(reinterpret_cast<char*>(&w), 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  if (!in) throw Error("schema mismatch: " + path.string() + ": truncated header");
  Mask m;
  m.width = static_cast<int>(w);
  m.height = static_cast<int>(h);
  m.values.resize(static_cast<size_t>(w) * h);
  in.read(reinterpret_cast<char*>(m.values.data()), static_cast<std::streamsize>(m.values.size()));
  if (!in) throw Error("schema mismatch: " + path.string() + ": truncated payload");
  return m;
}

inline void write_mask(const fs::path& path, const Mask& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const std::uint32_t w = static_cast<std::uint32_t>(m.width);
  const std::uint32_t h = static_cast<std::uint32_t>(m.height);
  out.write(reinterpret_cast<const char*>(&w), 4);
  out.write(reinterpret_cast<const char*>(&h), 4);
  out.write(reinterpret_cast<const char*>(m.values.data()), static_cast<std::streamsize>(m.values.size()));
}

// PLY point cloud with a per-vertex frame_id property. Reader accepts
// ascii and binary_little_endian; writer emits binary_little_endian
// (float32 x/y/z, int32 frame_id).
inline PointCloud read_ply(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0)
    throw Error("schema mismatch: " + path.string() + ": not a PLY file");

  bool binary = false;
  size_t n_vertices = 0;
  struct Prop {
    std::string name;
    std::string type;
  };
  std::vector<Prop> props;
  bool in_vertex_element = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "binary_little_endian")
        binary = true;
      else if (fmt != "ascii")
        throw Error("schema mismatch: " + path.string() + ": unsupported PLY format " + fmt);
    } else if (tok == "element") {
      std::string name;
      size_t count = 0;
      ls >> name >> count;
      in_vertex_element = (name == "vertex");
      if (in_vertex_element) n_vertices = count;
    } else if (tok == "property" && in_vertex_element) {
      Prop p;
      ls >> p.type >> p.name;
      props.push_back(p);
    } else if (tok == "end_header") {
      break;
    }
  }
  auto type_size = [](const std::string& t) -> size_t {
    if (t == "float" || t == "float32" || t == "int" || t == "int32" || t == "uint" || t == "uint32") return 4;
    if (t == "double" || t == "float64") return 8;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    throw Error("schema mismatch: unsupported PLY property type " + t);
  };

  PointCloud cloud;
  cloud.points.reserve(n_vertices);
  cloud.frame_ids.reserve(n_vertices);
  if (binary) {
    size_t stride = 0;
    for (const auto& p : props) stride += type_size(p.type);
    std::vector<char> row(stride);
    for (size_t i = 0; i < n_vertices; ++i) {
      in.read(row.data(), static_cast<std::streamsize>(stride));
      if (!in) throw Error("schema mismatch: " + path.string() + ": truncated vertex data");
      size_t off = 0;
      double x = 0, y = 0, z = 0;
      long fid = 0;
      for (const auto& p : props) {
        const size_t sz = type_size(p.type);
        double v = 0;
        if (p.type == "float" || p.type == "float32") {
          float f;
          std::memcpy(&f, row.data() + off, 4);
          v = f;
        } else if (p.type == "double" || p.type == "float64") {
          std::memcpy(&v, row.data() + off, 8);
        } else if (sz == 4) {
          std::int32_t q;
          std::memcpy(&q, row.data() + off, 4);
          v = q;
        } else if (sz == 2) {
          std::int16_t q;
          std::memcpy(&q, row.data() + off, 2);
          v = q;
        } else {
          std::int8_t q;
          std::memcpy(&q, row.data() + off, 1);
          v = q;
        }
        if (p.name == "x") x = v;
        else if (p.name == "y") y = v;
        else if (p.name == "z") z = v;
        else if (p.name == "frame_id") fid = static_cast<long>(v);
        off += sz;
      }
      cloud.points.emplace_back(x, y, z);
      cloud.frame_ids.push_back(static_cast<int>(fid));
    }
  } else {
    for (size_t i = 0; i < n_vertices; ++i) {
      if (!std::getline(in, line)) throw Error("schema mismatch: " + path.string() + ": truncated vertex data");
      std::istringstream ls(line);
      double x = 0, y = 0, z = 0;
      long fid = 0;
      for (const auto& p : props) {
        double v = 0;
        if (!(ls >> v)) throw Error("schema mismatch: " + path.string() + ": bad vertex line");
        if (p.name == "x") x = v;
        else if (p.name == "y") y = v;
        else if (p.name == "z") z = v;
        else if (p.name == "frame_id") fid = static_cast<long>(v);
      }
      cloud.points.emplace_back(x, y, z);
      cloud.frame_ids.push_back(static_cast<int>(fid));
    }
  }
  return cloud;
}

inline void write_ply(const fs::path& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << cloud.points.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property int frame_id\nend_header\n";
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const float xyz[3] = {static_cast<float>(cloud.points[i].x()),
                          static_cast<float>(cloud.points[i].y()),
                          static_cast<float>(cloud.points[i].z())};
    const std::int32_t fid = cloud.frame_ids[i];
    out.write(reinterpret_cast<const char*>(xyz), 12);
    out.write(reinterpret_cast<const char*>(&fid), 4);
  }
}

}  // namespace io

/// Loads and validates a clip bundle directory. Every invariant violation
/// is reported with the offending field path; nothing partially valid is
/// returned.
inline ClipBundle load_clip_bundle(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) throw Error("missing file: " + (dir / "manifest.json").string());
  const json m = io::read_json_file(dir / "manifest.json");
  ClipBundle b;
  try {
    b.clip_id = m.value("clip_id", dir.filename().string());
    b.scene_id = m.value("scene_id", std::string("scene0"));
    b.up_axis = m.value("up_axis", std::string("+z"));

    for (const auto& f : m.at("frames")) {
      FrameInfo fi;
      fi.index = f.at("index").get<int>();
      fi.timestamp = f.at("timestamp").get<double>();
      b.frames.push_back(fi);
    }
    const auto& ij = m.at("intrinsics");
    b.intrinsics.fx = ij.at("fx").get<double>();
    b.intrinsics.fy = ij.at("fy").get<double>();
    b.intrinsics.cx = ij.at("cx").get<double>();
    b.intrinsics.cy = ij.at("cy").get<double>();
    b.intrinsics.width = ij.at("width").get<int>();
    b.intrinsics.height = ij.at("height").get<int>();
    b.intrinsics.validate();
  } catch (const json::exception& e) {
    throw Error("schema mismatch: manifest.json: " + std::string(e.what()));
  }

  // Poses: 4x4 row-major camera-to-world, one per frame.
  {
    const json pj = io::read_json_file(dir / m.at("poses_file").get<std::string>());
    if (!pj.is_array() || pj.size() != b.frames.size())
      throw Error("schema mismatch: poses_file: expected one pose per frame");
    for (size_t i = 0; i < pj.size(); ++i) {
      const auto& rec = pj[i];
      const auto& mat = rec.at("matrix");
      if (!mat.is_array() || mat.size() != 16)
        throw Error("schema mismatch: poses[" + std::to_string(i) + "].matrix expects 16 values");
      Eigen::Matrix4d t;
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) t(r, c) = mat[4 * r + c].get<double>();
      CameraPose pose;
      pose.rotation = t.block<3, 3>(0, 0);
      pose.translation = t.block<3, 1>(0, 3);
      if (!pose.rotation.allFinite() || !pose.translation.allFinite())
        throw Error("invariant violation: rotation/translation not finite at poses[" + std::to_string(i) + "]");
      if (pose.rotation.determinant() < 0.0)
        throw Error("invariant violation: rotation determinant at poses[" + std::to_string(i) + "]");
      const double drift = geo::orthonormality_drift(pose.rotation);
      if (drift > 1e-6) {
        // Upstream SLAM exports drift slightly; project back and warn.
        pose.rotation = geo::nearest_rotation(pose.rotation);
        b.warnings.push_back("poses[" + std::to_string(i) + "]: re-orthonormalized rotation, drift " +
                             std::to_string(drift));
      }
      b.poses.push_back(pose);
    }
  }

  // Fingertips.
  {
    const json fj = io::read_json_file(dir / m.at("fingertips_file").get<std::string>());
    for (size_t i = 0; i < fj.size(); ++i) {
      const auto& rec = fj[i];
      FingertipObservation obs;
      obs.timestamp = rec.at("timestamp").get<double>();
      obs.thumb = io::vec3_from_json(rec.at("thumb"), "fingertips[" + std::to_string(i) + "].thumb");
      obs.index = io::vec3_from_json(rec.at("index"), "fingertips[" + std::to_string(i) + "].index");
      obs.middle = io::vec3_from_json(rec.at("middle"), "fingertips[" + std::to_string(i) + "].middle");
      obs.contact = rec.at("contact").get<bool>();
      if (!std::isfinite(obs.timestamp))
        throw Error("invariant violation: fingertips[" + std::to_string(i) + "].timestamp");
      b.fingertips.push_back(obs);
    }
    if (b.fingertips.size() > b.frames.size())
      throw Error("invariant violation: more fingertip observations than frames");
  }

  // 2D line segments.
  {
    const json lj = io::read_json_file(dir / m.at("lines_file").get<std::string>());
    for (size_t i = 0; i < lj.size(); ++i) {
      const auto& rec = lj[i];
      LineSegment2D seg;
      seg.frame = rec.at("frame").get<int>();
      const auto& p0 = rec.at("p0");
      const auto& p1 = rec.at("p1");
      seg.p0 = {p0[0].get<double>(), p0[1].get<double>()};
      seg.p1 = {p1[0].get<double>(), p1[1].get<double>()};
      if (rec.contains("correspondence") && !rec.at("correspondence").is_null())
        seg.correspondence = rec.at("correspondence").get<int>();
      const std::string where = "lines[" + std::to_string(i) + "]";
      if (!b.intrinsics.inside(seg.p0) || !b.intrinsics.inside(seg.p1))
        throw Error("invariant violation: " + where + " endpoints outside image bounds");
      if ((seg.p0 - seg.p1).norm() < 1e-12)
        throw Error("invariant violation: " + where + " endpoints coincide");
      b.lines.push_back(seg);
    }
  }

  // Normal samples, camera frame, unit.
  {
    const json nj = io::read_json_file(dir / m.at("normals_file").get<std::string>());
    for (size_t i = 0; i < nj.size(); ++i) {
      const auto& rec = nj[i];
      NormalSample s;
      s.frame = rec.at("frame").get<int>();
      s.normal = io::vec3_from_json(rec.at("normal"), "normals[" + std::to_string(i) + "].normal");
      if (std::abs(s.normal.norm() - 1.0) > 1e-6)
        throw Error("invariant violation: normals[" + std::to_string(i) + "] not unit length");
      b.normals.push_back(s);
    }
  }

  // Depth maps, one per frame.
  {
    const fs::path depth_dir = dir / m.at("depth_dir").get<std::string>();
    for (const auto& f : b.frames) {
      char name[32];
      std::snprintf(name, sizeof(name), "%06d.fdepth", f.index);
      const fs::path p = depth_dir / name;
      DepthMap d = io::read_depth(p);
      if (d.width != b.intrinsics.width || d.height != b.intrinsics.height)
        throw Error("invariant violation: depth size mismatch at " + p.string());
      b.depth.emplace(f.index, std::move(d));
    }
  }

  // Optional masks.
  if (m.contains("masks_dir") && !m.at("masks_dir").is_null()) {
    const fs::path mask_dir = dir / m.at("masks_dir").get<std::string>();
    for (const auto& f : b.frames) {
      char name[32];
      std::snprintf(name, sizeof(name), "%06d.mask", f.index);
      const fs::path p = mask_dir / name;
      if (!fs::exists(p)) continue;  // masks may cover a subset of frames
      Mask mm = io::read_mask(p);
      if (mm.width != b.intrinsics.width || mm.height != b.intrinsics.height)
        throw Error("invariant violation: mask size mismatch at " + p.string());
      b.masks.emplace(f.index, std::move(mm));
    }
  }

  // Optional point cloud with per-point source frame ids.
  if (m.contains("cloud_file") && !m.at("cloud_file").is_null())
    b.cloud = io::read_ply(dir / m.at("cloud_file").get<std::string>());

  if (m.contains("reasoner_file") && !m.at("reasoner_file").is_null())
    b.reasoner_file = m.at("reasoner_file").get<std::string>();

  // Cross-stream consistency.
  for (const auto& s : b.lines)
    b.frame_position(s.frame);  // throws on unknown frame
  for (const auto& s : b.normals) b.frame_position(s.frame);
  for (size_t i = 1; i < b.frames.size(); ++i)
    if (!(b.frames[i].timestamp > b.frames[i - 1].timestamp))
      throw Error("invariant violation: frames timestamps not strictly increasing");

  return b;
}

/// Writes a bundle in the manifest-plus-files layout. write(read(x)) is
/// bit-identical for bundles this writer produced.
inline void write_bundle(const ClipBundle& b, const fs::path& dir) {
  fs::create_directories(dir / "depth");
  json m;
  m["clip_id"] = b.clip_id;
  m["scene_id"] = b.scene_id;
  m["up_axis"] = b.up_axis;
  m["frames"] = json::array();
  for (const auto& f : b.frames) m["frames"].push_back({{"index", f.index}, {"timestamp", f.timestamp}});
  m["intrinsics"] = {{"fx", b.intrinsics.fx}, {"fy", b.intrinsics.fy}, {"cx", b.intrinsics.cx},
                     {"cy", b.intrinsics.cy}, {"width", b.intrinsics.width}, {"height", b.intrinsics.height}};
  m["poses_file"] = "poses.json";
  m["fingertips_file"] = "fingertips.json";
  m["lines_file"] = "lines.json";
  m["normals_file"] = "normals.json";
  m["depth_dir"] = "depth";
  if (!b.masks.empty()) m["masks_dir"] = "masks";
  if (b.cloud) m["cloud_file"] = "cloud.ply";
  if (b.reasoner_file) m["reasoner_file"] = *b.reasoner_file;
  io::write_json_file(dir / "manifest.json", m);

  json pj = json::array();
  for (const auto& p : b.poses) {
    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
    t.block<3, 3>(0, 0) = p.rotation;
    t.block<3, 1>(0, 3) = p.translation;
    json mat = json::array();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) mat.push_back(t(r, c));
    pj.push_back({{"matrix", mat}});
  }
  io::write_json_file(dir / "poses.json", pj);

  json fj = json::array();
  for (const auto& o : b.fingertips)
    fj.push_back({{"timestamp", o.timestamp},
                  {"thumb", io::vec3_to_json(o.thumb)},
                  {"index", io::vec3_to_json(o.index)},
                  {"middle", io::vec3_to_json(o.middle)},
                  {"contact", o.contact}});
  io::write_json_file(dir / "fingertips.json", fj);

  json lj = json::array();
  for (const auto& s : b.lines) {
    json rec = {{"frame", s.frame},
                {"p0", json::array({s.p0.x(), s.p0.y()})},
                {"p1", json::array({s.p1.x(), s.p1.y()})}};
    if (s.correspondence) rec["correspondence"] = *s.correspondence;
    lj.push_back(rec);
  }
  io::write_json_file(dir / "lines.json", lj);

  json nj = json::array();
  for (const auto& s : b.normals) nj.push_back({{"frame", s.frame}, {"normal", io::vec3_to_json(s.normal)}});
  io::write_json_file(dir / "normals.json", nj);

  for (const auto& [idx, d] : b.depth) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06d.fdepth", idx);
    io::write_depth(dir / "depth" / name, d);
  }
  if (!b.masks.empty()) {
    fs::create_directories(dir / "masks");
    for (const auto& [idx, mm] : b.masks) {
      char name[32];
      std::snprintf(name, sizeof(name), "%06d.mask", idx);
      io::write_mask(dir / "masks" / name, mm);
    }
  }
  if (b.cloud) io::write_ply(dir / "cloud.ply", *b.cloud);
}

}  // namespace artikit
