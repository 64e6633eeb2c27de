#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "artikit/serialize.hpp"
#include "artikit/synth.hpp"

namespace artikit::synth {

/// Parameters of a randomized synthetic dataset.
struct RandomDatasetParams {
  int n_revolute = 4;
  int n_prismatic = 4;
  std::pair<double, double> radius_range = {0.2, 0.6};
  std::pair<double, double> arc_range_deg = {45.0, 100.0};
  std::pair<double, double> extent_range = {0.15, 0.4};
  int frames = 60;
  int distractors = 3;
  NoiseSpec noise;
  bool emit_masks = false;
  int scenes = 1;
};

/// Derives per-clip specs from the dataset seed; clip seeds are split so
/// clips are independent and reproducible.
inline std::vector<SyntheticSpec> make_random_specs(const RandomDatasetParams& p, std::uint64_t seed,
                                                    const std::string& scene_prefix = "synth") {
  std::vector<SyntheticSpec> specs;
  Rng rng(derive_seed(seed, "dataset"));
  int idx = 0;
  auto common = [&](SyntheticSpec& s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "clip%04d", idx);
    s.clip_id = buf;
    s.scene_id = scene_prefix + std::to_string(idx % std::max(1, p.scenes));
    s.seed = derive_seed(seed, s.clip_id);
    s.frames = p.frames;
    s.distractors = p.distractors;
    s.noise = p.noise;
    s.emit_masks = p.emit_masks;
    s.fixture_x = rng.uniform(1.2, s.room.width - 1.2);
    s.handle_z = rng.uniform(0.8, 1.4);
    ++idx;
  };
  for (int i = 0; i < p.n_revolute; ++i) {
    SyntheticSpec s;
    s.type = MotionType::revolute;
    common(s);
    s.radius = rng.uniform(p.radius_range.first, p.radius_range.second);
    s.arc_deg = rng.uniform(p.arc_range_deg.first, p.arc_range_deg.second);
    s.horizontal_hinge = rng.uniform() < 0.3;
    specs.push_back(s);
  }
  for (int i = 0; i < p.n_prismatic; ++i) {
    SyntheticSpec s;
    s.type = MotionType::prismatic;
    common(s);
    s.extent = rng.uniform(p.extent_range.first, p.extent_range.second);
    s.slide_axis = rng.uniform() < 0.25 ? 0 : 1;
    specs.push_back(s);
  }
  return specs;
}

inline GeneratedClip generate_clip(const SyntheticSpec& spec) {
  return spec.type == MotionType::revolute ? gen_revolute_clip(spec) : gen_prismatic_clip(spec);
}

/// Parses a dataset spec JSON: either an explicit "clips" array or a
/// "random" block.
inline std::vector<SyntheticSpec> specs_from_json(const nlohmann::json& j) {
  const std::uint64_t seed = j.value("seed", 1ull);
  std::vector<SyntheticSpec> specs;
  if (j.contains("random")) {
    const auto& r = j.at("random");
    RandomDatasetParams p;
    p.n_revolute = r.value("n_revolute", p.n_revolute);
    p.n_prismatic = r.value("n_prismatic", p.n_prismatic);
    if (r.contains("radius_range"))
      p.radius_range = {r.at("radius_range")[0].get<double>(), r.at("radius_range")[1].get<double>()};
    if (r.contains("arc_range_deg"))
      p.arc_range_deg = {r.at("arc_range_deg")[0].get<double>(), r.at("arc_range_deg")[1].get<double>()};
    if (r.contains("extent_range"))
      p.extent_range = {r.at("extent_range")[0].get<double>(), r.at("extent_range")[1].get<double>()};
    p.frames = r.value("frames", p.frames);
    p.distractors = r.value("distractors", p.distractors);
    p.noise.traj_sigma = r.value("traj_sigma", p.noise.traj_sigma);
    p.noise.depth_sigma = r.value("depth_sigma", p.noise.depth_sigma);
    p.noise.normal_jitter_deg = r.value("normal_jitter_deg", p.noise.normal_jitter_deg);
    p.noise.outlier_fraction = r.value("outlier_fraction", p.noise.outlier_fraction);
    p.emit_masks = r.value("emit_masks", p.emit_masks);
    p.scenes = r.value("scenes", p.scenes);
    specs = make_random_specs(p, seed, j.value("scene_prefix", std::string("synth")));
  } else if (j.contains("clips")) {
    int idx = 0;
    for (const auto& c : j.at("clips")) {
      SyntheticSpec s;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "clip%04d", idx);
      s.clip_id = c.value("clip_id", std::string(buf));
      s.scene_id = c.value("scene_id", std::string("synth0"));
      s.seed = c.value("seed", derive_seed(seed, s.clip_id));
      s.type = motion_type_from_string(c.value("type", std::string("revolute")));
      s.frames = c.value("frames", s.frames);
      s.distractors = c.value("distractors", s.distractors);
      s.fixture_x = c.value("fixture_x", s.fixture_x);
      s.handle_z = c.value("handle_z", s.handle_z);
      s.radius = c.value("radius", s.radius);
      s.arc_deg = c.value("arc_deg", s.arc_deg);
      s.horizontal_hinge = c.value("horizontal_hinge", s.horizontal_hinge);
      s.extent = c.value("extent", s.extent);
      s.slide_axis = c.value("slide_axis", s.slide_axis);
      s.noise.traj_sigma = c.value("traj_sigma", s.noise.traj_sigma);
      s.noise.depth_sigma = c.value("depth_sigma", s.noise.depth_sigma);
      s.noise.normal_jitter_deg = c.value("normal_jitter_deg", s.noise.normal_jitter_deg);
      s.noise.outlier_fraction = c.value("outlier_fraction", s.noise.outlier_fraction);
      s.emit_masks = c.value("emit_masks", s.emit_masks);
      specs.push_back(s);
      ++idx;
    }
  } else {
    throw Error("schema mismatch: dataset spec needs a 'random' block or a 'clips' array");
  }
  return specs;
}

/// Generates a dataset on disk: clips/<id>/ bundles, gt.json, and (when
/// requested) a reasoner.json of oracle votes derived from ground truth.
inline void write_dataset(const std::vector<SyntheticSpec>& specs, const fs::path& out_dir,
                          bool emit_reasoner, int k_frames = 10) {
  fs::create_directories(out_dir / "clips");
  std::vector<GroundTruthRecord> gts;
  nlohmann::json reasoner = nlohmann::json::array();
  for (const auto& spec : specs) {
    const GeneratedClip clip = generate_clip(spec);
    write_bundle(clip.bundle, out_dir / "clips" / spec.clip_id);
    gts.push_back(clip.gt);
    if (emit_reasoner) {
      const auto rec = make_oracle_reasoner(clip.gt, k_frames, spec.frames);
      nlohmann::json votes = nlohmann::json::array();
      for (const auto& v : rec.votes)
        votes.push_back({{"frame", v.frame}, {"furniture", v.furniture}, {"motion", reason::to_string(v.motion)}});
      reasoner.push_back({{"clip_id", rec.clip_id}, {"votes", votes}});
    }
  }
  io::write_json_file(out_dir / "gt.json", ser::gt_to_json(gts));
  if (emit_reasoner) io::write_json_file(out_dir / "reasoner.json", reasoner);
}

}  // namespace artikit::synth
