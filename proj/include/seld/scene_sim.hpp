// Copyright 2026 The seld Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Binaural scene synthesis: synthetic sound classes, head models, source
// rendering, SNR-controlled mixing, diffuse noise and scene suites.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seld/wav.hpp"

namespace seld::scene {

// Built-in synthetic classes. "general" is a broadband catch-all class used
// only as distractor / negative material.
inline constexpr std::string_view kTonalAlarm = "tonal_alarm";
inline constexpr std::string_view kNoiseBurst = "noise_burst";
inline constexpr std::string_view kAmNoise = "am_noise";
inline constexpr std::string_view kChirp = "chirp";
inline constexpr std::string_view kGeneral = "general";

std::vector<std::string> SyntheticTargetClasses();
bool IsSyntheticClass(std::string_view class_id);

struct MonoSound {
  std::vector<float> samples;
  std::vector<EventAnnotation> events;
};

// Deterministic for fixed (class_id, seed). Events are separated by exact
// silence. Throws kInvalidArgument for unknown classes.
MonoSound SynthClassSound(std::string_view class_id, std::uint64_t seed,
                          double duration_s);

// Loops a sound (and its annotations) until it covers `duration_s`.
MonoSound LoopToDuration(const MonoSound& sound, double duration_s);

// A sound "file": either a synthetic (class, seed, length) triple or a WAV
// file with an annotation sidecar.
struct SoundRef {
  std::string class_id;
  std::uint64_t seed = 0;
  double length_s = 0.0;
  std::string path;  // empty for synthetic sounds

  bool IsSynthetic() const { return path.empty(); }
  std::string FileId() const;
};

MonoSound LoadSound(const SoundRef& ref);

enum class SourceRole { kTarget, kDistractor };

struct SourceSpec {
  SoundRef sound;
  double azimuth_deg = 0.0;
  SourceRole role = SourceRole::kDistractor;
};

enum class SceneMode { kBisected, kTargetAtZero, kFrontLeft, kEarCentered };
inline constexpr SceneMode kAllSceneModes[] = {
    SceneMode::kBisected, SceneMode::kTargetAtZero, SceneMode::kFrontLeft,
    SceneMode::kEarCentered};
std::string_view ModeName(SceneMode mode);
SceneMode ParseMode(std::string_view name);

struct SceneConfig {
  std::string id;
  std::vector<SourceSpec> sources;
  std::vector<double> snr_db;  // one per distractor, in source order
  std::optional<SceneMode> mode;  // empty for randomly sampled training scenes
  std::optional<double> diffuse_snr_db;
  double duration_s = 30.0;
  std::uint64_t rng_seed = 0;
  // Test-grid coordinates, informational.
  double azimuth_gap_deg = 0.0;
  std::string target_position;  // "end", "center" or empty

  std::size_t TargetIndex() const;
  const SourceSpec& Target() const { return sources[TargetIndex()]; }
  // Throws kConfig when an invariant does not hold.
  void Validate() const;
};

// Per-source ground truth carried along with rendered scenes.
struct SourceAnnotation {
  std::string class_id;
  std::string file_id;
  double azimuth_deg = 0.0;
  SourceRole role = SourceRole::kDistractor;
  std::vector<EventAnnotation> events;
};

struct BinauralSignal {
  std::vector<float> left;
  std::vector<float> right;
  std::vector<SourceAnnotation> annotations;

  std::size_t size() const { return left.size(); }
  double duration_s() const;
};

struct ImpulseResponse {
  double azimuth_deg = 0.0;
  std::vector<float> left;
  std::vector<float> right;
};

struct HeadModel {
  enum class Kind { kParametricSphere, kImpulseResponseSet };
  Kind kind = Kind::kParametricSphere;
  double head_radius_m = 0.0875;
  double speed_of_sound = 343.0;
  // Impulse-response sets only.
  double ir_sample_rate = 0.0;
  double ir_grid_step_deg = 0.0;
  std::vector<ImpulseResponse> irs;

  static HeadModel Parametric(double radius_m = 0.0875);
  // JSON: {"sample_rate":..,"grid_step_deg":..,"irs":[{"azimuth_deg":..,
  // "left":[..],"right":[..]}]}
  static HeadModel LoadImpulseResponses(const std::filesystem::path& path);
  void Validate() const;
  std::string Describe() const;
};

// Woodworth spherical-head ITD in seconds, mirrored about the ear axis beyond
// +-90 degrees. Positive azimuths (left hemisphere) give positive ITDs.
double WoodworthItd(double azimuth_deg, double radius_m, double speed_of_sound);

BinauralSignal RenderSource(std::span<const float> mono, double azimuth_deg,
                            const HeadModel& head);

// Mean power over frames whose power exceeds -40 dB re. the peak frame
// power, averaged over both channels (20 ms / 10 ms frames).
double ActiveMeanPower(std::span<const float> left, std::span<const float> right);

// Per-frame power (mean of both channels) on the 20 ms / 10 ms frame grid.
std::vector<double> FramePower(std::span<const float> left,
                               std::span<const float> right);

struct MixedScene {
  BinauralSignal signal;
  // Per source, per frame power of its (scaled) ear signals.
  std::vector<std::vector<double>> source_frame_power;
  std::vector<double> source_gain;
};

MixedScene MixScene(const SceneConfig& cfg, const HeadModel& head);

// 360 independent white-noise point sources at 1 degree steps, unscaled.
BinauralSignal RenderDiffuseNoise(std::size_t num_samples, const HeadModel& head,
                                  std::uint64_t seed);

// Adds diffuse noise at the given point-sources-to-diffuse ratio. +inf
// returns the scene unchanged.
BinauralSignal AddDiffuseNoise(const BinauralSignal& scene, double snr_db,
                               const HeadModel& head, std::uint64_t seed);

enum class SuiteKind { kTrain, kTest };

struct SoundPool {
  std::vector<std::string> target_classes;
  std::string general_class = std::string(kGeneral);
  std::map<std::string, std::vector<SoundRef>> files;  // by class
};

// Synthetic catalog: `files_per_class` sounds for each target class and for
// the general class, natural lengths 4-8 s.
SoundPool SyntheticCatalog(const std::vector<std::string>& target_classes,
                           std::size_t files_per_class, std::uint64_t seed);

// WAV directory: one subdirectory per class, `<stem>.wav` with `<stem>.csv`
// annotation sidecars. The `general` subdirectory is the general class.
SoundPool LoadWavDataset(const std::filesystem::path& root);

// File-level split; per class the first round(fraction * n) shuffled files
// go to training. Each side keeps at least one file per class.
std::pair<SoundPool, SoundPool> SplitPool(const SoundPool& pool,
                                          double train_fraction,
                                          std::uint64_t seed);

struct SuiteOptions {
  std::size_t train_scenes = 80;
  double duration_s = 30.0;
  std::vector<std::string> target_classes = SyntheticTargetClasses();
};

// Train: randomly sampled scenes. Test: the crossed grid of source counts,
// SNRs, azimuth gaps, scene modes and target positions (see suite.md for
// the pruning rules). Sounds are synthetic placeholders; BindSounds assigns
// real pool files.
std::vector<SceneConfig> BuildSceneSuite(SuiteKind kind, std::uint64_t seed,
                                         const SuiteOptions& options = {});

// Deterministic stratified subset of a test grid: single-source scenes get
// `n / 5` (at least one) slots, the rest is split evenly over scene modes.
std::vector<SceneConfig> SelectSubset(const std::vector<SceneConfig>& suite,
                                      std::size_t n, std::uint64_t seed);

// Assigns pool sounds to scene sources. With `all_targets`, every scene is
// expanded into one instance per target class; otherwise the scene keeps its
// target class. Target files rotate through the class' files; distractors
// draw classes different from the target.
std::vector<SceneConfig> BindSounds(const std::vector<SceneConfig>& scenes,
                                    const SoundPool& pool, bool all_targets,
                                    std::uint64_t seed);

void SaveSuite(const std::filesystem::path& path,
               const std::vector<SceneConfig>& scenes);
std::vector<SceneConfig> LoadSuite(const std::filesystem::path& path);

}  // namespace seld::scene
