// Copyright 2026 The fgfi Authors
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

// Command-line front end: featurize WAV directories, synthesise the
// toy corpus, train and evaluate episodic models, dump embeddings, and
// run complexity sweeps. Exit codes: 0 success, 1 validation error,
// 2 runtime failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "fgfi/checkpoint.hpp"
#include "fgfi/complexity.hpp"
#include "fgfi/datagen.hpp"
#include "fgfi/episodic.hpp"
#include "fgfi/feature_io.hpp"
#include "fgfi/frontend.hpp"
#include "fgfi/metrics.hpp"
#include "fgfi/model.hpp"
#include "fgfi/run_config.hpp"
#include "fgfi/wav.hpp"

namespace fs = std::filesystem;
using fgfi::RunConfig;

namespace {

std::string sample_stem(std::int64_t index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%04d", static_cast<int>(index));
  return buf;
}

int cmd_featurize(const RunConfig& rc, const std::string& input_dir) {
  fgfi::require(fs::is_directory(input_dir), "featurize: not a directory: " + input_dir);
  fs::create_directories(rc.out_dir);

  std::vector<fs::path> speaker_dirs;
  for (const auto& entry : fs::directory_iterator(input_dir))
    if (entry.is_directory()) speaker_dirs.push_back(entry.path());
  std::sort(speaker_dirs.begin(), speaker_dirs.end());

  std::vector<fgfi::ManifestEntry> entries;
  std::size_t attempted = 0, failed = 0;
  for (const fs::path& dir : speaker_dirs) {
    const std::string speaker = dir.filename().string();
    std::vector<fs::path> wavs;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".wav")
        wavs.push_back(entry.path());
    std::sort(wavs.begin(), wavs.end());
    for (const fs::path& wav : wavs) {
      ++attempted;
      try {
        fgfi::Waveform w = fgfi::read_wav_pcm16(wav.string());
        fgfi::LogMelFeature f = fgfi::log_mel(w, 25, 10, static_cast<int>(rc.model.n_mels));
        f.speaker_label = speaker;
        const std::string rel = speaker + "/" + wav.stem().string() + ".feat";
        fs::create_directories(fs::path(rc.out_dir) / speaker);
        fgfi::write_features((fs::path(rc.out_dir) / rel).string(), f);
        entries.push_back({speaker, rel});
      } catch (const fgfi::Error& e) {
        ++failed;
        std::cerr << "warning: skipping " << wav.string() << ": " << e.what() << "\n";
      }
    }
  }
  const std::string manifest = (fs::path(rc.out_dir) / "manifest.tsv").string();
  fgfi::write_manifest(manifest, entries);
  std::cout << "featurize: " << entries.size() << " feature files, manifest " << manifest << "\n";
  return (attempted > 0 && failed == attempted) ? 2 : 0;
}

int cmd_synth(const RunConfig& rc) {
  fgfi::SynthSpec spec = rc.synth;
  spec.seed = rc.seed;
  const auto corpus = fgfi::synth_corpus(spec);
  fs::create_directories(rc.out_dir);
  std::vector<fgfi::ManifestEntry> entries;
  std::int64_t within = 0;
  std::string current;
  for (const auto& f : corpus) {
    if (f.speaker_label != current) {
      current = f.speaker_label;
      within = 0;
      fs::create_directories(fs::path(rc.out_dir) / current);
    }
    const std::string rel = current + "/" + sample_stem(within++) + ".feat";
    fgfi::write_features((fs::path(rc.out_dir) / rel).string(), f);
    entries.push_back({current, rel});
  }
  const std::string manifest = (fs::path(rc.out_dir) / "manifest.tsv").string();
  fgfi::write_manifest(manifest, entries);
  std::cout << "synth: " << corpus.size() << " samples over " << spec.num_speakers
            << " speakers, manifest " << manifest << "\n";
  return 0;
}

int cmd_train(const RunConfig& rc) {
  fgfi::require(!rc.manifest.empty(), "train: --manifest (or paths.manifest) is required");
  rc.validate();
  const fgfi::Dataset ds = fgfi::Dataset::load(rc.manifest);
  fgfi::TrainSpec spec = rc.train;
  spec.seed = rc.seed;
  fgfi::ModelParams params = fgfi::ModelParams::init(rc.model, rc.seed);
  const fgfi::TrainResult result = fgfi::train(spec, ds, params);

  fs::create_directories(rc.out_dir);
  const std::string ckpt = rc.checkpoint.empty()
                               ? (fs::path(rc.out_dir) / "checkpoint.fgfi").string()
                               : rc.checkpoint;
  fgfi::save_checkpoint(ckpt, params);
  const std::string trace = (fs::path(rc.out_dir) / "loss_trace.csv").string();
  fgfi::write_loss_trace_csv(trace, result.loss_trace);
  std::cout << "train: " << spec.episodes_total << " episodes, first loss "
            << result.loss_trace.front() << ", last loss " << result.loss_trace.back()
            << "\ncheckpoint " << ckpt << "\nloss trace " << trace << "\n";
  return 0;
}

int cmd_eval(const RunConfig& rc, std::int64_t episodes, std::int64_t eer_trials) {
  fgfi::require(!rc.manifest.empty(), "eval: --manifest (or paths.manifest) is required");
  fgfi::require(!rc.checkpoint.empty(), "eval: --checkpoint (or paths.checkpoint) is required");
  fgfi::require(episodes >= 1, "eval: --episodes must be >= 1");
  const fgfi::Dataset ds = fgfi::Dataset::load(rc.manifest);
  const fgfi::ModelParams params = fgfi::load_checkpoint(rc.checkpoint);

  fgfi::Metrics m;
  m.accuracy = fgfi::eval_accuracy(ds, params, rc.train.n_way, rc.train.k_shot, episodes, rc.seed);
  m.episodes = episodes;
  m.n_way = rc.train.n_way;
  m.k_shot = rc.train.k_shot;
  m.seed = rc.seed;
  if (eer_trials > 0) m.eer = fgfi::verification_eer(ds, params, eer_trials, rc.seed).eer;

  fs::create_directories(rc.out_dir);
  const std::string path = (fs::path(rc.out_dir) / "metrics.json").string();
  fgfi::write_metrics_json(path, m);
  std::cout << fgfi::metrics_to_json(m);
  return 0;
}

int cmd_complexity(const RunConfig& rc, const std::string& sweep_arg, double duration_s) {
  const std::int64_t frames = fgfi::frames_for_seconds(duration_s);
  fs::create_directories(rc.out_dir);
  if (sweep_arg.empty()) {
    const fgfi::ComplexityReport report = fgfi::complexity_report(rc.model, frames);
    const std::string json = fgfi::report_to_json(report) + "\n";
    std::ofstream((fs::path(rc.out_dir) / "complexity.json").string(), std::ios::binary) << json;
    std::cout << json;
    const fgfi::DeviationReport dev = fgfi::reference_deviation(rc.model);
    std::printf("reference deviation: params %+.2f%%, macs(7s) %+.2f%%\n",
                dev.params_deviation_pct, dev.macs_deviation_pct);
    if (!dev.divergence_note.empty()) std::cout << "note: " << dev.divergence_note << "\n";
    return 0;
  }

  const auto eq = sweep_arg.find('=');
  fgfi::require(eq != std::string::npos && eq > 0 && eq + 1 < sweep_arg.size(),
                "complexity: --sweep expects AXIS=v1,v2,... (axis I or ML)");
  const fgfi::SweepAxis axis = fgfi::parse_sweep_axis(sweep_arg.substr(0, eq));
  std::vector<std::int64_t> values;
  std::string rest = sweep_arg.substr(eq + 1);
  std::size_t pos = 0;
  while (pos <= rest.size()) {
    const auto comma = rest.find(',', pos);
    const std::string tok = rest.substr(pos, comma == std::string::npos ? std::string::npos
                                                                        : comma - pos);
    fgfi::require(!tok.empty(), "complexity: empty sweep value");
    values.push_back(fgfi::detail::parse_int(tok, "sweep value"));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }

  const auto rows = fgfi::sweep(rc.model, axis, values, frames);
  const std::string csv = fgfi::sweep_to_csv(rows);
  std::ofstream((fs::path(rc.out_dir) / "complexity.csv").string(), std::ios::binary) << csv;
  std::ofstream((fs::path(rc.out_dir) / "complexity.json").string(), std::ios::binary)
      << fgfi::sweep_to_json(rows);
  std::cout << csv;
  return 0;
}

int cmd_dump_embeddings(const RunConfig& rc) {
  fgfi::require(!rc.manifest.empty(), "dump-embeddings: --manifest is required");
  fgfi::require(!rc.checkpoint.empty(), "dump-embeddings: --checkpoint is required");
  const fgfi::Dataset ds = fgfi::Dataset::load(rc.manifest);
  const fgfi::ModelParams params = fgfi::load_checkpoint(rc.checkpoint);

  fs::create_directories(rc.out_dir);
  const std::string path = (fs::path(rc.out_dir) / "embeddings.csv").string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fgfi::DataError("dump-embeddings: cannot write " + path);
  out << "speaker_id,path";
  for (std::int64_t i = 0; i < params.config.embedding_dim(); ++i) out << ",v" << i;
  out << "\n";
  for (std::int64_t i = 0; i < ds.num_samples(); ++i) {
    const fgfi::Embedding e = fgfi::embed_feature(ds.samples[static_cast<std::size_t>(i)], params);
    out << e.speaker_label << ","
        << (ds.sample_paths.empty() ? "" : ds.sample_paths[static_cast<std::size_t>(i)]);
    for (double v : e.values) out << "," << fgfi::detail::double_repr(v);
    out << "\n";
  }
  if (!out) throw fgfi::DataError("dump-embeddings: write failed for " + path);
  std::cout << "dump-embeddings: " << ds.num_samples() << " rows, " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig rc;
  try {
    for (int i = 1; i < argc; ++i) {
      const std::string a = argv[i];
      if (a == "--config" && i + 1 < argc) {
        fgfi::load_config_file(argv[i + 1], rc);
      } else if (a.rfind("--config=", 0) == 0) {
        fgfi::load_config_file(a.substr(9), rc);
      }
    }
  } catch (const fgfi::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  CLI::App app{"few-shot speaker identification with a grouped-feature prototypical network"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "configuration file ([section] + key = value lines)");
  app.add_option_function<std::uint64_t>(
      "--seed", [&rc](const std::uint64_t& v) { rc.seed = v; }, "seed for all randomness");
  app.add_option_function<std::string>(
      "--out", [&rc](const std::string& v) { rc.out_dir = v; }, "output directory");

  auto add_model_flags = [&rc](CLI::App* cmd) {
    cmd->add_option_function<std::int64_t>(
        "--mels", [&rc](const std::int64_t& v) { rc.model.n_mels = v; }, "input mel bins");
    cmd->add_option_function<std::int64_t>(
        "--groups", [&rc](const std::int64_t& v) { rc.model.num_groups = v; },
        "frequency groups sharing the block");
    cmd->add_option_function<std::int64_t>(
        "--hidden", [&rc](const std::int64_t& v) { rc.model.blstm_hidden = v; },
        "BLSTM hidden units per direction");
    cmd->add_option_function<std::int64_t>(
        "--stem", [&rc](const std::int64_t& v) { rc.model.stem_channels = v; },
        "stem convolution channels");
    cmd->add_option_function<std::int64_t>(
        "--repr-maps", [&rc](const std::int64_t& v) { rc.model.repr_maps = v; },
        "representative maps of the de-redundancy convolution");
    cmd->add_option_function<std::int64_t>(
        "--output-maps", [&rc](const std::int64_t& v) { rc.model.output_maps = v; },
        "output maps of the de-redundancy convolution");
    cmd->add_option_function<std::string>(
        "--distance", [&rc](const std::string& v) { rc.model.distance = fgfi::parse_distance(v); },
        "distance function: squared_euclidean | euclidean");
  };
  auto add_episode_flags = [&rc](CLI::App* cmd) {
    cmd->add_option_function<std::int64_t>(
        "--n-way", [&rc](const std::int64_t& v) { rc.train.n_way = v; }, "speakers per episode");
    cmd->add_option_function<std::int64_t>(
        "--k-shot", [&rc](const std::int64_t& v) { rc.train.k_shot = v; },
        "support samples per speaker");
  };

  CLI::App* featurize = app.add_subcommand(
      "featurize", "convert <speaker>/<sample>.wav trees into feature files + manifest");
  std::string input_dir;
  featurize->add_option("input_dir", input_dir, "directory of <speaker_id>/<sample>.wav")
      ->required();

  CLI::App* synth = app.add_subcommand("synth", "generate the synthetic speaker corpus");
  synth->add_option_function<std::int64_t>(
      "--speakers", [&rc](const std::int64_t& v) { rc.synth.num_speakers = v; }, "speaker count");
  synth->add_option_function<std::int64_t>(
      "--samples-per-speaker",
      [&rc](const std::int64_t& v) { rc.synth.samples_per_speaker = v; },
      "samples per speaker");
  synth->add_option_function<std::int64_t>(
      "--mels", [&rc](const std::int64_t& v) { rc.synth.n_mels = v; }, "mel bins");
  synth->add_option_function<std::int64_t>(
      "--frames", [&rc](const std::int64_t& v) { rc.synth.frames_per_sample = v; },
      "frames per sample");
  synth->add_option_function<std::int64_t>(
      "--templates", [&rc](const std::int64_t& v) { rc.synth.templates_per_speaker = v; },
      "spectral templates per speaker");
  synth->add_option_function<double>(
      "--noise-sigma", [&rc](const double& v) { rc.synth.noise_sigma = v; },
      "additive noise sigma");

  CLI::App* train = app.add_subcommand("train", "episodic training from a feature manifest");
  train->add_option_function<std::string>(
      "--manifest", [&rc](const std::string& v) { rc.manifest = v; }, "feature manifest");
  train->add_option_function<std::string>(
      "--checkpoint", [&rc](const std::string& v) { rc.checkpoint = v; },
      "checkpoint output path (default <out>/checkpoint.fgfi)");
  train->add_option_function<std::int64_t>(
      "--episodes", [&rc](const std::int64_t& v) { rc.train.episodes_total = v; },
      "training episodes");
  train->add_option_function<double>(
      "--lr", [&rc](const double& v) { rc.train.learning_rate = v; }, "SGD learning rate");
  train->add_option_function<std::int64_t>(
      "--query-shot", [&rc](const std::int64_t& v) { rc.train.query_shot = v; },
      "query samples per speaker (default: same as --k-shot)");
  add_model_flags(train);
  add_episode_flags(train);

  CLI::App* eval = app.add_subcommand("eval", "episodic accuracy (and optional verification EER)");
  std::int64_t eval_episodes = 100;
  std::int64_t eer_trials = 0;
  eval->add_option_function<std::string>(
      "--manifest", [&rc](const std::string& v) { rc.manifest = v; }, "feature manifest");
  eval->add_option_function<std::string>(
      "--checkpoint", [&rc](const std::string& v) { rc.checkpoint = v; }, "model checkpoint");
  eval->add_option("--episodes", eval_episodes, "evaluation episodes")->capture_default_str();
  eval->add_option("--eer-trials", eer_trials,
                   "same-speaker trial cap for the EER (0 disables)")
      ->capture_default_str();
  add_episode_flags(eval);

  CLI::App* complexity = app.add_subcommand(
      "complexity", "analytical parameter and MAC accounting for the configured model");
  std::string sweep_arg;
  double duration_s = 1.0;
  complexity->add_option("--sweep", sweep_arg, "axis sweep, e.g. I=1,2,4,8,16 or ML=1,2,4");
  complexity->add_option("--duration-s", duration_s, "input duration in seconds")
      ->capture_default_str();
  add_model_flags(complexity);

  CLI::App* dump = app.add_subcommand("dump-embeddings",
                                      "embed every manifest sample into a CSV for plotting");
  dump->add_option_function<std::string>(
      "--manifest", [&rc](const std::string& v) { rc.manifest = v; }, "feature manifest");
  dump->add_option_function<std::string>(
      "--checkpoint", [&rc](const std::string& v) { rc.checkpoint = v; }, "model checkpoint");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const fgfi::ValidationError& e) {  // thrown by option callbacks
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*featurize) return cmd_featurize(rc, input_dir);
    if (*synth) return cmd_synth(rc);
    if (*train) return cmd_train(rc);
    if (*eval) return cmd_eval(rc, eval_episodes, eer_trials);
    if (*complexity) return cmd_complexity(rc, sweep_arg, duration_s);
    if (*dump) return cmd_dump_embeddings(rc);
    std::cerr << "error: no subcommand selected\n";
    return 1;
  } catch (const fgfi::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
