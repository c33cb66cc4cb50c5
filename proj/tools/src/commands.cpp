// Copyright 2026 The DRBN Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "drbn_tools/commands.hpp"

#include "drbn_tools/arch.hpp"

#include "drbn/classifier.hpp"
#include "drbn/dataset.hpp"
#include "drbn/image_io.hpp"
#include "drbn/parallel.hpp"
#include "drbn/persistence.hpp"
#include "drbn/trainer.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace drbn::tools {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974ULL;
constexpr std::uint64_t kLabelDraw = 0x6c61626cULL;
constexpr std::uint64_t kProbeStream = 0x70726f62ULL;

// Reported with exit code 2 and the subcommand usage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataOptions {
  std::string root;
  std::string binarize = "threshold";
  double threshold = 0.5;
  std::size_t image_size = 28;
  std::uint64_t binarize_seed = 0;
  std::size_t limit = 0;

  void add_to(CLI::App& app) {
    app.add_option("--binarize", binarize, "threshold or bernoulli")
        ->check(CLI::IsMember({"threshold", "bernoulli"}))
        ->capture_default_str();
    app.add_option("--threshold", threshold, "Binarization threshold")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app.add_option("--binarize-seed", binarize_seed, "Seed for bernoulli binarization")
        ->capture_default_str();
    app.add_option("--image-size", image_size, "Side length for image-directory datasets")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--limit", limit, "Use only the first N images of each split (0 = all)")
        ->capture_default_str();
  }

  // A relative name that does not exist is looked up under data/.
  fs::path resolve() const {
    const fs::path p(root);
    if (fs::exists(p)) return p;
    if (p.is_relative() && fs::exists(fs::path("data") / p)) return fs::path("data") / p;
    throw UsageError("dataset path does not exist: " + root);
  }

  Dataset load(const std::string& split) const {
    Dataset ds = load_dataset_split(resolve(), split, image_size);
    if (limit > 0 && limit < ds.size()) ds = ds.head(limit);
    ds.validate();
    Binarization how;
    how.mode = binarize == "bernoulli" ? BinarizeMode::bernoulli : BinarizeMode::threshold;
    how.threshold = threshold;
    how.seed = mix_seed(binarize_seed, split == "test" ? 1 : 0);
    ds.images = drbn::binarize(ds.images, how);
    return ds;
  }
};

std::optional<Dataset> try_load(const DataOptions& data, const std::string& split) {
  try {
    return data.load(split);
  } catch (const DatasetError&) {
    return std::nullopt;
  } catch (const std::system_error&) {
    return std::nullopt;
  }
}

Tensor as_network_input(const Tensor& images, const Drbn& net) {
  return images.reshaped(batched(images.rows(), net.input_shape()));
}

// Image height and width of a network input shape.
std::pair<std::size_t, std::size_t> image_dims(const Shape& input) {
  if (input.size() >= 2) return {input[0], input[1]};
  const auto d = input.at(0);
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d))));
  if (side * side == d) return {side, side};
  return {1, d};
}

Tensor as_images(const Tensor& visible, const Shape& input) {
  const auto [h, w] = image_dims(input);
  if (input.size() == 3 && input[2] != 1) {
    throw ShapeError("cannot render " + to_string(input) + " inputs as grayscale images");
  }
  return visible.reshaped({visible.rows(), h, w});
}

std::size_t default_cols(std::size_t n) {
  return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  DataOptions data;
  std::string arch;
  std::uint64_t seed = 0;
  TrainConfig config;
  double init_std = 0.01;
  std::string out_dir = ".";
  std::string model_path;
  std::string checkpoint_path;
  std::string resume_path;
  std::size_t heldout = 1000;
  std::size_t sample_every = 1;
  std::size_t sample_count = 16;
  std::size_t sample_steps = 100;
  bool quiet = false;
};

int cmd_train(const TrainOptions& o, std::ostream& out) {
  const Dataset train = o.data.load("train");
  const std::optional<Dataset> test = try_load(o.data, "test");

  TrainConfig config = o.config;
  config.seed = o.seed;
  TrainingState state;
  if (!o.resume_path.empty()) {
    state = load_checkpoint(o.resume_path);
    if (state.seed != config.seed) {
      throw UsageError("checkpoint was written with seed " + std::to_string(state.seed) +
                       ", not " + std::to_string(config.seed));
    }
  } else {
    const NetworkSpec spec = parse_architecture(o.arch, train.height(), train.width());
    state = TrainingState::start(initial_network(spec, o.seed, o.init_std), config);
  }
  const Drbn& net = state.net;
  if (shape_size(net.input_shape()) != train.height() * train.width()) {
    throw UsageError("network input " + to_string(net.input_shape()) + " does not match " +
                     std::to_string(train.height()) + "x" + std::to_string(train.width()) + " images");
  }

  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  const fs::path model_path = o.model_path.empty() ? dir / "model.drbn" : fs::path(o.model_path);
  const fs::path log_path = dir / "train.log";

  const Tensor data = as_network_input(train.images, net);
  std::optional<Tensor> heldout;
  if (test && o.heldout > 0) heldout = as_network_input(test->head(o.heldout).images, net);

  if (!o.quiet) out << "architecture: " << net.spec().describe() << "\n";

  std::ostringstream log_text;
  FitOptions fit_options;
  if (heldout) fit_options.heldout = &*heldout;
  fit_options.callbacks.push_back([&](const TrainRecord& rec, const Drbn&) {
    log_text << rec.to_line() << '\n';
    if (!o.quiet) out << rec.to_line() << std::endl;
  });
  fit_options.on_epoch_end = [&](std::uint64_t epoch, const TrainingState& s) {
    write_text_atomic(log_path, log_text.str());
    if (!o.checkpoint_path.empty()) save_checkpoint(s, o.checkpoint_path);
    if (o.sample_every > 0 && (epoch + 1) % o.sample_every == 0) {
      const Tensor samples = generate(s.net, o.sample_count, o.sample_steps, mix_seed(o.seed, epoch));
      export_grid(as_images(samples, s.net.input_shape()), default_cols(o.sample_count),
                  dir / ("samples_epoch" + std::to_string(epoch + 1) + ".pgm"));
    }
  };
  fit(data, state, config, fit_options);

  write_text_atomic(log_path, log_text.str());
  if (!o.checkpoint_path.empty()) save_checkpoint(state, o.checkpoint_path);
  save_model(state.net, model_path);
  if (!o.quiet) out << "model: " << model_path.string() << " (" << state.step << " updates)\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct GenerateOptions {
  std::string model;
  std::size_t steps = 10000;
  std::size_t count = 100;
  std::size_t cols = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate(const GenerateOptions& o, std::ostream& out) {
  const Drbn net = load_model(o.model);
  const Tensor probs = generate(net, o.count, o.steps, o.seed);
  export_grid(as_images(probs, net.input_shape()), o.cols == 0 ? default_cols(o.count) : o.cols, o.out);
  out << "wrote " << o.count << " samples (" << o.steps << " Gibbs steps) to " << o.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SemisupOptions {
  DataOptions data;
  std::string model;
  std::string name;
  std::string arch;
  std::string phase = "frozen";
  std::size_t labels = 0;
  std::size_t runs = 10;
  std::size_t validation = 1000;
  std::uint64_t seed = 0;
  std::size_t epochs = 100;
  std::size_t finetune_epochs = 30;
  std::size_t batch = 100;
  std::optional<double> lr;
  double head_lr = 1e-3;
  std::string metrics;
};

struct RunSplit {
  LabeledSet train;
  std::optional<LabeledSet> validation;
};

RunSplit draw_run(const Tensor& inputs, const std::vector<int>& labels, std::size_t n_labels,
                  std::size_t n_validation, std::uint64_t seed) {
  Rng rng(mix_seed(seed, kLabelDraw));
  const auto perm = random_permutation(labels.size(), rng);
  auto pick = [&](std::size_t begin, std::size_t end) {
    const std::span<const std::size_t> idx(perm.data() + begin, end - begin);
    LabeledSet s;
    s.inputs = inputs.gather_rows(idx);
    for (auto i : idx) s.labels.push_back(labels[i]);
    return s;
  };
  RunSplit split{pick(0, n_labels), std::nullopt};
  const std::size_t v_end = std::min(labels.size(), n_labels + n_validation);
  if (v_end > n_labels) split.validation = pick(n_labels, v_end);
  return split;
}

std::string mean_line(const std::vector<MetricRecord>& records) {
  double total = 0.0;
  for (const auto& r : records) total += r.test_error;
  std::ostringstream os;
  os << "labels_used=" << records.front().labels_used << " model=" << records.front().model
     << " phase=" << records.front().phase << " runs=" << records.size()
     << " mean_test_error=" << std::setprecision(6) << total / static_cast<double>(records.size());
  return os.str();
}

int cmd_semisup(const SemisupOptions& o, std::ostream& out) {
  if (o.labels == 0) throw UsageError("--labels must be at least 1");
  if (o.runs == 0) throw UsageError("--runs must be at least 1");
  const bool scratch = o.phase == "scratch";
  if (!scratch && o.model.empty()) throw UsageError("--model is required for phase " + o.phase);
  if (scratch && o.model.empty() && o.arch.empty()) {
    throw UsageError("phase scratch needs --arch or --model for the layer sizes");
  }

  const Dataset train = o.data.load("train");
  const Dataset test = o.data.load("test");
  if (!train.labels || !test.labels) throw DatasetError("semisup needs labeled train and test splits");
  if (o.labels > train.size()) {
    throw UsageError("--labels " + std::to_string(o.labels) + " exceeds the " +
                     std::to_string(train.size()) + " training images");
  }

  std::optional<Drbn> net;
  if (!o.model.empty()) net = load_model(o.model);
  const std::string model_name =
      !o.name.empty() ? o.name : scratch ? "plain_fc" : fs::path(o.model).stem().string();

  std::map<std::string, std::vector<MetricRecord>> by_phase;
  std::ostringstream metrics_text;
  auto emit = [&](MetricRecord rec) {
    out << rec.to_line() << std::endl;
    metrics_text << rec.to_line() << '\n';
    by_phase[rec.phase].push_back(std::move(rec));
  };

  if (scratch) {
    std::vector<std::size_t> hidden;
    Shape input{train.height(), train.width()};
    if (!o.arch.empty()) {
      for (const auto& l : parse_architecture(o.arch, train.height(), train.width()).layers) {
        if (l.kind != LayerKind::dense) throw UsageError("phase scratch supports dense layers only");
        hidden.push_back(l.hidden_size());
      }
    } else {
      for (const auto& l : net->spec().layers) hidden.push_back(l.hidden_size());
    }
    const Tensor train_in = train.images;
    const LabeledSet test_set{test.images, *test.labels};
    for (std::size_t r = 0; r < o.runs; ++r) {
      const std::uint64_t seed = o.seed + r;
      const RunSplit split = draw_run(train_in, *train.labels, o.labels, o.validation, seed);
      SupervisedConfig cfg;
      cfg.epochs = o.epochs;
      cfg.batch_size = o.batch;
      cfg.adam.learning_rate = o.lr.value_or(1e-3);
      cfg.seed = seed;
      const auto result = plain_fc_baseline(split.train, split.validation ? &*split.validation : nullptr,
                                            input, hidden, cfg);
      emit({o.labels, model_name, "scratch", seed, network_error(result.net, result.head, test_set)});
    }
  } else {
    const Tensor train_in = as_network_input(train.images, *net);
    const Tensor test_in = as_network_input(test.images, *net);
    const Tensor train_features = extract_features(*net, train_in);
    const Tensor test_features = extract_features(*net, test_in);
    for (std::size_t r = 0; r < o.runs; ++r) {
      const std::uint64_t seed = o.seed + r;
      const RunSplit feats = draw_run(train_features, *train.labels, o.labels, o.validation, seed);
      SupervisedConfig head_cfg;
      head_cfg.epochs = o.epochs;
      head_cfg.batch_size = o.batch;
      head_cfg.seed = seed;
      head_cfg.adam.learning_rate = o.phase == "frozen" ? o.lr.value_or(1e-3) : o.head_lr;
      const HeadResult head =
          train_head(feats.train, feats.validation ? &*feats.validation : nullptr, head_cfg);
      emit({o.labels, model_name, "frozen", seed, error_rate(head.head, test_features, *test.labels)});

      if (o.phase == "finetune") {
        const RunSplit raw = draw_run(train_in, *train.labels, o.labels, o.validation, seed);
        SupervisedConfig tune_cfg = head_cfg;
        tune_cfg.epochs = o.finetune_epochs;
        tune_cfg.adam.learning_rate = o.lr.value_or(1e-4);
        const FineTuneResult tuned = fine_tune(*net, head.head, raw.train,
                                               raw.validation ? &*raw.validation : nullptr, tune_cfg);
        emit({o.labels, model_name, "finetune", seed,
              network_error(tuned.net, tuned.head, LabeledSet{test_in, *test.labels})});
      }
    }
  }

  for (const auto& [phase, records] : by_phase) {
    const std::string line = mean_line(records);
    out << line << "\n";
    metrics_text << line << '\n';
  }
  if (!o.metrics.empty()) write_text_atomic(o.metrics, metrics_text.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct InspectOptions {
  std::string model;
  std::size_t probe = 16;
  std::uint64_t seed = 0;
};

int cmd_inspect(const InspectOptions& o, std::ostream& out) {
  const Drbn net = load_model(o.model);
  const NetworkSpec spec = net.spec();
  out << "architecture: " << format_architecture(spec) << "\n";
  out << "input: " << to_string(net.input_shape()) << "\n";
  out << "layers: " << net.depth() << "\n";
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const auto& ls = spec.layers[l];
    const bool dense = ls.kind == LayerKind::dense;
    out << "layer " << l << ": " << (dense ? "dense" : "conv") << " visible="
        << to_string(dense ? Shape{ls.visible_size()} : ls.visible_shape)
        << " hidden=" << to_string(ls.hidden_shape) << " weights=" << ls.weight_count();
    if (ls.flatten) out << " flattened_from=" << to_string(ls.visible_shape);
    out << "\n";
  }
  out << "weights: " << network_weight_count(spec) << "\n";

  if (o.probe > 0) {
    Rng rng(mix_seed(o.seed, kProbeStream));
    Tensor x = bernoulli_sample(Tensor(batched(o.probe, net.input_shape()), 0.5), rng);
    out << "probe_free_energy:";
    for (std::size_t l = 0; l < net.depth(); ++l) {
      const auto fe = layer_free_energy(net.layer(l), x);
      double m = 0.0;
      for (double v : fe) m += v;
      out << " layer" << l << "=" << std::setprecision(10) << m / static_cast<double>(fe.size());
      x = layer_prob_hidden(net.layer(l), x);
      x.reshape(batched(o.probe, net.state_shape(l + 1)));
    }
    out << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

void add_config(CLI::App& app, std::string& sink) {
  app.add_option("--config", sink, "Read key=value options from a file (flags win)");
}

bool given(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Splices key=value lines of the --config file into the argument list as
// --key value, skipping keys already given as flags. Blank lines, # and ;
// comments and [section] headers are ignored; true/false toggle flags.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) file = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) file = args[i].substr(9);
  }
  if (file.empty()) return args;
  std::ifstream in(file);
  if (!in) throw UsageError("cannot read config file " + file);

  std::vector<std::string> injected;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(file + ":" + std::to_string(number) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    const std::string flag = "--" + key;
    if (key == "config" || given(args, flag)) continue;
    if (value == "true") {
      injected.push_back(flag);
    } else if (value != "false") {
      injected.push_back(flag);
      injected.push_back(value);
    }
  }
  std::vector<std::string> out(args.begin(), args.begin() + 1);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

}  // namespace

Drbn initial_network(const NetworkSpec& spec, std::uint64_t seed, double init_std) {
  Rng init(mix_seed(seed, kInitStream));
  return Drbn::initialize(spec, init, init_std);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stacked RBM networks (DRBN): train, sample, evaluate", "drbn"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", "drbn 0.1.0");
  std::string config_file;

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train a network with joint PCD");
  add_config(*train_cmd, config_file);
  train_cmd->add_option("--data", train.data.root, "Data root (IDX files or train/ test/ subdirectories)")
      ->required();
  train_cmd->add_option("--arch", train.arch, "Architecture, e.g. dense:500,dense:1000");
  train_cmd->add_option("--seed", train.seed, "Seed for every random decision")->required();
  train_cmd->add_option("--k", train.config.gibbs_steps, "Gibbs steps per update")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--particles", train.config.n_particles, "Persistent particles N")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--batch", train.config.batch_size, "Minibatch size M")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--epochs", train.config.epochs, "Passes over the training split")
      ->capture_default_str();
  train_cmd->add_option("--max-steps", train.config.max_steps, "Stop after this many updates (0 = no cap)")
      ->capture_default_str();
  train_cmd->add_option("--lr", train.config.adam.learning_rate, "Adam learning rate")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  train_cmd->add_option("--log-every", train.config.log_every, "Log every N updates (0 = epoch ends)")
      ->capture_default_str();
  train_cmd->add_option("--init-std", train.init_std, "Stddev of the Gaussian weight init")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  train_cmd->add_option("--out", train.out_dir, "Output directory")->capture_default_str();
  train_cmd->add_option("--model-out", train.model_path, "Model file (default <out>/model.drbn)");
  train_cmd->add_option("--checkpoint", train.checkpoint_path, "Write a resumable checkpoint here");
  train_cmd->add_option("--resume", train.resume_path, "Continue from a checkpoint");
  train_cmd->add_option("--heldout", train.heldout, "Test images used for the free-energy gap")
      ->capture_default_str();
  train_cmd->add_option("--sample-every", train.sample_every, "Sample grid every N epochs (0 = never)")
      ->capture_default_str();
  train_cmd->add_option("--sample-count", train.sample_count, "Images per sample grid")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--sample-steps", train.sample_steps, "Gibbs steps per sample grid")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_flag("--quiet", train.quiet, "Only write files");
  train.data.add_to(*train_cmd);

  GenerateOptions gen;
  auto* gen_cmd = app.add_subcommand("generate", "Sample images from a model");
  add_config(*gen_cmd, config_file);
  gen_cmd->add_option("--model", gen.model, "Model file")->required();
  gen_cmd->add_option("--steps", gen.steps, "Gibbs iterations")->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--count", gen.count, "Number of images")->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--cols", gen.cols, "Grid columns (0 = square-ish)")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Sampling seed")->required();
  gen_cmd->add_option("--out", gen.out, "Output PGM file")->required();

  SemisupOptions semi;
  auto* semi_cmd = app.add_subcommand("semisup", "Semi-supervised evaluation with a softmax head");
  add_config(*semi_cmd, config_file);
  semi_cmd->add_option("--data", semi.data.root, "Data root with labeled train and test splits")->required();
  semi_cmd->add_option("--model", semi.model, "Pretrained model (not needed for phase scratch)");
  semi_cmd->add_option("--name", semi.name, "Model name in the metric records");
  semi_cmd->add_option("--arch", semi.arch, "Dense layer sizes for phase scratch");
  semi_cmd->add_option("--phase", semi.phase, "frozen, finetune or scratch")
      ->check(CLI::IsMember({"frozen", "finetune", "scratch"}))
      ->capture_default_str();
  semi_cmd->add_option("--labels", semi.labels, "Labeled training images per run")->required();
  semi_cmd->add_option("--runs", semi.runs, "Independent seeded runs")->capture_default_str();
  semi_cmd->add_option("--validation", semi.validation, "Held-back labeled images for model selection")
      ->capture_default_str();
  semi_cmd->add_option("--seed", semi.seed, "Seed of run 0; run r uses seed + r")->capture_default_str();
  semi_cmd->add_option("--epochs", semi.epochs, "Head (or scratch network) epochs")->capture_default_str();
  semi_cmd->add_option("--finetune-epochs", semi.finetune_epochs, "Fine-tuning epochs")->capture_default_str();
  semi_cmd->add_option("--batch", semi.batch, "Minibatch size")->check(CLI::PositiveNumber)->capture_default_str();
  semi_cmd->add_option("--lr", semi.lr,
                       "Learning rate of the trained phase (default 1e-3, finetune 1e-4)");
  semi_cmd->add_option("--head-lr", semi.head_lr, "Head learning rate before fine-tuning")
      ->capture_default_str();
  semi_cmd->add_option("--metrics", semi.metrics, "Write the metric records to this file");
  semi.data.add_to(*semi_cmd);

  InspectOptions insp;
  auto* insp_cmd = app.add_subcommand("inspect", "Print a model's architecture and statistics");
  add_config(*insp_cmd, config_file);
  insp_cmd->add_option("--model", insp.model, "Model file")->required();
  insp_cmd->add_option("--probe", insp.probe, "Random probe batch size (0 = skip)")->capture_default_str();
  insp_cmd->add_option("--seed", insp.seed, "Probe seed")->capture_default_str();

  std::vector<std::string> expanded = args;
  try {
    if (!args.empty() && args.front().rfind("-", 0) != 0) expanded = expand_config(args);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  configure_threads();
  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == train_cmd) {
      if (train.arch.empty() && train.resume_path.empty()) throw UsageError("--arch is required");
      return cmd_train(train, out);
    }
    if (active == gen_cmd) return cmd_generate(gen, out);
    if (active == semi_cmd) return cmd_semisup(semi, out);
    return cmd_inspect(insp, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << active->help();
    return kExitUsage;
  } catch (const ArchParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const PersistenceError& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace drbn::tools
