// Command-line front end: compile parse trees into computation graphs,
// generate synthetic datasets, train, ground single scenes, evaluate, and
// run the gradient self-test. Machine-readable results go to --out files;
// progress goes to stderr.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "groundnet/errors.hpp"
#include "groundnet/graph_compiler.hpp"
#include "groundnet/model.hpp"
#include "groundnet/modules.hpp"
#include "groundnet/scene.hpp"
#include "groundnet/selfcheck.hpp"
#include "groundnet/synthgen.hpp"
#include "groundnet/tape.hpp"
#include "groundnet/training.hpp"
#include "groundnet/treebank.hpp"

namespace fs = std::filesystem;
using namespace groundnet;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_output(const std::optional<std::string>& out_path, const std::string& content) {
  if (out_path) {
    std::ofstream out(*out_path);
    if (!out) throw Error("cannot open output file: " + *out_path);
    out << content;
    if (!out) throw Error("failed writing output file: " + *out_path);
  } else {
    std::cout << content;
  }
}

Lexicon lexicon_from_flag(const std::optional<std::string>& path) {
  return path ? Lexicon::from_file(*path) : Lexicon::defaults();
}

std::vector<std::string> stopword_list(const Lexicon& lexicon) {
  return {lexicon.stopwords.begin(), lexicon.stopwords.end()};
}

int cmd_compile(const std::string& tree_path, const std::string& format,
                const std::optional<std::string>& out_path,
                const std::optional<std::string>& lexicon_path) {
  const Lexicon lexicon = lexicon_from_flag(lexicon_path);
  const GraphFormat fmt = format == "json" ? GraphFormat::Json : GraphFormat::Dot;
  std::string output;
  for (const ParseTree& tree : read_ptb_lines(read_file(tree_path))) {
    output += export_graph(generate_computation_graph(tree, lexicon), fmt);
  }
  if (output.empty()) throw Error("no trees found in " + tree_path);
  write_output(out_path, output);
  return 0;
}

int cmd_gen(const std::string& config_path, const std::string& out_dir, std::uint64_t seed,
            std::int64_t train, std::int64_t val, std::int64_t test) {
  const WorldSpec spec = WorldSpec::from_json_file(config_path);
  if (val < 0) val = static_cast<std::int64_t>(std::llround(0.025 * static_cast<double>(train)));
  const std::int64_t effective_train = train - val;
  if (effective_train <= 0) throw Error("training split would be empty");

  std::cerr << "generating " << effective_train << " train / " << val << " val / " << test
            << " test scenes (seed " << seed << ")\n";
  DatasetSplits splits = gen_dataset(spec, seed, effective_train, val, test);

  fs::create_directories(out_dir);
  save_dataset(splits.train, (fs::path(out_dir) / "train.jsonl").string());
  save_dataset(splits.validation, (fs::path(out_dir) / "val.jsonl").string());
  save_dataset(splits.test, (fs::path(out_dir) / "test.jsonl").string());
  std::ofstream spec_copy(fs::path(out_dir) / "world.json");
  spec_copy << spec.to_json();
  std::cerr << "wrote " << out_dir << "/{train,val,test}.jsonl\n";
  return 0;
}

int cmd_train(const std::string& dataset, const std::optional<std::string>& config_path,
              const std::string& out_path, std::optional<std::uint64_t> seed,
              const std::optional<std::string>& lexicon_path) {
  TrainConfig config = config_path ? TrainConfig::from_json_file(*config_path) : TrainConfig{};
  if (seed) config.seed = *seed;

  fs::path base(dataset);
  std::string train_file = dataset;
  std::string val_file;
  if (fs::is_directory(base)) {
    train_file = (base / "train.jsonl").string();
    val_file = (base / "val.jsonl").string();
  }
  const std::vector<Scene> train_scenes = load_dataset(train_file);
  const std::vector<Scene> val_scenes =
      (!val_file.empty() && fs::exists(val_file)) ? load_dataset(val_file) : std::vector<Scene>{};

  const Lexicon lexicon = lexicon_from_flag(lexicon_path);
  Model model = train(train_scenes, val_scenes, config, stopword_list(lexicon),
                      [](const EpochStats& s) {
                        std::cerr << "epoch " << s.epoch << ": lr=" << s.learning_rate
                                  << " mean_loss=" << s.mean_train_loss
                                  << " val_target_acc=" << s.validation_target_accuracy << "\n";
                      });
  save_checkpoint(model, out_path);
  std::cerr << "wrote checkpoint " << out_path << "\n";
  return 0;
}

int cmd_ground(const std::string& checkpoint_path, const std::string& dataset_path,
               std::int64_t index, const std::string& out_prefix) {
  const Model model = load_checkpoint(checkpoint_path);
  const std::vector<Scene> scenes = load_dataset(dataset_path);
  if (index < 0 || index >= static_cast<std::int64_t>(scenes.size())) {
    throw Error("scene index " + std::to_string(index) + " out of range (dataset has " +
                std::to_string(scenes.size()) + " scenes)");
  }
  const Scene& scene = scenes[static_cast<std::size_t>(index)];

  Lexicon lexicon;
  lexicon.stopwords.insert(model.stopwords.begin(), model.stopwords.end());
  const ComputationGraph graph = generate_computation_graph(read_ptb(scene.parse), lexicon);
  const GroundingResult result = execute(graph, scene, model);

  write_output(out_prefix + ".json", grounding_to_json(graph, result));
  write_output(out_prefix + ".dot", grounding_to_dot(graph, result));
  std::cerr << "wrote " << out_prefix << ".json and " << out_prefix << ".dot\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& dataset_path,
             const std::optional<std::string>& out_path) {
  const Model model = load_checkpoint(checkpoint_path);
  const std::vector<Scene> scenes = load_dataset(dataset_path);
  const EvalReport report = evaluate(scenes, model);
  std::cout << report.to_table();
  if (out_path) write_output(out_path, report.to_json());
  return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  const GradCheckReport report = run_grad_check_suite(seed);
  for (const GradCheckEntry& e : report.entries) {
    std::cout << e.name << ": max rel err " << e.max_rel_err << " over " << e.points
              << " points\n";
  }
  std::cout << "overall max rel err: " << report.max_rel_err << "\n";
  if (!report.passed()) {
    std::cerr << "gradient check FAILED (tolerance 1e-4)\n";
    return 1;
  }
  std::cout << "gradient check passed (tolerance 1e-4)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"groundnet: syntax-driven referring-expression grounding"};
  app.require_subcommand(1);

  // compile
  std::string tree_path, format = "dot";
  std::optional<std::string> out_path, lexicon_path;
  CLI::App* compile = app.add_subcommand("compile", "translate parse trees into computation graphs");
  compile->add_option("--tree", tree_path, "file with one bracketed tree per line")->required();
  compile->add_option("--format", format, "output format")
      ->check(CLI::IsMember({"dot", "json"}));
  compile->add_option("--out", out_path, "output file (stdout when absent)");
  compile->add_option("--lexicon", lexicon_path, "stopword file, one word per line");

  // gen
  std::string gen_config, gen_out;
  std::uint64_t gen_seed = 0;
  std::int64_t gen_train = 8000, gen_val = -1, gen_test = 1000;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--config", gen_config, "world spec JSON file")->required();
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "generation seed");
  gen->add_option("--train", gen_train, "train scenes (validation carved from this count)");
  gen->add_option("--val", gen_val, "validation scenes (default: 2.5% of --train)");
  gen->add_option("--test", gen_test, "test scenes");

  // train
  std::string train_dataset, train_out;
  std::optional<std::string> train_config, train_lexicon;
  std::optional<std::uint64_t> train_seed;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--dataset", train_dataset,
                        "dataset directory (train.jsonl/val.jsonl) or a single scene file")
      ->required();
  train_cmd->add_option("--config", train_config, "train config JSON file");
  train_cmd->add_option("--out", train_out, "checkpoint output path")->required();
  train_cmd->add_option("--seed", train_seed, "overrides the config seed");
  train_cmd->add_option("--lexicon", train_lexicon, "stopword file, one word per line");

  // ground
  std::string ground_ckpt, ground_dataset, ground_out;
  std::int64_t ground_index = 0;
  CLI::App* ground = app.add_subcommand("ground", "per-node distributions for one scene");
  ground->add_option("--checkpoint", ground_ckpt, "trained checkpoint")->required();
  ground->add_option("--dataset", ground_dataset, "scene file")->required();
  ground->add_option("--index", ground_index, "scene index within the file");
  ground->add_option("--out", ground_out, "output prefix (.json/.dot appended)")->required();

  // eval
  std::string eval_ckpt, eval_dataset;
  std::optional<std::string> eval_out;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--checkpoint", eval_ckpt, "trained checkpoint")->required();
  eval_cmd->add_option("--dataset", eval_dataset, "scene file")->required();
  eval_cmd->add_option("--out", eval_out, "JSON report output path");

  // gradcheck
  std::uint64_t gc_seed = 0;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "verify gradients of every module");
  gradcheck->add_option("--seed", gc_seed, "seed for the random check points");

  CLI11_PARSE(app, argc, argv);

  try {
    if (compile->parsed()) return cmd_compile(tree_path, format, out_path, lexicon_path);
    if (gen->parsed()) return cmd_gen(gen_config, gen_out, gen_seed, gen_train, gen_val, gen_test);
    if (train_cmd->parsed()) {
      return cmd_train(train_dataset, train_config, train_out, train_seed, train_lexicon);
    }
    if (ground->parsed()) return cmd_ground(ground_ckpt, ground_dataset, ground_index, ground_out);
    if (eval_cmd->parsed()) return cmd_eval(eval_ckpt, eval_dataset, eval_out);
    if (gradcheck->parsed()) return cmd_gradcheck(gc_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
