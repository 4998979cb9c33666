#include "groundnet/selfcheck.hpp"

#include <cmath>

#include "groundnet/errors.hpp"
#include "groundnet/graph_compiler.hpp"
#include "groundnet/modules.hpp"
#include "groundnet/rng.hpp"
#include "groundnet/tape.hpp"
#include "groundnet/treebank.hpp"

namespace groundnet {

namespace {

Tensor random_tensor(std::vector<std::int64_t> shape, Rng& rng, double lo = -1.5,
                     double hi = 1.5) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t.at(i) = rng.uniform(lo, hi);
  return t;
}

// Projects an op output to a scalar through a fixed random weighting so
// every output coordinate contributes to the checked gradient. Takes the
// rng by value: grad_check re-evaluates the objective many times and the
// weighting must be identical on every evaluation.
Var weighted_scalar(Tape& tape, Var out, Rng rng) {
  const Tensor& v = tape.value(out);
  Tensor w = random_tensor(v.shape(), rng);
  Var flat = v.rank() == 1 ? out : tape.reshape(out, {v.size()});
  Var wflat = tape.constant(v.rank() == 1 ? w : Tensor::from({v.size()}, w.values()));
  return tape.sum(tape.elementwise_mul(flat, wflat));
}

struct MiniSetup {
  Model model;
  Scene scene;
  std::int64_t target_index = 0;
};

MiniSetup make_mini_setup(Rng& rng) {
  MiniSetup s;
  s.model.config.hidden_size = 3;
  s.model.config.embed_size = 4;
  s.model.config.visual_dim = 3;
  s.model.vocab.words = {"<null>", "<unk>", "red", "ball", "left", "of", "tall", "cube"};
  for (std::size_t i = 0; i < s.model.vocab.words.size(); ++i) {
    s.model.vocab.index[s.model.vocab.words[i]] = static_cast<std::int64_t>(i);
  }
  s.model.stopwords = {"a", "an", "the", "of"};
  Rng init = rng.split(7);
  s.model.params = init_params(s.model.config, s.model.vocab.size(), init);

  s.scene.id = 0;
  s.scene.width = 100;
  s.scene.height = 100;
  for (int i = 0; i < 3; ++i) {
    BoundingBox b;
    b.id = i;
    b.xmin = 10.0 + 25.0 * i;
    b.ymin = 12.0 + 20.0 * i;
    b.xmax = b.xmin + 18.0;
    b.ymax = b.ymin + 15.0;
    for (int f = 0; f < 3; ++f) b.visual_features.push_back(rng.uniform(-1, 1));
    s.scene.boxes.push_back(std::move(b));
  }
  s.scene.expression = {"red", "ball", "left", "of", "tall", "cube"};
  s.scene.parse =
      "(NP (NP (JJ red) (NN ball)) (PP (IN left) (IN of) (NP (JJ tall) (NN cube))))";
  s.scene.target_id = 0;
  s.scene.supporting_ids = {2};
  s.target_index = 0;
  return s;
}

// Binds grad_check leaf vars as the model parameters, in declaration
// order, so the whole parameter set can be perturbed.
BoundParams bind_from_vars(const Model& model, const std::vector<Var>& vars) {
  BoundParams bound;
  bound.config = &model.config;
  for (std::size_t i = 0; i < model.params.tensors.size(); ++i) {
    bound.vars.emplace_back(model.params.tensors[i].first, vars[i]);
  }
  return bound;
}

std::vector<Tensor> random_param_point(const Model& model, Rng& rng) {
  std::vector<Tensor> point;
  point.reserve(model.params.tensors.size());
  for (const auto& [name, tensor] : model.params.tensors) {
    point.push_back(random_tensor(tensor.shape(), rng, -0.6, 0.6));
  }
  return point;
}

}  // namespace

GradCheckReport run_grad_check_suite(std::uint64_t seed, int points_per_case) {
  GradCheckReport report;
  Rng rng(seed, 42);

  auto add_case = [&](const std::string& name, auto make_points, auto build) {
    GradCheckEntry entry;
    entry.name = name;
    entry.points = points_per_case;
    for (int p = 0; p < points_per_case; ++p) {
      std::vector<Tensor> points = make_points(rng);
      Rng weight_rng = rng.split(9000 + static_cast<std::uint64_t>(p));
      const double err = grad_check(
          [&](Tape& tape, const std::vector<Var>& vars) {
            return build(tape, vars, weight_rng);
          },
          points);
      entry.max_rel_err = std::max(entry.max_rel_err, err);
    }
    report.entries.push_back(entry);
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
  };

  auto one = [](Rng& r, std::vector<std::int64_t> shape) {
    return std::vector<Tensor>{random_tensor(std::move(shape), r)};
  };

  add_case(
      "matmul(2x3,3x4)",
      [&](Rng& r) {
        return std::vector<Tensor>{random_tensor({2, 3}, r), random_tensor({3, 4}, r)};
      },
      [](Tape& t, const std::vector<Var>& v, Rng& w) {
        return weighted_scalar(t, t.matmul(v[0], v[1]), w);
      });
  add_case(
      "matmul(3x4,4)",
      [&](Rng& r) {
        return std::vector<Tensor>{random_tensor({3, 4}, r), random_tensor({4}, r)};
      },
      [](Tape& t, const std::vector<Var>& v, Rng& w) {
        return weighted_scalar(t, t.matmul(v[0], v[1]), w);
      });
  add_case(
      "matmul(3,3x5)",
      [&](Rng& r) {
        return std::vector<Tensor>{random_tensor({3}, r), random_tensor({3, 5}, r)};
      },
      [](Tape& t, const std::vector<Var>& v, Rng& w) {
        return weighted_scalar(t, t.matmul(v[0], v[1]), w);
      });
  add_case(
      "add",
      [&](Rng& r) {
        return std::vector<Tensor>{random_tensor({6}, r), random_tensor({6}, r)};
      },
      [](Tape& t, const std::vector<Var>& v, Rng& w) {
        return weighted_scalar(t, t.add(v[0], v[1]), w);
      });
  add_case(
      "concat",
      [&](Rng& r) {
        return std::vector<Tensor>{random_tensor({3}, r), random_tensor({2}, r),
                                   random_tensor({4}, r)};
      },
      [](Tape& t, const std::vector<Var>& v, Rng& w) {
        return weighted_scalar(t, t.concat(v), w);
      });
  add_case(
      "elementwise_mul",
      [&](Rng& r) {
        return std::vector<Tensor>{random_tensor({5}, r), random_tensor({5}, r)};
      },
      [](Tape& t, const std::vector<Var>& v, Rng& w) {
        return weighted_scalar(t, t.elementwise_mul(v[0], v[1]), w);
      });
  add_case(
      "softmax", [&](Rng& r) { return one(r, {6}); },
      [](Tape& t, const std::vector<Var>& v, Rng& w) {
        return weighted_scalar(t, t.softmax(v[0]), w);
      });
  add_case(
      "softmax_rows", [&](Rng& r) { return one(r, {3, 4}); },
      [](Tape& t, const std::vector<Var>& v, Rng& w) {
        return weighted_scalar(t, t.softmax(v[0]), w);
      });
  add_case(
      "l2_normalize", [&](Rng& r) { return one(r, {5}); },
      [](Tape& t, const std::vector<Var>& v, Rng& w) {
        return weighted_scalar(t, t.l2_normalize(v[0]), w);
      });
  add_case(
      "sigmoid", [&](Rng& r) { return one(r, {5}); },
      [](Tape& t, const std::vector<Var>& v, Rng& w) {
        return weighted_scalar(t, t.sigmoid(v[0]), w);
      });
  add_case(
      "tanh", [&](Rng& r) { return one(r, {5}); },
      [](Tape& t, const std::vector<Var>& v, Rng& w) {
        return weighted_scalar(t, t.tanh(v[0]), w);
      });
  add_case(
      "embedding_lookup", [&](Rng& r) { return one(r, {6, 4}); },
      [](Tape& t, const std::vector<Var>& v, Rng& w) {
        return weighted_scalar(t, t.embedding_lookup(v[0], 2), w);
      });
  add_case(
      "scalar_scale", [&](Rng& r) { return one(r, {5}); },
      [](Tape& t, const std::vector<Var>& v, Rng& w) {
        return weighted_scalar(t, t.scalar_scale(v[0], -2.5), w);
      });
  add_case(
      "sum", [&](Rng& r) { return one(r, {7}); },
      [](Tape& t, const std::vector<Var>& v, Rng&) { return t.sum(v[0]); });
  add_case(
      "slice", [&](Rng& r) { return one(r, {8}); },
      [](Tape& t, const std::vector<Var>& v, Rng& w) {
        return weighted_scalar(t, t.slice(v[0], 2, 4), w);
      });
  add_case(
      "log",
      [&](Rng& r) { return std::vector<Tensor>{random_tensor({5}, r, 0.5, 2.0)}; },
      [](Tape& t, const std::vector<Var>& v, Rng& w) {
        return weighted_scalar(t, t.log(v[0]), w);
      });
  add_case(
      "pick", [&](Rng& r) { return one(r, {6}); },
      [](Tape& t, const std::vector<Var>& v, Rng&) { return t.pick(v[0], 3); });
  add_case(
      "normalize_sum",
      [&](Rng& r) { return std::vector<Tensor>{random_tensor({5}, r, 0.5, 2.0)}; },
      [](Tape& t, const std::vector<Var>& v, Rng& w) {
        return weighted_scalar(t, t.normalize_sum(v[0]), w);
      });

  MiniSetup setup = make_mini_setup(rng);
  const Lexicon lexicon = Lexicon::defaults();
  const ComputationGraph graph =
      generate_computation_graph(read_ptb(setup.scene.parse), lexicon);

  add_case(
      "locate_nll",
      [&](Rng& r) { return random_param_point(setup.model, r); },
      [&](Tape& tape, const std::vector<Var>& vars, Rng&) {
        BoundParams bound = bind_from_vars(setup.model, vars);
        Var p = locate(tape, {"red", "ball"}, setup.scene, setup.model, bound);
        return tape.scalar_scale(tape.log(tape.pick(p, setup.target_index)), -1.0);
      });
  add_case(
      "relate_nll",
      [&](Rng& r) { return random_param_point(setup.model, r); },
      [&](Tape& tape, const std::vector<Var>& vars, Rng&) {
        BoundParams bound = bind_from_vars(setup.model, vars);
        Var input = tape.constant(Tensor::vector({0.2, 0.3, 0.5}));
        Var p = relate(tape, {"left"}, setup.scene, input, setup.model, bound);
        return tape.scalar_scale(tape.log(tape.pick(p, setup.target_index)), -1.0);
      });
  add_case(
      "execute_nll",
      [&](Rng& r) { return random_param_point(setup.model, r); },
      [&](Tape& tape, const std::vector<Var>& vars, Rng&) {
        BoundParams bound = bind_from_vars(setup.model, vars);
        ExecutionTrace trace =
            execute_on_tape(tape, graph, setup.scene, setup.model, bound);
        return tape.scalar_scale(
            tape.log(tape.pick(trace.root_output, setup.target_index)), -1.0);
      });

  return report;
}

}  // namespace groundnet
