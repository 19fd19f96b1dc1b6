// hopqa: command-line driver for the multi-hop QA stages.
//
//   prepare -> train-extractor -> train-qg -> weak-label -> train-followup
//   -> build-controller-data -> train-controller -> eval-oracle / eval-full
//
// Exit status: 0 on success, 1 on runtime failures (a missing input artifact is
// named on stderr), 2 on usage and configuration errors.

#include "hopqa/checkpoint.hpp"
#include "hopqa/config.hpp"
#include "hopqa/controller.hpp"
#include "hopqa/corpus.hpp"
#include "hopqa/error.hpp"
#include "hopqa/extractor.hpp"
#include "hopqa/followupgen.hpp"
#include "hopqa/metrics.hpp"
#include "hopqa/pipeline.hpp"
#include "hopqa/qgweak.hpp"
#include "hopqa/synthetic.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace hopqa;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config_path;
  std::vector<std::string> sets;
  bool quiet = false;
};

RunConfig load_config(const Globals& g, std::map<std::string, std::string> extra = {}) {
  std::map<std::string, std::string> overrides;
  for (const auto& s : g.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
    overrides[s.substr(0, eq)] = s.substr(eq + 1);
  }
  for (auto& [k, v] : extra) overrides[k] = v;
  if (g.config_path.empty()) return load_run_config({}, overrides);
  return load_run_config_file(g.config_path, overrides);
}

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw MissingArtifactError(path);
}

std::string or_default(const std::string& given, const std::string& dir, const std::string& name) {
  return given.empty() ? (fs::path(dir) / name).string() : given;
}

std::ofstream open_out(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  return out;
}

void stamp_steps(const std::string& dir, long steps) {
  Manifest m = load_manifest(dir);
  m.set("steps", static_cast<long long>(steps));
  m.save((fs::path(dir) / "manifest.txt").string());
}

std::string metrics_line(const TrainReport& r) {
  std::string s;
  for (const auto& [k, v] : r.metrics) s += fmt::format(" {}={:.4g}", k, v);
  return s;
}

std::vector<BridgeExample> read_examples(const std::string& path) {
  require_file(path);
  return read_bridge_examples(path);
}

// ------------------------------------------------------------------ stages

struct PrepareArgs {
  std::string hotpotqa, out;
};

void prepare(const PrepareArgs& a) {
  require_file(a.hotpotqa);
  FilterStats st;
  auto examples = filter_two_hop_bridge(load_hotpotqa(a.hotpotqa), &st);
  auto out = open_out(a.out);
  write_bridge_examples(out, examples);
  std::cout << fmt::format(
      "prepare: kept {} dropped {} (comparison {}, supporting-count {}, missing-title {}, answer-location {}) -> {}\n",
      st.kept, st.dropped(), st.dropped_comparison, st.dropped_support_count, st.dropped_missing_title,
      st.dropped_answer_location, a.out);
}

struct TrainSquadArgs {
  std::string squad, out;
};

void train_extractor_stage(const Globals& g, const TrainSquadArgs& a) {
  RunConfig cfg = load_config(g);
  require_file(a.squad);
  const std::string dir = or_default(a.out, cfg.checkpoint_dir, "extractor");
  TrainReport rep;
  ExtractorModel model = train_extractor(load_squad(a.squad), cfg.extractor_config(), &rep);
  model.save(dir, cfg.hash());
  stamp_steps(dir, rep.steps);
  std::cout << fmt::format("train-extractor: {} steps, final loss {:.4f}{} -> {}\n", rep.steps,
                           rep.loss_curve.empty() ? 0.0 : rep.loss_curve.back(), metrics_line(rep), dir);
}

void train_qg_stage(const Globals& g, const TrainSquadArgs& a) {
  RunConfig cfg = load_config(g);
  require_file(a.squad);
  const std::string dir = or_default(a.out, cfg.checkpoint_dir, "qg");
  TrainReport rep;
  QGModel model = train_qg(load_squad(a.squad), cfg.qg_config(), &rep);
  model.save(dir, cfg.hash());
  stamp_steps(dir, rep.steps);
  std::cout << fmt::format("train-qg: {} steps, final loss {:.4f}{} -> {}\n", rep.steps,
                           rep.loss_curve.empty() ? 0.0 : rep.loss_curve.back(), metrics_line(rep), dir);
}

struct WeakLabelArgs {
  std::string examples, qg, out;
};

void weak_label_stage(const Globals& g, const WeakLabelArgs& a) {
  RunConfig cfg = load_config(g);
  auto examples = read_examples(a.examples);
  QGModel qg = QGModel::load(or_default(a.qg, cfg.checkpoint_dir, "qg"));
  auto labels = weak_label_followups(qg, examples);
  const std::string out_path = or_default(a.out, cfg.output_dir, "weak_labels.jsonl");
  auto out = open_out(out_path);
  write_weak_labels(out, labels);
  std::cout << fmt::format("weak-label: {} weak followups -> {}\n", labels.size(), out_path);
}

struct TrainFollowupArgs {
  std::string examples, weak_labels, out;
};

void train_followup_stage(const Globals& g, const TrainFollowupArgs& a) {
  RunConfig cfg = load_config(g);
  auto examples = read_examples(a.examples);
  const std::string labels_path = or_default(a.weak_labels, cfg.output_dir, "weak_labels.jsonl");
  auto labels = read_weak_labels(labels_path);
  const std::string dir = or_default(a.out, cfg.checkpoint_dir, "followup");
  TrainReport rep;
  FollowupModel model = train_followup(examples, labels, cfg.followup_config(), &rep);
  model.save(dir, cfg.hash());
  stamp_steps(dir, rep.steps);
  std::cout << fmt::format("train-followup: {} steps, final loss {:.4f}{} -> {}\n", rep.steps,
                           rep.loss_curve.empty() ? 0.0 : rep.loss_curve.back(), metrics_line(rep), dir);
}

struct ControllerDataArgs {
  std::string examples, extractor, out;
};

void build_controller_data_stage(const Globals& g, const ControllerDataArgs& a) {
  RunConfig cfg = load_config(g);
  auto examples = read_examples(a.examples);
  ExtractorModel ext = ExtractorModel::load(or_default(a.extractor, cfg.checkpoint_dir, "extractor"));
  auto triples = build_controller_dataset(examples, ext);
  std::array<std::size_t, 3> counts{0, 0, 0};
  for (const auto& t : triples) ++counts[static_cast<int>(t.label)];
  const std::string out_path = or_default(a.out, cfg.output_dir, "controller_triples.jsonl");
  auto out = open_out(out_path);
  write_triples(out, triples);
  std::cout << fmt::format("build-controller-data: {} triples (Irrel {}, Intermediate {}, Final {}) -> {}\n",
                           triples.size(), counts[0], counts[1], counts[2], out_path);
}

struct TrainControllerArgs {
  std::string triples, out;
};

void train_controller_stage(const Globals& g, const TrainControllerArgs& a) {
  RunConfig cfg = load_config(g);
  const std::string path = or_default(a.triples, cfg.output_dir, "controller_triples.jsonl");
  auto triples = read_triples(path);
  const std::string dir = or_default(a.out, cfg.checkpoint_dir, "controller");
  TrainReport rep;
  ControllerModel model = train_controller(triples, cfg.controller_config(), &rep);
  model.save(dir, cfg.hash());
  stamp_steps(dir, rep.steps);
  std::cout << fmt::format("train-controller: {} steps, final loss {:.4f}{} -> {}\n", rep.steps,
                           rep.loss_curve.empty() ? 0.0 : rep.loss_curve.back(), metrics_line(rep), dir);
}

struct EvalArgs {
  std::string examples, extractor, followup, controller;
  std::string variant = "q1_else_q2";
  int hops = 2;
  std::string predictions, traces, report;
};

void write_outputs(const EvalArgs& a, const std::vector<PredictedAnswer>& preds, const EvalReport& r) {
  if (!a.predictions.empty()) {
    auto out = open_out(a.predictions);
    write_predictions(out, preds);
  }
  if (!a.traces.empty()) {
    auto out = open_out(a.traces);
    write_traces(out, preds);
  }
  if (!a.report.empty()) {
    auto out = open_out(a.report);
    write_report_json(out, {r});
  }
  write_report_table(std::cout, {r});
}

std::map<std::string, std::string> answers_of(const std::vector<PredictedAnswer>& preds) {
  std::map<std::string, std::string> m;
  for (const auto& p : preds) m[p.example_id] = p.answer;
  return m;
}

void eval_oracle_stage(const Globals& g, const EvalArgs& a) {
  RunConfig cfg = load_config(g);
  const OracleVariant variant = variant_from_name(a.variant);
  auto examples = read_examples(a.examples);
  ExtractorModel ext = ExtractorModel::load(or_default(a.extractor, cfg.checkpoint_dir, "extractor"));
  ext.set_null_threshold(cfg.null_threshold);
  std::optional<FollowupModel> fu;
  if (variant != OracleVariant::kQ2EqualsQ1) {
    fu.emplace(FollowupModel::load(or_default(a.followup, cfg.checkpoint_dir, "followup")));
  }
  Models m{&ext, fu ? &*fu : nullptr, nullptr};
  std::vector<PredictedAnswer> preds;
  for (const auto& ex : examples) preds.push_back(run_oracle(ex, variant, m));
  write_outputs(a, preds, evaluate(answers_of(preds), examples, a.variant));
}

void eval_full_stage(const Globals& g, const EvalArgs& a) {
  RunConfig cfg = load_config(g, {{"max_hops", std::to_string(a.hops)}});
  auto examples = read_examples(a.examples);
  ExtractorModel ext = ExtractorModel::load(or_default(a.extractor, cfg.checkpoint_dir, "extractor"));
  ext.set_null_threshold(cfg.null_threshold);
  FollowupModel fu = FollowupModel::load(or_default(a.followup, cfg.checkpoint_dir, "followup"));
  ControllerModel ctl = ControllerModel::load(or_default(a.controller, cfg.checkpoint_dir, "controller"));
  Models m{&ext, &fu, &ctl};
  std::vector<PredictedAnswer> preds;
  for (const auto& ex : examples) preds.push_back(run_full(ex, m, cfg.pipeline_config()));
  const std::string name = fmt::format("full ({} hop{})", cfg.max_hops, cfg.max_hops == 1 ? "" : "s");
  write_outputs(a, preds, evaluate(answers_of(preds), examples, name));
  const RunCounters c = count_requests(preds);
  std::cout << fmt::format("requests: {} followups, {} hop-1 extractions, {} hop-2 extractions\n", c.followups,
                           c.hop1_extractions, c.hop2_extractions);
}

struct GenerateArgs {
  std::string examples, followup, out;
};

void generate_followups_stage(const Globals& g, const GenerateArgs& a) {
  RunConfig cfg = load_config(g);
  auto examples = read_examples(a.examples);
  FollowupModel fu = FollowupModel::load(or_default(a.followup, cfg.checkpoint_dir, "followup"));
  const std::string out_path = or_default(a.out, cfg.output_dir, "followups.jsonl");
  auto out = open_out(out_path);
  for (const auto& ex : examples) {
    out << nlohmann::json{{"id", ex.id}, {"q2", fu.generate(ex.q1, ex.p1_hat)}}.dump() << '\n';
  }
  std::cout << fmt::format("generate-followups: {} followups -> {}\n", examples.size(), out_path);
}

struct QualityArgs {
  std::string examples, followups, extractor, controller;
};

void followup_quality_stage(const Globals& g, const QualityArgs& a) {
  RunConfig cfg = load_config(g);
  auto examples = read_examples(a.examples);
  const std::string path = or_default(a.followups, cfg.output_dir, "followups.jsonl");
  require_file(path);
  std::map<std::string, std::string> followups;
  {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line);
      followups[j.at("id").get<std::string>()] = j.at("q2").get<std::string>();
    }
  }
  ExtractorModel ext = ExtractorModel::load(or_default(a.extractor, cfg.checkpoint_dir, "extractor"));
  ext.set_null_threshold(cfg.null_threshold);
  ControllerModel ctl = ControllerModel::load(or_default(a.controller, cfg.checkpoint_dir, "controller"));
  DesiderataReport r = followup_quality(examples, followups, ext, ctl);
  std::cout << fmt::format(
      "followup-quality: answerability {:.3f} (strict {:.3f}), recognition {:.3f}, rejection {:.3f}, n {}\n",
      r.answerability, r.answerability_strict, r.recognition, r.rejection, r.count);
}

struct SynthArgs {
  std::string out_dir;
  int questions = 200;
  int partition = 0;
  std::uint64_t seed = 13;
};

void synth_stage(const SynthArgs& a) {
  SyntheticOptions o;
  o.num_questions = a.questions;
  o.partition = a.partition;
  o.seed = a.seed;
  SyntheticCorpus c = make_synthetic_corpus(o);
  fs::create_directories(a.out_dir);
  const std::string hp = (fs::path(a.out_dir) / "hotpotqa.json").string();
  const std::string sq = (fs::path(a.out_dir) / "squad.json").string();
  open_out(hp) << hotpotqa_json(c.records).dump(1) << '\n';
  open_out(sq) << squad_json(c.squad).dump(1) << '\n';
  std::cout << fmt::format("synth: {} question records -> {}, {} single-hop questions -> {}\n", c.records.size(), hp,
                           c.squad.size(), sq);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-hop question answering with followup generation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("-c,--config", g.config_path, "key = value configuration file");
  app.add_option("--set", g.sets, "override a configuration key (key=value), repeatable");
  app.add_flag("-q,--quiet", g.quiet, "only print stage summaries");

  PrepareArgs prep;
  auto* c_prep = app.add_subcommand("prepare", "filter HotpotQA to two-hop bridge examples");
  c_prep->add_option("--hotpotqa", prep.hotpotqa, "HotpotQA distractor-setting JSON")->required();
  c_prep->add_option("--out", prep.out, "output JSONL of bridge examples")->required();

  TrainSquadArgs ext_args, qg_args;
  auto* c_ext = app.add_subcommand("train-extractor", "train the single-hop answer extractor on SQuAD v2.0");
  c_ext->add_option("--squad", ext_args.squad, "SQuAD v2.0 training JSON")->required();
  c_ext->add_option("--out", ext_args.out, "checkpoint directory (default <checkpoint_dir>/extractor)");
  auto* c_qg = app.add_subcommand("train-qg", "train the question generator on reversed SQuAD");
  c_qg->add_option("--squad", qg_args.squad, "SQuAD v2.0 training JSON")->required();
  c_qg->add_option("--out", qg_args.out, "checkpoint directory (default <checkpoint_dir>/qg)");

  WeakLabelArgs wl;
  auto* c_wl = app.add_subcommand("weak-label", "generate weak followup labels from the answer-bearing premise");
  c_wl->add_option("--examples", wl.examples, "bridge examples JSONL")->required();
  c_wl->add_option("--qg", wl.qg, "question generator checkpoint");
  c_wl->add_option("--out", wl.out, "weak label JSONL (default <output_dir>/weak_labels.jsonl)");

  TrainFollowupArgs tf;
  auto* c_tf = app.add_subcommand("train-followup", "train the followup generator on weak labels");
  c_tf->add_option("--examples", tf.examples, "bridge examples JSONL")->required();
  c_tf->add_option("--weak-labels", tf.weak_labels, "weak label JSONL");
  c_tf->add_option("--out", tf.out, "checkpoint directory (default <checkpoint_dir>/followup)");

  ControllerDataArgs cd;
  auto* c_cd = app.add_subcommand("build-controller-data", "build controller training triples");
  c_cd->add_option("--examples", cd.examples, "bridge examples JSONL")->required();
  c_cd->add_option("--extractor", cd.extractor, "extractor checkpoint");
  c_cd->add_option("--out", cd.out, "triples JSONL (default <output_dir>/controller_triples.jsonl)");

  TrainControllerArgs tc;
  auto* c_tc = app.add_subcommand("train-controller", "train the premise controller");
  c_tc->add_option("--triples", tc.triples, "triples JSONL");
  c_tc->add_option("--out", tc.out, "checkpoint directory (default <checkpoint_dir>/controller)");

  EvalArgs eo, ef;
  auto add_eval = [](CLI::App* c, EvalArgs& a) {
    c->add_option("--examples", a.examples, "bridge examples JSONL")->required();
    c->add_option("--extractor", a.extractor, "extractor checkpoint");
    c->add_option("--followup", a.followup, "followup generator checkpoint");
    c->add_option("--predictions", a.predictions, "write predictions JSON");
    c->add_option("--report", a.report, "write the report row as JSON");
  };
  auto* c_eo = app.add_subcommand("eval-oracle", "evaluate with gold premises routed directly");
  add_eval(c_eo, eo);
  c_eo->add_option("--variant", eo.variant, "trained_q2 | q2_equals_q1 | q1_else_q2");
  c_eo->add_option("--traces", eo.traces, "write one trace per line");
  auto* c_ef = app.add_subcommand("eval-full", "evaluate the controller-driven loop");
  add_eval(c_ef, ef);
  c_ef->add_option("--controller", ef.controller, "controller checkpoint");
  c_ef->add_option("--hops", ef.hops, "maximum number of hops")->check(CLI::Range(1, 2));
  c_ef->add_option("--traces", ef.traces, "write one trace per line");

  GenerateArgs ga;
  auto* c_ga = app.add_subcommand("generate-followups", "write (id, q2) lines for bridge examples");
  c_ga->add_option("--examples", ga.examples, "bridge examples JSONL")->required();
  c_ga->add_option("--followup", ga.followup, "followup generator checkpoint");
  c_ga->add_option("--out", ga.out, "output JSONL (default <output_dir>/followups.jsonl)");

  QualityArgs qa;
  auto* c_qa = app.add_subcommand("followup-quality", "score generated followups with the extractor and controller");
  c_qa->add_option("--examples", qa.examples, "bridge examples JSONL")->required();
  c_qa->add_option("--followups", qa.followups, "followups JSONL from generate-followups");
  c_qa->add_option("--extractor", qa.extractor, "extractor checkpoint");
  c_qa->add_option("--controller", qa.controller, "controller checkpoint");

  SynthArgs sa;
  auto* c_sa = app.add_subcommand("synth", "write a templated two-hop micro-corpus");
  c_sa->add_option("--out-dir", sa.out_dir, "output directory")->required();
  c_sa->add_option("--questions", sa.questions, "number of bridge questions");
  c_sa->add_option("--partition", sa.partition, "entity partition (0 or 1)")->check(CLI::Range(0, 1));
  c_sa->add_option("--seed", sa.seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  spdlog::set_level(g.quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (*c_prep) prepare(prep);
    else if (*c_ext) train_extractor_stage(g, ext_args);
    else if (*c_qg) train_qg_stage(g, qg_args);
    else if (*c_wl) weak_label_stage(g, wl);
    else if (*c_tf) train_followup_stage(g, tf);
    else if (*c_cd) build_controller_data_stage(g, cd);
    else if (*c_tc) train_controller_stage(g, tc);
    else if (*c_eo) eval_oracle_stage(g, eo);
    else if (*c_ef) eval_full_stage(g, ef);
    else if (*c_ga) generate_followups_stage(g, ga);
    else if (*c_qa) followup_quality_stage(g, qa);
    else if (*c_sa) synth_stage(sa);
  } catch (const MissingArtifactError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
