// meshmap command-line tool: scene synthesis, map encoding/decoding,
// evaluation, loss breakdown and decode benchmarking.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "meshmap/meshmap.hpp"

namespace mm = meshmap;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

constexpr int kToyVertices = 440;
constexpr std::uint64_t kToySeed = 0;

mm::BodyModel model_or_default(const std::string& path) {
  if (path.empty()) return mm::make_toy_model(kToyVertices, mm::kPosedJoints, kToySeed);
  return mm::load_model(path);
}

void emit_json(const std::string& path, const mm::Json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    mm::write_json_file(path, j);
  }
}

void report_error(const char* code, const std::string& message) {
  std::cerr << mm::Json{{"error", code}, {"message", message}}.dump() << std::endl;
}

std::vector<int> parse_people_list(const std::string& spec) {
  std::vector<int> out;
  if (auto dots = spec.find(".."); dots != std::string::npos) {
    const int a = std::stoi(spec.substr(0, dots));
    const int b = std::stoi(spec.substr(dots + 2));
    if (a < 0 || b < a) throw CLI::ValidationError("--people", "range must be a..b with 0 <= a <= b");
    for (int n = a; n <= b; ++n) out.push_back(n);
    return out;
  }
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ',');) {
    const int n = std::stoi(item);
    if (n < 0) throw CLI::ValidationError("--people", "counts must be non-negative");
    out.push_back(n);
  }
  if (out.empty()) throw CLI::ValidationError("--people", "no counts given");
  return out;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  int n = 1;
  std::uint64_t seed = 0;
  std::string overlap = "none";
  double car_gamma = 0.0;
  std::string model, out;
};

int run_synth(const SynthArgs& a) {
  const auto body = model_or_default(a.model);
  mm::Scene scene = mm::synth_scene(a.n, a.seed, mm::parse_overlap(a.overlap), body);
  scene.car_gamma = a.car_gamma;
  emit_json(a.out, mm::scene_to_json(scene));
  return 0;
}

struct EncodeArgs {
  std::string scene, model, out;
  std::optional<double> car_gamma;
};

int run_encode(const EncodeArgs& a) {
  mm::Scene scene = mm::scene_from_json(mm::read_json_file(a.scene));
  if (a.car_gamma) scene.car_gamma = *a.car_gamma;
  const auto enc = mm::encode_scene(scene, model_or_default(a.model));
  mm::save_rmtf(a.out, mm::maps_to_tensors(enc.maps));
  return 0;
}

struct DecodeArgs {
  std::string maps, model, out;
  double tc = mm::kDefaultCenterThreshold;
  int topn = mm::kDefaultMaxPeople;
};

int run_decode(const DecodeArgs& a) {
  const auto maps = mm::maps_from_tensors(mm::load_rmtf(a.maps));
  const auto body = model_or_default(a.model);
  const auto dets = mm::decode_maps(maps.heatmap, maps.params, {a.tc, a.topn, mm::kDefaultSimilarScale});
  emit_json(a.out, mm::detections_to_json(dets, &body, maps.heatmap.width()));
  return 0;
}

struct EvalArgs {
  std::vector<std::string> pred, gt;
  std::string model, report, csv;
  std::vector<double> sigmas;
};

int run_eval(const EvalArgs& a) {
  if (a.pred.size() != a.gt.size())
    throw CLI::ValidationError("--pred/--gt", "need the same number of prediction and GT files");
  const auto body = model_or_default(a.model);
  mm::EvalConfig cfg;
  cfg.oks_sigmas = a.sigmas;

  std::vector<mm::SceneEvaluation> evals;
  mm::Json scenes = mm::Json::array();
  int n_gt = 0, n_matched = 0, n_pred = 0;
  for (std::size_t i = 0; i < a.pred.size(); ++i) {
    const auto dets = mm::detections_from_json(mm::read_json_file(a.pred[i]));
    const auto scene = mm::scene_from_json(mm::read_json_file(a.gt[i]));
    evals.push_back(mm::evaluate_scene(dets, scene, body, cfg));
    const auto& ev = evals.back();
    n_gt += ev.n_gt;
    n_pred += ev.n_pred;
    n_matched += static_cast<int>(ev.matched.size());
    mm::Json s = mm::eval_to_json(ev.summary);
    s["pred"] = a.pred[i];
    s["gt"] = a.gt[i];
    s["n_gt"] = ev.n_gt;
    s["n_pred"] = ev.n_pred;
    s["n_matched"] = ev.matched.size();
    scenes.push_back(std::move(s));
  }
  const mm::EvalResult total = mm::aggregate(evals, body.joint_count(), cfg);
  mm::Json report = mm::eval_to_json(total);
  report["n_gt"] = n_gt;
  report["n_pred"] = n_pred;
  report["n_matched"] = n_matched;
  report["recall"] = n_gt > 0 ? static_cast<double>(n_matched) / n_gt : 1.0;
  report["scenes"] = std::move(scenes);
  emit_json(a.report, report);

  if (!a.csv.empty()) {
    std::ofstream csv(a.csv);
    if (!csv) mm::fail(mm::ErrorCode::Load, "cannot write " + a.csv);
    csv << "scene,mpjpe_mm,pmpjpe_mm,pve_mm,pck,auc,mpjae_deg,pa_mpjae_deg,ap50\n";
    auto row = [&](const std::string& name, const mm::EvalResult& r) {
      csv << name << ',' << r.mpjpe << ',' << r.pmpjpe << ',' << r.pve << ',' << r.pck << ',' << r.auc << ','
          << r.mpjae << ',' << r.pa_mpjae << ',' << r.ap50 << '\n';
    };
    for (std::size_t i = 0; i < evals.size(); ++i) row(a.gt[i], evals[i].summary);
    row("all", total);
  }
  return 0;
}

struct LossArgs {
  std::string pred, gt, model, prior;
  bool no_prior = false;
};

// Every positive cell of the GT heatmap is one supervised person; the
// prediction's parameters are read at the same cell.
int run_loss(const LossArgs& a) {
  const auto pred = mm::maps_from_tensors(mm::load_rmtf(a.pred));
  const auto gt = mm::maps_from_tensors(mm::load_rmtf(a.gt));
  const auto body = model_or_default(a.model);
  const mm::LossWeights w;
  std::optional<mm::GmmPrior> prior;
  if (!a.no_prior)
    prior = a.prior.empty() ? mm::GmmPrior::standard_normal(body.joint_count() - 1) : mm::load_prior(a.prior);

  const double center = mm::focal_center_loss(pred.heatmap, gt.heatmap, w.center);

  mm::LossBreakdown sum;
  int people = 0;
  for (int r = 0; r < gt.heatmap.height(); ++r) {
    for (int c = 0; c < gt.heatmap.width(); ++c) {
      if (gt.heatmap.at(r, c) < 1.0) continue;
      const mm::MeshParams gp = mm::sample_params(gt.params, {r, c});
      const mm::MeshParams pp = mm::sample_params(pred.params, {r, c});
      const mm::BodyOutput go = body.forward(gp.pose, gp.shape);
      const mm::MeshPrediction mp{pp, body.forward(pp.pose, pp.shape).joints};
      mm::Keypoints2D kp{mm::project(go.joints, gp.cam), std::vector<bool>(go.joints.rows(), true)};
      const mm::MeshTarget target{gp.pose, gp.shape, go.joints, kp};
      const auto b = mm::mesh_param_loss(mp, target, w, prior ? &*prior : nullptr);
      sum.pose += b.pose;
      sum.shape += b.shape;
      sum.j3d += b.j3d;
      sum.paj3d += b.paj3d;
      sum.pj2d += b.pj2d;
      sum.prior += b.prior;
      sum.total += b.total;
      ++people;
    }
  }
  const double n = std::max(people, 1);
  mm::Json out = {{"people", people},
                  {"center", center},
                  {"pose", sum.pose / n},
                  {"shape", sum.shape / n},
                  {"j3d", sum.j3d / n},
                  {"paj3d", sum.paj3d / n},
                  {"pj2d", sum.pj2d / n},
                  {"prior", sum.prior / n},
                  {"mesh_total", sum.total / n},
                  {"total", center + sum.total / n}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

struct BenchArgs {
  std::string people = "1,8,32";
  int repeat = 100;
  int map_size = mm::kDefaultMapSize;
  std::uint64_t seed = 0;
  std::string model;
};

int run_bench(const BenchArgs& a) {
  if (a.repeat < 1) throw CLI::ValidationError("--repeat", "must be at least 1");
  const auto counts = parse_people_list(a.people);
  const auto body = model_or_default(a.model);
  mm::SynthOptions so;
  so.map_size = a.map_size;
  std::cout << "n_people,mean_ms,p95_ms\n";
  for (int n : counts) {
    const auto scene = mm::synth_scene(n, a.seed, mm::Overlap::Moderate, body, so);
    const auto enc = mm::encode_scene(scene, body);
    std::vector<double> ms;
    ms.reserve(static_cast<std::size_t>(a.repeat));
    std::size_t sink = 0;
    for (int r = 0; r < a.repeat; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      sink += mm::decode_maps(enc.maps.heatmap, enc.maps.params).size();
      const auto t1 = std::chrono::steady_clock::now();
      ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    double mean = 0.0;
    for (double v : ms) mean += v;
    mean /= static_cast<double>(ms.size());
    std::sort(ms.begin(), ms.end());
    const double p95 = ms[std::min(ms.size() - 1, static_cast<std::size_t>(0.95 * static_cast<double>(ms.size())))];
    std::printf("%d,%.6f,%.6f\n", n, mean, p95);
    if (sink == std::size_t(-1)) std::puts("");
  }
  return 0;
}

struct ModelArgs {
  int vertices = kToyVertices;
  int joints = mm::kPosedJoints;
  std::uint64_t seed = kToySeed;
  std::string out;
};

int run_model(const ModelArgs& a) {
  mm::save_model(a.out, mm::make_toy_model(a.vertices, a.joints, a.seed));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"meshmap: center and mesh-parameter maps for multi-person body meshes"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic scene as JSON");
  s->add_option("--n", synth.n, "Number of people")->check(CLI::NonNegativeNumber);
  s->add_option("--seed", synth.seed, "Random seed");
  s->add_option("--overlap", synth.overlap, "none, moderate or severe")
      ->check(CLI::IsMember({"none", "moderate", "severe"}));
  s->add_option("--car-gamma", synth.car_gamma, "Repulsion intensity stored in the scene");
  s->add_option("--model", synth.model, "Body model (RMTF); default is the built-in toy model");
  s->add_option("--out", synth.out, "Output path (stdout when omitted)");

  EncodeArgs encode;
  auto* e = app.add_subcommand("encode", "Build ground-truth maps from a scene");
  e->add_option("--scene", encode.scene, "Scene JSON")->required();
  e->add_option("--model", encode.model, "Body model (RMTF)");
  e->add_option("--car-gamma", encode.car_gamma, "Overrides the scene's repulsion intensity");
  e->add_option("--out", encode.out, "Output maps (RMTF)")->required();

  DecodeArgs decode;
  auto* d = app.add_subcommand("decode", "Parse people from a pair of maps");
  d->add_option("--maps", decode.maps, "Maps (RMTF)")->required();
  d->add_option("--model", decode.model, "Body model (RMTF)");
  d->add_option("--tc", decode.tc, "Center confidence threshold");
  d->add_option("--topn", decode.topn, "Maximum number of people")->check(CLI::PositiveNumber);
  d->add_option("--out", decode.out, "Output people JSON (stdout when omitted)");

  EvalArgs eval;
  auto* v = app.add_subcommand("eval", "Score detections against ground-truth scenes");
  v->add_option("--pred", eval.pred, "People JSON (repeatable)")->required();
  v->add_option("--gt", eval.gt, "Scene JSON (repeatable, same order as --pred)")->required();
  v->add_option("--model", eval.model, "Body model (RMTF)");
  v->add_option("--sigmas", eval.sigmas, "Per-joint OKS sigmas")->delimiter(',');
  v->add_option("--report", eval.report, "Report JSON (stdout when omitted)");
  v->add_option("--csv", eval.csv, "Optional per-scene CSV");

  LossArgs loss;
  auto* l = app.add_subcommand("loss", "Print the loss breakdown of predicted maps");
  l->add_option("--pred", loss.pred, "Predicted maps (RMTF)")->required();
  l->add_option("--gt", loss.gt, "Ground-truth maps (RMTF)")->required();
  l->add_option("--model", loss.model, "Body model (RMTF)");
  l->add_option("--prior", loss.prior, "Pose prior (RMTF); default is a unit Gaussian at the rest pose");
  l->add_flag("--no-prior", loss.no_prior, "Drop the prior term");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Decode latency against person count (CSV)");
  b->add_option("--people", bench.people, "Counts as a,b,c or a..b");
  b->add_option("--repeat", bench.repeat, "Repetitions per count");
  b->add_option("--map-size", bench.map_size, "Map height and width")->check(CLI::PositiveNumber);
  b->add_option("--seed", bench.seed, "Scene seed");
  b->add_option("--model", bench.model, "Body model (RMTF)");

  ModelArgs model;
  auto* m = app.add_subcommand("model", "Write the procedural toy body model");
  m->add_option("--vertices", model.vertices, "Vertex count");
  m->add_option("--joints", model.joints, "Joint count");
  m->add_option("--seed", model.seed, "Random seed");
  m->add_option("--out", model.out, "Output model (RMTF)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    report_error("usage", ex.what());
    return kExitUsage;
  }

  try {
    if (*s) return run_synth(synth);
    if (*e) return run_encode(encode);
    if (*d) return run_decode(decode);
    if (*v) return run_eval(eval);
    if (*l) return run_loss(loss);
    if (*b) return run_bench(bench);
    if (*m) return run_model(model);
  } catch (const CLI::ValidationError& ex) {
    report_error("usage", ex.what());
    return kExitUsage;
  } catch (const mm::Error& ex) {
    report_error(mm::to_string(ex.code()), ex.what());
    return kExitData;
  } catch (const std::exception& ex) {
    report_error("data", ex.what());
    return kExitData;
  }
  return kExitUsage;
}
