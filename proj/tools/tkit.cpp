#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "tkit/decomposition.hpp"
#include "tkit/io.hpp"
#include "tkit/obstruction.hpp"
#include "tkit/teich.hpp"

using namespace tkit;
using io::Json;

namespace {

struct Globals
{
  int indent = 2;
  std::optional<double> tol;
};

Json stamp(Json j)
{
  j["schema"] = io::schema;
  return j;
}

void emit(const Globals &g, const Json &j) { std::cout << io::dump(stamp(j), g.indent); }

void write_json(const Globals &g, const std::string &path, const Json &j) { io::write_file(path, io::dump(stamp(j), g.indent)); }

Rational rational_tol(const Globals &g, const Rational &fallback)
{
  if (!g.tol)
    return fallback;
  if (!(*g.tol > 0))
    throw Error(ErrorCode::Domain, "--tol must be positive");
  return rational::from_double(*g.tol);
}

// ---- sphere-map-core and curve-calculus commands ----------------------------------

int cmd_validate(const Globals &g, const std::string &path)
{
  BranchedCoverRecursion r = io::recursion_from_json(io::load_json(path), path);
  ValidationReport rep = validate(r);
  Json checks = Json::array();
  for (const auto &c : rep.checks) {
    Json cj{{"name", c.name}, {"pass", c.pass}};
    if (!c.pass)
      cj["witness"] = c.witness;
    checks.push_back(std::move(cj));
  }
  emit(g, Json{{"ok", rep.ok()}, {"checks", checks}, {"degree", r.degree}, {"punctures", r.source.size()}});
  return rep.ok() ? 0 : 1;
}

int cmd_orbifold(const Globals &g, const std::string &path)
{
  BranchedCoverRecursion r = io::load_recursion(path);
  require_valid(r, "orbifold");
  Portrait p = portrait(r);
  Json out = io::to_json(orbifold_signature(p));
  out["portrait"] = io::to_json(p);
  emit(g, out);
  return 0;
}

int cmd_pullback(const Globals &g, const std::string &path, const std::string &word)
{
  BranchedCoverRecursion r = io::load_recursion(path);
  require_valid(r, "pullback-curve");
  CurveClass c = curve(r.target, word);
  PullbackResult res = pullback_class(r, c);
  Json comps = Json::array();
  for (const auto &comp : res.components) {
    Json cj{{"curve", comp.cls.name()}, {"degree", comp.degree}, {"kind", to_string(comp.classification.kind)}};
    if (comp.classification.kind == Classification::Peripheral)
      cj["puncture"] = r.source.label(comp.classification.puncture);
    comps.push_back(std::move(cj));
  }
  emit(g, Json{{"curve", c.name()},
               {"kind", to_string(classify(r.target, c).kind)},
               {"components", comps},
               {"total_degree", res.total_degree()}});
  return 0;
}

int cmd_matrix(const Globals &g, const std::string &path, const std::string &curves)
{
  BranchedCoverRecursion r = io::load_recursion(path);
  require_valid(r, "matrix");
  Multicurve gamma = io::multicurve_from_json(r.source, io::load_json(curves), curves);
  TransitionMatrix t = transition_matrix(r, gamma);
  ObstructionVerdict v = decide_obstruction(t.entries, rational_tol(g, Budgets{}.tol));
  Json out{{"multicurve", io::to_json(gamma)},
           {"matrix", io::to_json(t.entries)},
           {"lambda", io::to_json(v.enclosure)},
           {"verdict", to_string(v.verdict)},
           {"exact", v.decided_exactly}};
  if (v.verdict == Verdict::Obstruction && gamma.certificate.kind == Certificate::Unverified)
    out["note"] = "candidate obstruction (disjointness uncertified)";
  emit(g, out);
  return 0;
}

std::vector<Multicurve> load_seeds(const MarkedSphere &s, const std::string &path)
{
  Json j = io::load_json(path);
  const Json &list = j.is_object() && j.contains("seeds") ? j.at("seeds") : j;
  if (!list.is_array())
    throw Error(ErrorCode::Parse, path + ": expected a list of multicurves");
  std::vector<Multicurve> out;
  for (const auto &m : list) {
    Json mj = m.is_array() ? Json{{"curves", m}} : m;
    if (!mj.contains("certificate"))
      mj["certificate"] = "Unverified";
    out.push_back(io::multicurve_from_json(s, mj, path));
  }
  return out;
}

int cmd_obstruction(const Globals &g, const std::string &path, const std::string &seeds, int max_iter,
                    int max_classes)
{
  BranchedCoverRecursion r = io::load_recursion(path);
  require_valid(r, "obstruction");
  if (max_iter < 0 || max_classes < 0)
    throw Error(ErrorCode::Domain, "budgets must be non-negative");
  Budgets b;
  b.max_iter = max_iter;
  b.max_classes = static_cast<std::size_t>(max_classes);
  b.tol = rational_tol(g, b.tol);
  std::vector<Multicurve> seed_list = seeds.empty() ? default_seeds(r.source) : load_seeds(r.source, seeds);
  SearchResult res = search_obstruction(r, seed_list, b);

  Json report = Json::array();
  bool exceeded = false;
  for (const auto &s : res.report) {
    exceeded = exceeded || s.outcome == "exceeded";
    Json sj{{"seed", s.seed}, {"outcome", s.outcome}, {"classes", s.classes}, {"iterations", s.iterations}};
    if (!s.detail.empty())
      sj["detail"] = s.detail;
    report.push_back(std::move(sj));
  }
  Json out{{"report", report},
           {"in_theorem_scope", res.in_theorem_scope},
           {"budgets", {{"max_iter", b.max_iter}, {"max_classes", b.max_classes}, {"tol", io::to_json(b.tol)}}}};
  if (res.found) {
    out["result"] = "Found";
    out["multicurve"] = io::to_json(res.gamma);
    out["matrix"] = io::to_json(res.matrix.entries);
    out["lambda"] = io::to_json(res.verdict.enclosure);
    if (res.gamma.certificate.kind == Certificate::Unverified)
      out["note"] = "candidate obstruction (disjointness uncertified)";
  } else {
    out["result"] = "NoneFoundWithinBudget";
    out["exceeded"] = exceeded;
  }
  emit(g, out);
  return 0;
}

// ---- decomposition commands ---------------------------------------------------------

int cmd_decompose(const Globals &g, const std::string &path, const std::string &curves, const std::string &tree,
                  const std::string &out_path)
{
  BranchedCoverRecursion r = io::load_recursion(path);
  require_valid(r, "decompose");
  Multicurve gamma = io::multicurve_from_json(r.source, io::load_json(curves), curves);
  ConfigurationTree t = io::tree_from_json(io::load_json(tree), tree);
  DecompositionResult d = decompose(r, gamma, t);
  Json manifest = io::to_json(d.manifest());

  Json returns = Json::array();
  for (const auto &[sphere, map] : first_return_maps(d)) {
    Json rj{{"punctures", sphere.labels()}, {"degree", map.degree}};
    rj["orbifold"] = io::to_json(orbifold_signature(portrait(map)));
    returns.push_back(std::move(rj));
  }
  if (!out_path.empty())
    write_json(g, out_path, manifest);
  emit(g, Json{{"manifest", manifest}, {"first_return", returns}});
  return 0;
}

int cmd_combine(const Globals &g, const std::string &path, const std::string &out_path,
                const std::string &curves_out, const std::string &tree_out)
{
  Manifest m = io::load_manifest(path);
  CombineResult c = combine(m);
  Json labels = Json::array();
  for (const auto &[cap, label] : c.cap_labels) {
    Json lj = io::to_json(cap);
    lj["label"] = label;
    labels.push_back(std::move(lj));
  }
  Json rec = io::to_json(c.recursion), gamma = io::to_json(c.multicurve), tree = io::to_json(c.tree);
  if (!out_path.empty())
    write_json(g, out_path, rec);
  if (!curves_out.empty())
    write_json(g, curves_out, gamma);
  if (!tree_out.empty())
    write_json(g, tree_out, tree);
  emit(g, Json{{"recursion", rec}, {"multicurve", gamma}, {"tree", tree}, {"cap_labels", labels}});
  return 0;
}

// ---- iteration --------------------------------------------------------------------

struct IterateOptions
{
  std::string angle;
  std::string mating;
  std::string replay;
  int steps = 200;
  double radius = 0;
  unsigned long long seed = 0;
  std::vector<std::string> track;
  std::string csv;
  int window = teich::Thresholds{}.window;
  double degenerate = teich::Thresholds{}.degenerate;
};

std::string format_complex(teich::Complex z)
{
  if (teich::is_infinite(z))
    return "inf";
  std::ostringstream os;
  os.precision(17);
  os << z.real() << (std::signbit(z.imag()) ? "" : "+") << z.imag() << "i";
  return os.str();
}

void write_csv(const std::string &path, const teich::IterationState &s)
{
  std::ostringstream os;
  os.precision(17);
  os << "iteration";
  for (const auto &l : s.config.labels)
    os << "," << l << "_re," << l << "_im";
  for (const auto &b : s.tracked)
    os << ",\"" << teich::format(b, s.config.labels) << "\"";
  os << "\n";
  for (std::size_t n = 0; n < s.history.size(); ++n) {
    os << n;
    for (const auto &z : s.history[n]) {
      if (teich::is_infinite(z))
        os << ",inf,inf";
      else
        os << "," << z.real() << "," << z.imag();
    }
    for (const auto &p : s.proxies)
      if (n < p.size())
        os << "," << p[n];
      else
        os << ",";
    os << "\n";
  }
  io::write_file(path, os.str());
}

teich::IterationState load_replay(const std::string &path)
{
  Json j = io::load_json(path);
  teich::IterationState s;
  s.config.labels = io::field<std::vector<std::string>>(j, "labels", path);
  const int n = static_cast<int>(s.config.labels.size());
  for (const auto &side : io::field<std::vector<std::vector<std::string>>>(j, "tracked", path)) {
    std::string joined;
    for (const auto &l : side)
      joined += (joined.empty() ? "" : ",") + l;
    s.tracked.push_back(teich::parse_bipartition(joined, s.config.labels));
  }
  s.proxies = io::field<std::vector<std::vector<double>>>(j, "proxies", path);
  s.distances = io::field<std::vector<double>>(j, "distances", path);
  if (s.proxies.size() != s.tracked.size())
    throw Error(ErrorCode::Parse, path + ": one proxy sequence per tracked class is required");
  for (const auto &p : s.proxies) {
    if (p.size() != s.distances.size() + 1)
      throw Error(ErrorCode::Parse, path + ": proxy sequences need one more entry than distances");
    for (double v : p)
      if (!(v > 0))
        throw Error(ErrorCode::Domain, path + ": proxies must be positive");
  }
  s.history.assign(s.distances.size() + 1, std::vector<teich::Complex>(static_cast<std::size_t>(n)));
  return s;
}

std::vector<teich::Bipartition> tracked_classes(const IterateOptions &o, const std::vector<std::string> &labels)
{
  std::vector<teich::Bipartition> out;
  if (o.track.empty())
    return teich::all_bipartitions(static_cast<int>(labels.size()));
  for (const auto &t : o.track)
    out.push_back(teich::parse_bipartition(t, labels));
  return out;
}

int cmd_iterate(const Globals &g, const IterateOptions &o)
{
  teich::Thresholds th;
  th.window = o.window;
  th.degenerate = o.degenerate;
  if (g.tol)
    th.converged = *g.tol;
  if (o.steps < 0 || th.window < 1)
    throw Error(ErrorCode::Domain, "--steps must be non-negative and --window positive");
  const int modes = !o.angle.empty() + !o.mating.empty() + !o.replay.empty();
  if (modes != 1)
    throw Error(ErrorCode::Parse, "give exactly one of --angle, --mating, --replay");

  teich::IterationState s;
  std::string mode;
  if (!o.replay.empty()) {
    mode = "replay";
    s = load_replay(o.replay);
  } else if (!o.angle.empty()) {
    mode = "spider";
    teich::Configuration c;
    std::vector<double> jitter;
    if (o.seed != 0) {
      std::mt19937_64 rng(o.seed);
      std::uniform_real_distribution<double> d(-0.03, 0.03);
      for (int k = 0; k < 64; ++k)
        jitter.push_back(d(rng));
    }
    c = teich::spider_start(rational::parse(o.angle), o.radius > 0 ? o.radius : 3.0, jitter);
    s = teich::start(c, tracked_classes(o, c.labels), th);
    s = teich::run(std::move(s), o.steps, [](teich::IterationState x, const teich::Thresholds &t) {
      return teich::spider_step(std::move(x), t);
    }, th);
  } else {
#if TKIT_ENABLE_MATING
    mode = "mating";
    auto comma = o.mating.find(',');
    if (comma == std::string::npos)
      throw Error(ErrorCode::Parse, "--mating expects two angles \"p/q,r/s\"");
    teich::Configuration c = teich::mating_start(rational::parse(o.mating.substr(0, comma)),
                                                 rational::parse(o.mating.substr(comma + 1)),
                                                 o.radius > 0 ? o.radius : 0.5);
    s = teich::start(c, tracked_classes(o, c.labels), th);
    s = teich::run(std::move(s), o.steps, [](teich::IterationState x, const teich::Thresholds &t) {
      return teich::mating_step(std::move(x), t);
    }, th);
#else
    throw Error(ErrorCode::Domain, "this build has no mating support (TKIT_ENABLE_MATING is off)");
#endif
  }

  teich::IterationVerdict v = teich::classify_iteration(s, th);
  if (!o.csv.empty() && mode != "replay")
    write_csv(o.csv, s);

  Json shrinking = Json::array();
  for (int k : v.shrinking)
    shrinking.push_back(teich::format(s.tracked[static_cast<std::size_t>(k)], s.config.labels));
  Json out{{"mode", mode},
           {"status", teich::to_string(v.status)},
           {"steps", s.distances.size()},
           {"shrinking", shrinking},
           {"thresholds",
            {{"window", th.window}, {"degenerate", th.degenerate}, {"converged", th.converged}, {"collision", th.collision}}}};
  if (v.floor)
    out["floor"] = *v.floor;
  if (v.parameter)
    out["c"] = {{"re", v.parameter->real()}, {"im", v.parameter->imag()}};
  if (!v.detail.empty())
    out["detail"] = v.detail;
  if (mode != "replay") {
    Json points = Json::object();
    for (std::size_t j = 0; j < s.config.labels.size(); ++j)
      points[s.config.labels[j]] = format_complex(s.config.points[j]);
    out["points"] = points;
  }
  Json final_proxies = Json::object();
  for (std::size_t k = 0; k < s.tracked.size(); ++k)
    if (!s.proxies[k].empty())
      final_proxies[teich::format(s.tracked[k], s.config.labels)] = s.proxies[k].back();
  out["proxies"] = final_proxies;
  emit(g, out);
  return 0;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Thurston map toolkit: recursions, multicurves, obstructions, decompositions and pullback iteration"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--json-indent", g.indent, "JSON indentation; negative for one line")->capture_default_str();
  app.add_option("--tol", g.tol, "Enclosure tolerance (obstruction, matrix) or convergence tolerance (iterate)");

  std::string path, word, curves, tree, out_path, seeds, curves_out, tree_out;
  int max_iter = Budgets{}.max_iter, max_classes = static_cast<int>(Budgets{}.max_classes);
  IterateOptions it;

  auto *validate_cmd = app.add_subcommand("validate", "Check the invariants of a recursion file");
  validate_cmd->add_option("recursion", path)->required();
  auto *orbifold_cmd = app.add_subcommand("orbifold", "Orbifold signature, Euler characteristic and portrait");
  orbifold_cmd->add_option("recursion", path)->required();
  auto *pullback_cmd = app.add_subcommand("pullback-curve", "Components of the preimage of a curve");
  pullback_cmd->add_option("recursion", path)->required();
  pullback_cmd->add_option("curve", word, "Curve as a word, e.g. x1x2")->required();
  auto *matrix_cmd = app.add_subcommand("matrix", "Transition matrix and leading eigenvalue of a multicurve");
  matrix_cmd->add_option("recursion", path)->required();
  matrix_cmd->add_option("multicurve", curves, "Multicurve JSON file")->required();
  auto *obstruction_cmd = app.add_subcommand("obstruction", "Bounded search for a Thurston obstruction");
  obstruction_cmd->add_option("recursion", path)->required();
  obstruction_cmd->add_option("--seeds", seeds, "JSON list of seed multicurves (default: contiguous blocks)");
  obstruction_cmd->add_option("--max-iter", max_iter)->capture_default_str();
  obstruction_cmd->add_option("--max-classes", max_classes)->capture_default_str();
  auto *decompose_cmd = app.add_subcommand("decompose", "Cut a map in standard form into small sphere maps");
  decompose_cmd->add_option("recursion", path)->required();
  decompose_cmd->add_option("multicurve", curves)->required();
  decompose_cmd->add_option("tree", tree, "Configuration tree JSON file")->required();
  decompose_cmd->add_option("--out", out_path, "Write the manifest here");
  auto *combine_cmd = app.add_subcommand("combine", "Glue the pieces of a manifest");
  combine_cmd->add_option("manifest", path)->required();
  combine_cmd->add_option("--out", out_path, "Write the combined recursion here");
  combine_cmd->add_option("--curves-out", curves_out, "Write the gluing multicurve here");
  combine_cmd->add_option("--tree-out", tree_out, "Write the configuration tree here");
  auto *iterate_cmd = app.add_subcommand("iterate", "Pullback iteration on spider or mating configurations");
  iterate_cmd->add_option("--angle", it.angle, "Angle p/q of a quadratic spider");
  iterate_cmd->add_option("--mating", it.mating, "Angles p/q,r/s of a formal mating");
  iterate_cmd->add_option("--replay", it.replay, "Classify a recorded proxy trace instead of iterating");
  iterate_cmd->add_option("--steps", it.steps)->capture_default_str();
  iterate_cmd->add_option("--radius", it.radius, "Start radius (spider 3, mating 0.5)");
  iterate_cmd->add_option("--seed", it.seed, "Random jitter of the start angles; 0 for none");
  iterate_cmd->add_option("--track", it.track, "Bipartition to track, as one side's labels \"z1,z2\"");
  iterate_cmd->add_option("--csv", it.csv, "Write the iteration trace as CSV");
  iterate_cmd->add_option("--window", it.window)->capture_default_str();
  iterate_cmd->add_option("--degenerate-threshold", it.degenerate)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*validate_cmd)
      return cmd_validate(g, path);
    if (*orbifold_cmd)
      return cmd_orbifold(g, path);
    if (*pullback_cmd)
      return cmd_pullback(g, path, word);
    if (*matrix_cmd)
      return cmd_matrix(g, path, curves);
    if (*obstruction_cmd)
      return cmd_obstruction(g, path, seeds, max_iter, max_classes);
    if (*decompose_cmd)
      return cmd_decompose(g, path, curves, tree, out_path);
    if (*combine_cmd)
      return cmd_combine(g, path, out_path, curves_out, tree_out);
    if (*iterate_cmd)
      return cmd_iterate(g, it);
  } catch (const Error &e) {
    emit(g, Json{{"error", {{"code", to_string(e.code())}, {"message", e.what()}}}});
    return e.is_io() ? 2 : 1;
  } catch (const Json::exception &e) {
    emit(g, Json{{"error", {{"code", "ParseError"}, {"message", e.what()}}}});
    return 2;
  } catch (const std::exception &e) {
    emit(g, Json{{"error", {{"code", "InternalError"}, {"message", e.what()}}}});
    return 1;
  }
  return 1;
}
