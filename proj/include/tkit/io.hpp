#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curves.hpp"
#include "decomposition.hpp"
#include "error.hpp"
#include "rational.hpp"
#include "recursion.hpp"

namespace tkit::io {

using Json = nlohmann::json;

inline constexpr const char *schema = "tk/1";

inline std::string read_file(const std::filesystem::path &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary file so readers never see a partial document.
inline void write_file(const std::filesystem::path &path, const std::string &text)
{
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
    if (!out)
      throw Error(ErrorCode::Io, "cannot write " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    throw Error(ErrorCode::Io, "cannot write " + path.string() + ": " + ec.message());
}

inline Json parse_json(const std::string &text, const std::string &what)
{
  try {
    return Json::parse(text);
  } catch (const Json::parse_error &e) {
    throw Error(ErrorCode::Parse, what + ": " + e.what());
  }
}

inline Json load_json(const std::filesystem::path &path) { return parse_json(read_file(path), path.string()); }

/// nlohmann::json keeps object keys sorted, so dumps are byte-stable.
inline std::string dump(const Json &j, int indent = 2)
{
  std::string s = j.dump(indent < 0 ? -1 : indent);
  s += '\n';
  return s;
}

// ---- field access with parse errors ---------------------------------------

template <class T>
T field(const Json &j, const char *key, const std::string &ctx)
{
  if (!j.is_object() || !j.contains(key))
    throw Error(ErrorCode::Parse, ctx + ": missing field \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception &e) {
    throw Error(ErrorCode::Parse, ctx + ": field \"" + key + "\" has the wrong type");
  }
}

inline Rational rational_from(const Json &j, const std::string &ctx)
{
  if (j.is_string())
    return rational::parse(j.get<std::string>());
  if (j.is_number_integer())
    return Rational(j.get<long long>());
  throw Error(ErrorCode::Parse, ctx + ": expected a rational \"p/q\"");
}

inline Json to_json(const Rational &q) { return rational::to_string(q); }

// ---- recursions -------------------------------------------------------------

inline BranchedCoverRecursion recursion_from_json(const Json &j, const std::string &ctx = "recursion")
{
  BranchedCoverRecursion r;
  auto labels = field<std::vector<std::string>>(j, "punctures", ctx);
  try {
    r.source = MarkedSphere(labels);
  } catch (const Error &e) {
    throw Error(ErrorCode::Parse, ctx + ": " + e.what());
  }
  r.target = r.source;
  if (j.contains("source_punctures")) {
    r.source = MarkedSphere(field<std::vector<std::string>>(j, "source_punctures", ctx));
  }
  r.degree = field<int>(j, "degree", ctx);
  auto gens = field<std::vector<Json>>(j, "generators", ctx);
  for (std::size_t i = 0; i < gens.size(); ++i) {
    std::string gctx = ctx + ": generator " + std::to_string(i + 1);
    GeneratorRecursion g;
    for (int p : field<std::vector<int>>(gens[i], "perm", gctx))
      g.perm.push_back(p - 1);
    for (const auto &w : field<std::vector<std::string>>(gens[i], "lifts", gctx)) {
      Word tokens = word::parse(w);
      for (int l : tokens)
        if (std::abs(l) > r.source.size())
          throw Error(ErrorCode::Parse, gctx + ": letter outside the source sphere in \"" + w + "\"");
      g.lifts.push_back(r.source.normal_form(tokens));
    }
    r.generators.push_back(std::move(g));
  }
  return r;
}

inline Json to_json(const BranchedCoverRecursion &r)
{
  Json j;
  j["punctures"] = r.target.labels();
  if (!r.is_self_map())
    j["source_punctures"] = r.source.labels();
  j["degree"] = r.degree;
  Json gens = Json::array();
  for (const auto &g : r.generators) {
    Json gj;
    std::vector<int> p;
    for (int s : g.perm)
      p.push_back(s + 1);
    gj["perm"] = p;
    std::vector<std::string> lifts;
    for (const auto &w : g.lifts)
      lifts.push_back(word::format(r.source.normal_form(w)));
    gj["lifts"] = lifts;
    gens.push_back(std::move(gj));
  }
  j["generators"] = gens;
  return j;
}

inline BranchedCoverRecursion load_recursion(const std::filesystem::path &path)
{ return recursion_from_json(load_json(path), path.string()); }

// ---- multicurves ------------------------------------------------------------

inline Certificate certificate_from(const Json &j, const std::string &ctx)
{
  auto kind = field<std::string>(j, "certificate", ctx);
  Certificate c;
  if (kind == "CertifiedByCoLift") {
    c.kind = Certificate::CertifiedByCoLift;
    c.iterate = j.contains("iterate") ? field<int>(j, "iterate", ctx) : 1;
  } else if (kind == "AssertedByUser") {
    c.kind = Certificate::AssertedByUser;
  } else if (kind == "Unverified") {
    c.kind = Certificate::Unverified;
  } else {
    throw Error(ErrorCode::Parse, ctx + ": unknown certificate \"" + kind + "\"");
  }
  return c;
}

inline Multicurve multicurve_from_json(const MarkedSphere &s, const Json &j, const std::string &ctx = "multicurve")
{
  std::vector<CurveClass> cs;
  for (const auto &w : field<std::vector<std::string>>(j, "curves", ctx))
    cs.push_back(curve(s, w));
  Multicurve m = Multicurve::from(std::move(cs), certificate_from(j, ctx));
  require_multicurve(s, m);
  return m;
}

inline Json to_json(const Multicurve &m)
{
  Json j;
  std::vector<std::string> names;
  for (const auto &c : m.classes)
    names.push_back(c.name());
  j["curves"] = names;
  j["certificate"] = to_string(m.certificate.kind);
  if (m.certificate.kind == Certificate::CertifiedByCoLift)
    j["iterate"] = m.certificate.iterate;
  return j;
}

// ---- matrices and enclosures --------------------------------------------------

inline Json to_json(const Enclosure &e)
{
  return Json{{"lo", to_json(e.lo)}, {"hi", to_json(e.hi)}};
}

inline Json to_json(const RationalMatrix &m)
{
  Json exact = Json::array(), approx = Json::array();
  for (const auto &row : m) {
    Json er = Json::array(), ar = Json::array();
    for (const auto &v : row) {
      er.push_back(to_json(v));
      ar.push_back(rational::to_double(v));
    }
    exact.push_back(er);
    approx.push_back(ar);
  }
  return Json{{"exact", exact}, {"decimal", approx}};
}

inline RationalMatrix matrix_from_json(const Json &j, const std::string &ctx = "matrix")
{
  const Json &rows = j.is_object() ? j.at("exact") : j;
  if (!rows.is_array())
    throw Error(ErrorCode::Parse, ctx + ": expected an array of rows");
  RationalMatrix m;
  for (const auto &row : rows) {
    if (!row.is_array() || row.size() != rows.size())
      throw Error(ErrorCode::Parse, ctx + ": matrix must be square");
    std::vector<Rational> r;
    for (const auto &v : row)
      r.push_back(rational_from(v, ctx));
    m.push_back(std::move(r));
  }
  return m;
}

inline Json to_json(const Portrait &p)
{
  Json entries = Json::array();
  for (int j = 1; j <= p.source.size(); ++j) {
    const auto &e = p.entry(j);
    entries.push_back(Json{{"puncture", p.source.label(j)}, {"image", p.target.label(e.image)}, {"degree", e.degree}});
  }
  Json crit = Json::array();
  for (const auto &u : p.unmarked_critical)
    crit.push_back(Json{{"image", p.target.label(u.image)}, {"degree", u.degree}});
  return Json{{"degree", p.degree}, {"entries", entries}, {"unmarked_critical", crit}};
}

inline Json to_json(const OrbifoldSignature &sig)
{
  Json values = Json::array();
  for (const auto &w : sig.values)
    values.push_back(w.infinite ? Json("inf") : Json(w.value));
  return Json{{"punctures", sig.labels},
              {"signature", values},
              {"chi", to_json(sig.chi)},
              {"hyperbolic", is_hyperbolic(sig)}};
}

// ---- configuration trees ------------------------------------------------------

inline ConfigurationTree tree_from_json(const Json &j, const std::string &ctx = "tree")
{
  ConfigurationTree t;
  for (const auto &n : field<std::vector<Json>>(j, "nodes", ctx))
    t.nodes.push_back({field<std::string>(n, "name", ctx), field<std::vector<std::string>>(n, "punctures", ctx)});
  for (const auto &e : field<std::vector<Json>>(j, "edges", ctx)) {
    auto ends = field<std::vector<std::string>>(e, "nodes", ctx);
    if (ends.size() != 2)
      throw Error(ErrorCode::Parse, ctx + ": an edge joins exactly two nodes");
    t.edges.push_back({field<std::string>(e, "curve", ctx), ends[0], ends[1]});
  }
  return t;
}

inline Json to_json(const ConfigurationTree &t)
{
  Json nodes = Json::array(), edges = Json::array();
  for (const auto &n : t.nodes)
    nodes.push_back(Json{{"name", n.name}, {"punctures", n.punctures}});
  for (const auto &e : t.edges)
    edges.push_back(Json{{"curve", e.curve}, {"nodes", {e.a, e.b}}});
  return Json{{"nodes", nodes}, {"edges", edges}};
}

// ---- manifests ------------------------------------------------------------------

inline CapRef cap_ref_from(const Json &j, const std::string &ctx)
{ return {field<std::string>(j, "piece", ctx), field<std::string>(j, "puncture", ctx)}; }

inline Json to_json(const CapRef &c) { return Json{{"piece", c.node}, {"puncture", c.puncture}}; }

inline Manifest manifest_from_json(const Json &j, const std::string &ctx = "manifest")
{
  Manifest m;
  for (const auto &p : field<std::vector<Json>>(j, "pieces", ctx)) {
    Piece pc;
    pc.name = field<std::string>(p, "name", ctx);
    pc.image = p.contains("image") ? field<std::string>(p, "image", ctx) : pc.name;
    pc.map = recursion_from_json(field<Json>(p, "recursion", ctx), ctx + ": piece " + pc.name);
    m.pieces.push_back(std::move(pc));
  }
  for (const auto &g : field<std::vector<Json>>(j, "pairing", ctx)) {
    auto caps = field<std::vector<Json>>(g, "caps", ctx);
    if (caps.size() != 2)
      throw Error(ErrorCode::Parse, ctx + ": a pair glues exactly two caps");
    GluingPair gp;
    gp.caps = {cap_ref_from(caps[0], ctx), cap_ref_from(caps[1], ctx)};
    if (g.contains("curve"))
      gp.curve = field<std::string>(g, "curve", ctx);
    if (g.contains("image_curve"))
      gp.image_curve = field<std::string>(g, "image_curve", ctx);
    if (g.contains("annulus_degree"))
      gp.annulus_degree = field<int>(g, "annulus_degree", ctx);
    m.pairing.push_back(std::move(gp));
  }
  if (j.contains("caps"))
    for (const auto &c : field<std::vector<Json>>(j, "caps", ctx)) {
      CapData cd;
      cd.cap = cap_ref_from(c, ctx);
      cd.returning = field<bool>(c, "returning", ctx);
      cd.return_time = c.contains("return_time") ? field<int>(c, "return_time", ctx) : 0;
      cd.degrees = field<std::vector<int>>(c, "degrees", ctx);
      m.caps.push_back(std::move(cd));
    }
  if (j.contains("cap_map"))
    for (const auto &c : field<std::vector<Json>>(j, "cap_map", ctx))
      m.cap_map.push_back({field<std::string>(c, "piece", ctx), field<std::string>(c, "puncture", ctx),
                           field<std::string>(c, "image", ctx)});
  if (j.contains("cycles"))
    m.cycles = field<std::vector<std::vector<std::string>>>(j, "cycles", ctx);
  return m;
}

inline Json to_json(const Manifest &m)
{
  Json pieces = Json::array(), pairing = Json::array(), caps = Json::array(), cap_map = Json::array();
  for (const auto &p : m.pieces)
    pieces.push_back(Json{{"name", p.name}, {"image", p.image}, {"recursion", to_json(p.map)}});
  for (const auto &g : m.pairing) {
    Json gj{{"caps", {to_json(g.caps[0]), to_json(g.caps[1])}}};
    if (!g.curve.empty())
      gj["curve"] = g.curve;
    if (!g.image_curve.empty())
      gj["image_curve"] = g.image_curve;
    if (g.annulus_degree > 0)
      gj["annulus_degree"] = g.annulus_degree;
    pairing.push_back(std::move(gj));
  }
  for (const auto &c : m.caps) {
    Json cj = to_json(c.cap);
    cj["returning"] = c.returning;
    if (c.returning)
      cj["return_time"] = c.return_time;
    cj["degrees"] = c.degrees;
    cj["first_return_degree"] = c.first_return_degree();
    caps.push_back(std::move(cj));
  }
  for (const auto &c : m.cap_map)
    cap_map.push_back(Json{{"piece", c.piece}, {"puncture", c.puncture}, {"image", c.image}});
  return Json{{"pieces", pieces}, {"pairing", pairing}, {"caps", caps}, {"cap_map", cap_map}, {"cycles", m.cycles}};
}

inline Manifest load_manifest(const std::filesystem::path &path)
{ return manifest_from_json(load_json(path), path.string()); }

} // namespace tkit::io
