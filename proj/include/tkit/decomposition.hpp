#pragma once

#include <algorithm>
#include <array>
#include <deque>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "curves.hpp"
#include "error.hpp"
#include "permutation.hpp"
#include "recursion.hpp"
#include "sphere.hpp"
#include "word.hpp"

namespace tkit {

// ---- data model ---------------------------------------------------------------

/// A puncture of a named piece.
struct CapRef
{
  std::string node;
  std::string puncture;

  auto operator<=>(const CapRef &) const = default;
};

/// Boundary dynamics of one cap puncture: the orbit of the capped hole
/// through the small spheres until it comes back.
struct CapData
{
  CapRef cap;
  bool returning = true;
  int return_time = 1;
  std::vector<int> degrees; // local degree at each step of the orbit

  long long first_return_degree() const
  {
    long long p = 1;
    for (int d : degrees)
      p *= d;
    return p;
  }
};

/// Two caps glued along one curve, plus how that curve's annulus maps.
struct GluingPair
{
  std::array<CapRef, 2> caps;
  std::string curve;       // glued curve on the big sphere, when known
  std::string image_curve; // curve it covers, empty if none in the multicurve
  int annulus_degree = 0;  // 0 when unknown
};

/// Where a puncture lands when its small-sphere image is a cap.
struct CapMapEntry
{
  std::string piece;
  std::string puncture;
  std::string image; // label on the big sphere
};

struct Piece
{
  std::string name;
  std::string image; // name of the piece it maps to
  BranchedCoverRecursion map;
};

/// Decomposition manifest; `combine` reads the same structure.
struct Manifest
{
  std::vector<Piece> pieces;
  std::vector<GluingPair> pairing;
  std::vector<CapData> caps;
  std::vector<CapMapEntry> cap_map;
  std::vector<std::vector<std::string>> cycles;

  std::optional<std::size_t> piece_index(const std::string &name) const
  {
    for (std::size_t i = 0; i < pieces.size(); ++i)
      if (pieces[i].name == name)
        return i;
    return std::nullopt;
  }
};

struct TreeNode
{
  std::string name;
  std::vector<std::string> punctures;
};

/// Edge of the configuration tree: a curve word on the big sphere and the
/// two nodes it separates.
struct TreeEdge
{
  std::string curve;
  std::string a;
  std::string b;
};

struct ConfigurationTree
{
  std::vector<TreeNode> nodes;
  std::vector<TreeEdge> edges;

  std::optional<std::size_t> node_index(const std::string &name) const
  {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].name == name)
        return i;
    return std::nullopt;
  }
};

struct DecompositionResult
{
  std::vector<std::string> names;
  std::vector<MarkedSphere> small_spheres;
  std::vector<BranchedCoverRecursion> maps; // maps[m]: small_spheres[m] -> small_spheres[images[m]]
  std::vector<int> images;
  std::vector<std::vector<int>> sheets; // sheets of the big cover used by each piece
  std::vector<SphereMapCycle> map_cycles;
  std::vector<std::vector<int>> cycle_nodes;
  std::vector<CapData> caps;
  std::vector<GluingPair> gluing;
  std::vector<CapMapEntry> cap_map;

  Manifest manifest() const
  {
    Manifest m;
    for (std::size_t i = 0; i < names.size(); ++i)
      m.pieces.push_back({names[i], names[static_cast<std::size_t>(images[i])], maps[i]});
    m.pairing = gluing;
    m.caps = caps;
    m.cap_map = cap_map;
    for (const auto &c : cycle_nodes) {
      std::vector<std::string> cn;
      for (int k : c)
        cn.push_back(names[static_cast<std::size_t>(k)]);
      m.cycles.push_back(cn);
    }
    return m;
  }
};

inline std::string cap_label(const std::string &curve_name, const std::string &toward)
{ return "cap:" + curve_name + ":" + toward; }

// ---- tree layout ----------------------------------------------------------------

namespace detail {

struct TreeLayout
{
  std::string error; // nonempty when the tree is malformed
  std::vector<int> owner;                   // puncture (zero-based) -> node
  std::vector<std::vector<int>> node_edges; // incident edges per node
  std::vector<std::vector<char>> side_b;    // side_b[e][p]: puncture p lies on edge e's b side
  std::vector<std::array<int, 2>> ends;     // node indices of each edge
};

inline std::string format_set(const MarkedSphere &s, const std::vector<char> &in, bool value)
{
  std::string out = "{";
  bool first = true;
  for (int p = 0; p < s.size(); ++p)
    if (static_cast<bool>(in[static_cast<std::size_t>(p)]) == value) {
      out += (first ? "" : ",") + s.label(p + 1);
      first = false;
    }
  return out + "}";
}

inline TreeLayout layout(const MarkedSphere &s, const ConfigurationTree &t)
{
  TreeLayout L;
  const int n = s.size();
  const int N = static_cast<int>(t.nodes.size());
  L.owner.assign(static_cast<std::size_t>(n), -1);
  L.node_edges.assign(static_cast<std::size_t>(N), {});
  if (N == 0) {
    L.error = "tree has no nodes";
    return L;
  }
  std::set<std::string> names;
  for (int j = 0; j < N; ++j) {
    const auto &node = t.nodes[static_cast<std::size_t>(j)];
    if (!names.insert(node.name).second) {
      L.error = "duplicate node " + node.name;
      return L;
    }
    for (const auto &label : node.punctures) {
      auto idx = s.index_of(label);
      if (!idx) {
        L.error = "node " + node.name + " lists unknown puncture " + label;
        return L;
      }
      if (L.owner[static_cast<std::size_t>(*idx - 1)] >= 0) {
        L.error = "puncture " + label + " belongs to two nodes";
        return L;
      }
      L.owner[static_cast<std::size_t>(*idx - 1)] = j;
    }
  }
  for (int p = 0; p < n; ++p)
    if (L.owner[static_cast<std::size_t>(p)] < 0) {
      L.error = "puncture " + s.label(p + 1) + " belongs to no node";
      return L;
    }
  for (std::size_t e = 0; e < t.edges.size(); ++e) {
    auto a = t.node_index(t.edges[e].a), b = t.node_index(t.edges[e].b);
    if (!a || !b || *a == *b) {
      L.error = "edge " + t.edges[e].curve + " must join two distinct nodes";
      return L;
    }
    L.ends.push_back({static_cast<int>(*a), static_cast<int>(*b)});
    L.node_edges[*a].push_back(static_cast<int>(e));
    L.node_edges[*b].push_back(static_cast<int>(e));
  }
  if (static_cast<int>(t.edges.size()) != N - 1) {
    L.error = "a tree on " + std::to_string(N) + " nodes needs " + std::to_string(N - 1) + " edges";
    return L;
  }
  auto reach = [&](int start, int banned) {
    std::vector<char> seen(static_cast<std::size_t>(N), 0);
    std::deque<int> q{start};
    seen[static_cast<std::size_t>(start)] = 1;
    while (!q.empty()) {
      int v = q.front();
      q.pop_front();
      for (int e : L.node_edges[static_cast<std::size_t>(v)]) {
        if (e == banned)
          continue;
        const auto &ab = L.ends[static_cast<std::size_t>(e)];
        int w = ab[0] == v ? ab[1] : ab[0];
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          q.push_back(w);
        }
      }
    }
    return seen;
  };
  auto all = reach(0, -1);
  if (std::count(all.begin(), all.end(), 1) != N) {
    L.error = "tree is not connected";
    return L;
  }
  for (int j = 0; j < N; ++j) {
    bool has_puncture = std::find(L.owner.begin(), L.owner.end(), j) != L.owner.end();
    if (!has_puncture && L.node_edges[static_cast<std::size_t>(j)].size() < 3) {
      L.error = "node " + t.nodes[static_cast<std::size_t>(j)].name + " has no puncture and fewer than 3 edges";
      return L;
    }
  }
  for (std::size_t e = 0; e < t.edges.size(); ++e) {
    auto side = reach(L.ends[e][1], static_cast<int>(e));
    std::vector<char> in(static_cast<std::size_t>(n), 0);
    for (int p = 0; p < n; ++p)
      in[static_cast<std::size_t>(p)] = side[static_cast<std::size_t>(L.owner[static_cast<std::size_t>(p)])];
    L.side_b.push_back(std::move(in));
  }
  return L;
}

/// First position of a cyclically contiguous set, or nullopt.
inline std::optional<int> block_start(const std::vector<char> &in)
{
  const int n = static_cast<int>(in.size());
  std::optional<int> start;
  int starts = 0;
  for (int p = 0; p < n; ++p)
    if (in[static_cast<std::size_t>(p)] && !in[static_cast<std::size_t>((p + n - 1) % n)]) {
      start = p;
      ++starts;
    }
  if (starts != 1)
    return std::nullopt;
  return start;
}

inline Word block_word(const std::vector<char> &in, int start)
{
  const int n = static_cast<int>(in.size());
  Word w;
  for (int k = 0; k < n; ++k) {
    int p = (start + k) % n;
    if (!in[static_cast<std::size_t>(p)])
      break;
    w.push_back(p + 1);
  }
  return w;
}

} // namespace detail

// ---- standard form check ------------------------------------------------------------

inline ValidationReport standard_form_check(const BranchedCoverRecursion &r, const Multicurve &gamma,
                                            const ConfigurationTree &tree)
{
  ValidationReport rep;
  const MarkedSphere &S = r.target;
  if (gamma.certificate.kind == Certificate::Unverified) {
    rep.checks.push_back({"certificate", false, "multicurve disjointness is not certified"});
    return rep;
  }
  rep.checks.push_back({"certificate", true, ""});
  if (!r.is_self_map()) {
    rep.checks.push_back({"stability", false, "not a self-map"});
    return rep;
  }
  StabilityReport st = is_stable(r, gamma);
  rep.checks.push_back({"stability", st.stable,
                        st.stable ? "" : st.witness->name() + " in the preimage of " + st.witness_parent->name()});

  detail::TreeLayout L = detail::layout(S, tree);
  rep.checks.push_back({"tree", L.error.empty(), L.error});
  if (!L.error.empty())
    return rep;

  Check words{"words", true, ""};
  std::set<Word> keys;
  for (std::size_t e = 0; e < tree.edges.size() && words.pass; ++e) {
    const auto &edge = tree.edges[e];
    std::string bip = detail::format_set(S, L.side_b[e], false) + "|" + detail::format_set(S, L.side_b[e], true);
    CurveClass c;
    try {
      c = curve(S, edge.curve);
    } catch (const Error &err) {
      words = {"words", false, "edge " + edge.curve + ": " + err.what()};
      break;
    }
    auto count = std::count(L.side_b[e].begin(), L.side_b[e].end(), 1);
    if (count < 2 || count > S.size() - 2) {
      words = {"words", false, "edge " + edge.curve + " cuts off fewer than two punctures: " + bip};
      break;
    }
    auto start = detail::block_start(L.side_b[e]);
    if (!start) {
      words = {"words", false, "edge " + edge.curve + " has a non-contiguous side: " + bip};
      break;
    }
    Word block = detail::block_word(L.side_b[e], *start);
    if (word::unoriented_key(S.normal_form(block)) != c.key) {
      words = {"words", false, "edge " + edge.curve + " does not bound its side: inconsistent bipartition " + bip};
      break;
    }
    if (!gamma.contains(c.key)) {
      words = {"words", false, "edge " + edge.curve + " is not a class of the multicurve"};
      break;
    }
    if (!keys.insert(c.key).second)
      words = {"words", false, "edge " + edge.curve + " repeats a class"};
  }
  if (words.pass && keys.size() != gamma.size())
    words = {"words", false, "multicurve has classes without a tree edge"};
  rep.checks.push_back(words);

  // Each glued curve covers at most one curve, with one annulus degree.
  Check degrees{"degrees", true, ""};
  std::map<Word, int> seen;
  for (const auto &g : gamma.classes)
    for (const auto &comp : pullback_class(r, g).components)
      if (comp.classification.kind == Classification::Essential && ++seen[comp.cls.key] > 1) {
        degrees = {"degrees", false, "class " + comp.cls.name() + " appears twice among the preimages"};
        break;
      }
  rep.checks.push_back(degrees);
  return rep;
}

// ---- decompose ----------------------------------------------------------------------

namespace detail {

/// The small sphere of one node: own punctures in big-sphere order, each
/// foreign block collapsed to a cap puncture.
struct NodeSphere
{
  MarkedSphere sphere;
  std::vector<Word> generators;   // big-sphere word for each small generator
  std::vector<Word> collapse;     // image of each big generator in the small sphere
  std::vector<int> cap_edge;      // per small puncture: edge id of a cap, -1 for own
  std::vector<int> big_index;     // per small puncture: big index (one-based) for own, 0 for caps
};

inline NodeSphere node_sphere(const MarkedSphere &S, const ConfigurationTree &tree, const TreeLayout &L, int j,
                              const std::vector<std::string> &curve_names)
{
  const int n = S.size();
  std::vector<int> block(static_cast<std::size_t>(n), -1);
  for (int e : L.node_edges[static_cast<std::size_t>(j)]) {
    bool j_is_a = L.ends[static_cast<std::size_t>(e)][0] == j;
    for (int p = 0; p < n; ++p)
      if (static_cast<bool>(L.side_b[static_cast<std::size_t>(e)][static_cast<std::size_t>(p)]) == j_is_a)
        block[static_cast<std::size_t>(p)] = e;
  }
  auto starts_here = [&](int p) {
    int b = block[static_cast<std::size_t>(p)];
    return b < 0 || block[static_cast<std::size_t>((p + n - 1) % n)] != b;
  };
  int start = 0;
  while (!starts_here(start))
    ++start;
  NodeSphere ns;
  std::vector<std::string> labels;
  ns.collapse.assign(static_cast<std::size_t>(n), Word{});
  for (int k = 0; k < n; ++k) {
    int p = (start + k) % n;
    int b = block[static_cast<std::size_t>(p)];
    if (b < 0) {
      labels.push_back(S.label(p + 1));
      ns.generators.push_back({p + 1});
      ns.cap_edge.push_back(-1);
      ns.big_index.push_back(p + 1);
      ns.collapse[static_cast<std::size_t>(p)] = {static_cast<int>(labels.size())};
    } else if (starts_here(p)) {
      const auto &ends = L.ends[static_cast<std::size_t>(b)];
      int other = ends[0] == j ? ends[1] : ends[0];
      labels.push_back(cap_label(curve_names[static_cast<std::size_t>(b)],
                                 tree.nodes[static_cast<std::size_t>(other)].name));
      Word w;
      for (int q = p; block[static_cast<std::size_t>(q)] == b && static_cast<int>(w.size()) < n; q = (q + 1) % n)
        w.push_back(q + 1);
      ns.generators.push_back(w);
      ns.cap_edge.push_back(b);
      ns.big_index.push_back(0);
      ns.collapse[static_cast<std::size_t>(p)] = {static_cast<int>(labels.size())};
    }
  }
  ns.sphere = MarkedSphere(labels);
  return ns;
}

} // namespace detail

inline DecompositionResult decompose(const BranchedCoverRecursion &r, const Multicurve &gamma,
                                     const ConfigurationTree &tree)
{
  ValidationReport sf = standard_form_check(r, gamma, tree);
  for (const auto &c : sf.checks)
    if (!c.pass)
      throw Error(ErrorCode::NotStandardForm, c.name + ": " + c.witness);
  const MarkedSphere &S = r.target;
  detail::TreeLayout L = detail::layout(S, tree);
  const int N = static_cast<int>(tree.nodes.size());

  std::vector<std::string> curve_names;
  for (const auto &e : tree.edges)
    curve_names.push_back(curve(S, e.curve).name());

  std::vector<detail::NodeSphere> ns;
  for (int j = 0; j < N; ++j)
    ns.push_back(detail::node_sphere(S, tree, L, j, curve_names));

  DecompositionResult out;
  for (const auto &node : tree.nodes)
    out.names.push_back(node.name);
  for (const auto &x : ns)
    out.small_spheres.push_back(x.sphere);
  out.maps.resize(static_cast<std::size_t>(N));
  out.images.assign(static_cast<std::size_t>(N), -1);
  out.sheets.resize(static_cast<std::size_t>(N));

  for (int j = 0; j < N; ++j) {
    const auto &target = ns[static_cast<std::size_t>(j)];
    std::vector<WordAction> actions;
    std::vector<Perm> perms;
    for (const Word &g : target.generators) {
      actions.push_back(act(r, g));
      perms.push_back(actions.back().perm);
    }
    auto orbits = perm::orbits(r.degree, perms);
    std::stable_sort(orbits.begin(), orbits.end(),
                     [](const auto &a, const auto &b) { return a.size() > b.size(); });
    std::vector<int> candidates{j};
    for (int m = 0; m < N; ++m)
      if (m != j)
        candidates.push_back(m);
    for (const auto &orbit : orbits) {
      std::map<int, int> local;
      for (std::size_t k = 0; k < orbit.size(); ++k)
        local[orbit[k]] = static_cast<int>(k);
      for (int m : candidates) {
        if (out.images[static_cast<std::size_t>(m)] >= 0)
          continue;
        const auto &source = ns[static_cast<std::size_t>(m)];
        BranchedCoverRecursion R;
        R.degree = static_cast<int>(orbit.size());
        R.source = source.sphere;
        R.target = target.sphere;
        for (const auto &a : actions) {
          GeneratorRecursion g;
          for (int s : orbit) {
            g.perm.push_back(local.at(a.perm[static_cast<std::size_t>(s)]));
            g.lifts.push_back(source.sphere.normal_form(substitute(a.lifts[static_cast<std::size_t>(s)],
                                                                   source.collapse)));
          }
          R.generators.push_back(std::move(g));
        }
        if (validate(R).ok()) {
          out.maps[static_cast<std::size_t>(m)] = std::move(R);
          out.images[static_cast<std::size_t>(m)] = j;
          out.sheets[static_cast<std::size_t>(m)] = orbit;
          break;
        }
      }
    }
  }
  for (int m = 0; m < N; ++m)
    if (out.images[static_cast<std::size_t>(m)] < 0)
      throw Error(ErrorCode::NotStandardForm, "no preimage component realizes node " + out.names[static_cast<std::size_t>(m)]);

  std::vector<Portrait> portraits;
  for (const auto &R : out.maps)
    portraits.push_back(portrait(R));

  // Cap orbits.
  for (int m = 0; m < N; ++m) {
    const auto &x = ns[static_cast<std::size_t>(m)];
    for (int c = 1; c <= x.sphere.size(); ++c) {
      if (x.cap_edge[static_cast<std::size_t>(c - 1)] < 0)
        continue;
      CapData cd;
      cd.cap = {out.names[static_cast<std::size_t>(m)], x.sphere.label(c)};
      int node = m, pos = c;
      std::set<std::pair<int, int>> visited{{node, pos}};
      for (;;) {
        const auto &e = portraits[static_cast<std::size_t>(node)].entry(pos);
        cd.degrees.push_back(e.degree);
        node = out.images[static_cast<std::size_t>(node)];
        pos = e.image;
        if (node == m && pos == c) {
          cd.return_time = static_cast<int>(cd.degrees.size());
          break;
        }
        if (ns[static_cast<std::size_t>(node)].cap_edge[static_cast<std::size_t>(pos - 1)] < 0
            || !visited.insert({node, pos}).second) {
          cd.returning = false;
          cd.return_time = 0;
          break;
        }
      }
      out.caps.push_back(std::move(cd));
    }
  }

  // Gluing records.
  std::map<Word, std::pair<std::string, int>> covers;
  for (const auto &g : gamma.classes)
    for (const auto &comp : pullback_class(r, g).components)
      if (gamma.contains(comp.cls.key))
        covers[comp.cls.key] = {g.name(), comp.degree};
  for (std::size_t e = 0; e < tree.edges.size(); ++e) {
    GluingPair gp;
    int a = L.ends[e][0], b = L.ends[e][1];
    gp.caps = {CapRef{out.names[static_cast<std::size_t>(a)], cap_label(curve_names[e], out.names[static_cast<std::size_t>(b)])},
               CapRef{out.names[static_cast<std::size_t>(b)], cap_label(curve_names[e], out.names[static_cast<std::size_t>(a)])}};
    gp.curve = curve_names[e];
    if (auto it = covers.find(curve(S, tree.edges[e].curve).key); it != covers.end()) {
      gp.image_curve = it->second.first;
      gp.annulus_degree = it->second.second;
    }
    out.gluing.push_back(std::move(gp));
  }

  // Punctures whose small image is a cap: record the big-sphere image.
  Portrait big = portrait(r);
  for (int m = 0; m < N; ++m) {
    const auto &x = ns[static_cast<std::size_t>(m)];
    const auto &y = ns[static_cast<std::size_t>(out.images[static_cast<std::size_t>(m)])];
    for (int p = 1; p <= x.sphere.size(); ++p) {
      int gi = x.big_index[static_cast<std::size_t>(p - 1)];
      if (gi == 0)
        continue;
      int img = portraits[static_cast<std::size_t>(m)].entry(p).image;
      if (y.cap_edge[static_cast<std::size_t>(img - 1)] >= 0)
        out.cap_map.push_back({out.names[static_cast<std::size_t>(m)], x.sphere.label(p), S.label(big.entry(gi).image)});
    }
  }

  // Periodic cycles of the node map.
  std::vector<int> state(static_cast<std::size_t>(N), 0);
  for (int start = 0; start < N; ++start) {
    std::vector<int> path;
    int v = start;
    while (state[static_cast<std::size_t>(v)] == 0) {
      state[static_cast<std::size_t>(v)] = 1;
      path.push_back(v);
      v = out.images[static_cast<std::size_t>(v)];
    }
    if (state[static_cast<std::size_t>(v)] == 1) {
      auto it = std::find(path.begin(), path.end(), v);
      std::vector<int> cyc(it, path.end());
      std::rotate(cyc.begin(), std::min_element(cyc.begin(), cyc.end()), cyc.end());
      SphereMapCycle smc;
      for (int k : cyc) {
        smc.spheres.push_back(out.small_spheres[static_cast<std::size_t>(k)]);
        smc.maps.push_back(out.maps[static_cast<std::size_t>(k)]);
      }
      out.map_cycles.push_back(std::move(smc));
      out.cycle_nodes.push_back(std::move(cyc));
    }
    for (int k : path)
      state[static_cast<std::size_t>(k)] = 2;
  }
  std::vector<std::size_t> order(out.cycle_nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return out.cycle_nodes[a][0] < out.cycle_nodes[b][0]; });
  std::vector<SphereMapCycle> mc;
  std::vector<std::vector<int>> cn;
  for (auto i : order) {
    mc.push_back(out.map_cycles[i]);
    cn.push_back(out.cycle_nodes[i]);
  }
  out.map_cycles = std::move(mc);
  out.cycle_nodes = std::move(cn);
  return out;
}

/// First-return self-maps of every sphere on a periodic cycle.
inline std::vector<std::pair<MarkedSphere, BranchedCoverRecursion>> first_return_maps(const DecompositionResult &d)
{
  std::vector<std::pair<MarkedSphere, BranchedCoverRecursion>> out;
  for (const auto &c : d.map_cycles)
    for (int k = 0; k < c.period(); ++k)
      out.emplace_back(c.spheres[static_cast<std::size_t>(k)], c.first_return(k));
  return out;
}

// ---- combine ------------------------------------------------------------------------

struct CombineResult
{
  BranchedCoverRecursion recursion;
  Multicurve multicurve;
  ConfigurationTree tree;
  std::map<CapRef, std::string> cap_labels; // input cap -> label used by decompose
};

namespace detail {

/// Base change making the lifts along the cap cycle 1, ..., 1, x_c.
/// Returns the standardized recursion and the cycle.
inline std::pair<BranchedCoverRecursion, std::vector<int>> standardize_cap(const BranchedCoverRecursion &r, int c)
{
  const MarkedSphere &s = r.source;
  const auto &g = r.generators[static_cast<std::size_t>(c - 1)];
  WordAction a{g.perm, g.lifts};
  Word cap = s.generator(c);
  for (const auto &cyc : perm::cycles(g.perm)) {
    Word lift = s.normal_form(cycle_lift(a, cyc));
    auto u = word::conjugator(lift, s.normal_form(cap));
    if (!u)
      continue;
    std::vector<Word> t(static_cast<std::size_t>(r.degree));
    Word cur = word::inverse(*u);
    for (std::size_t i = 0; i < cyc.size(); ++i) {
      t[static_cast<std::size_t>(cyc[i])] = cur;
      cur = word::concat(cur, g.lifts[static_cast<std::size_t>(cyc[i])]);
    }
    BranchedCoverRecursion out = change_basis(r, t);
    const auto &ng = out.generators[static_cast<std::size_t>(c - 1)];
    for (std::size_t i = 0; i + 1 < cyc.size(); ++i)
      if (!ng.lifts[static_cast<std::size_t>(cyc[i])].empty())
        throw Error(ErrorCode::Internal, "cap standardization failed");
    if (ng.lifts[static_cast<std::size_t>(cyc.back())] != s.normal_form(cap))
      throw Error(ErrorCode::Internal, "cap standardization failed");
    return {out, cyc};
  }
  throw Error(ErrorCode::IncompatibleBoundaryDynamics, "cap " + s.label(c) + " is not a preimage of itself");
}

/// Glues B into A along caps cA (of A) and cB (of B), both fixed with equal
/// local degree. hole_image_A maps a marked preimage of cA to a puncture of B,
/// hole_image_B maps a marked preimage of cB to a puncture of A.
inline BranchedCoverRecursion glue(const BranchedCoverRecursion &A0, int cA, const BranchedCoverRecursion &B0, int cB,
                                   const std::map<int, int> &hole_image_A, const std::map<int, int> &hole_image_B)
{
  auto [A, sc] = standardize_cap(A0, cA);
  auto [B, rc] = standardize_cap(B0, cB);
  const int e = static_cast<int>(sc.size());
  if (static_cast<int>(rc.size()) != e)
    throw Error(ErrorCode::IncompatibleBoundaryDynamics, "paired caps have different local degrees");
  const int nA = A.source.size(), nB = B.source.size();
  const int dA = A.degree, dB = B.degree;

  // Puncture order: A with its cap replaced by B rotated to start after its cap.
  std::vector<std::string> labels;
  std::vector<int> posA(static_cast<std::size_t>(nA + 1), 0), posB(static_cast<std::size_t>(nB + 1), 0);
  for (int k = 1; k <= nA; ++k) {
    if (k != cA) {
      labels.push_back(A.source.label(k));
      posA[static_cast<std::size_t>(k)] = static_cast<int>(labels.size());
      continue;
    }
    for (int i = 1; i < nB; ++i) {
      int b = (cB - 1 + i) % nB + 1;
      labels.push_back(B.source.label(b));
      posB[static_cast<std::size_t>(b)] = static_cast<int>(labels.size());
    }
  }
  MarkedSphere S(labels);

  std::vector<Word> iotaA(static_cast<std::size_t>(nA)), iotaB(static_cast<std::size_t>(nB));
  for (int k = 1; k <= nA; ++k)
    if (k != cA)
      iotaA[static_cast<std::size_t>(k - 1)] = {posA[static_cast<std::size_t>(k)]};
  for (int i = 1; i < nB; ++i)
    iotaA[static_cast<std::size_t>(cA - 1)].push_back(posB[static_cast<std::size_t>((cB - 1 + i) % nB + 1)]);
  for (int k = 1; k <= nB; ++k)
    if (k != cB)
      iotaB[static_cast<std::size_t>(k - 1)] = {posB[static_cast<std::size_t>(k)]};
  for (int i = 1; i < nA; ++i)
    iotaB[static_cast<std::size_t>(cB - 1)].push_back(posA[static_cast<std::size_t>((cA - 1 + i) % nA + 1)]);
  auto mapA = [&](const Word &w) { return S.normal_form(substitute(w, iotaA)); };
  auto mapB = [&](const Word &w) { return S.normal_form(substitute(w, iotaB)); };

  // Sheets: A's sheets, then B's sheets off the cap cycle.
  const int d = dA + dB - e;
  std::vector<int> bsheet(static_cast<std::size_t>(dB), -1);
  std::vector<char> alpha_A(static_cast<std::size_t>(dA), 0);
  for (int i = 0; i < e; ++i) {
    bsheet[static_cast<std::size_t>(rc[static_cast<std::size_t>(i)])] = sc[static_cast<std::size_t>(e - 1 - i)];
    alpha_A[static_cast<std::size_t>(sc[static_cast<std::size_t>(i)])] = 1;
  }
  std::vector<int> holesB;
  for (int r = 0, next = dA; r < dB; ++r)
    if (bsheet[static_cast<std::size_t>(r)] < 0) {
      bsheet[static_cast<std::size_t>(r)] = next++;
      holesB.push_back(r);
    }

  PeripheralIndex idxA(A.source), idxB(B.source);
  BranchedCoverRecursion out;
  out.degree = d;
  out.source = S;
  out.target = S;
  out.generators.assign(static_cast<std::size_t>(S.size()),
                        GeneratorRecursion{perm::identity(d), std::vector<Word>(static_cast<std::size_t>(d))});

  for (int k = 1; k <= nA; ++k) {
    if (k == cA)
      continue;
    auto &G = out.generators[static_cast<std::size_t>(posA[static_cast<std::size_t>(k)] - 1)];
    const auto &g = A.generators[static_cast<std::size_t>(k - 1)];
    for (int s = 0; s < dA; ++s) {
      G.perm[static_cast<std::size_t>(s)] = g.perm[static_cast<std::size_t>(s)];
      G.lifts[static_cast<std::size_t>(s)] = mapA(g.lifts[static_cast<std::size_t>(s)]);
    }
    for (int r : holesB) {
      const Word &L = B.generators[static_cast<std::size_t>(cB - 1)].lifts[static_cast<std::size_t>(r)];
      int q = word::cyclic_reduce(L).empty() ? 0 : idxB.lookup(L);
      if (q > 0 && hole_image_B.at(q) == k)
        G.lifts[static_cast<std::size_t>(bsheet[static_cast<std::size_t>(r)])] = mapB(L);
    }
  }
  for (int k = 1; k <= nB; ++k) {
    if (k == cB)
      continue;
    auto &G = out.generators[static_cast<std::size_t>(posB[static_cast<std::size_t>(k)] - 1)];
    const auto &g = B.generators[static_cast<std::size_t>(k - 1)];
    for (int r = 0; r < dB; ++r) {
      auto gs = static_cast<std::size_t>(bsheet[static_cast<std::size_t>(r)]);
      G.perm[gs] = bsheet[static_cast<std::size_t>(g.perm[static_cast<std::size_t>(r)])];
      G.lifts[gs] = mapB(g.lifts[static_cast<std::size_t>(r)]);
    }
    for (int s = 0; s < dA; ++s) {
      if (alpha_A[static_cast<std::size_t>(s)])
        continue;
      const Word &L = A.generators[static_cast<std::size_t>(cA - 1)].lifts[static_cast<std::size_t>(s)];
      int q = word::cyclic_reduce(L).empty() ? 0 : idxA.lookup(L);
      if (q > 0 && hole_image_A.at(q) == k)
        G.lifts[static_cast<std::size_t>(s)] = mapA(L);
    }
  }
  return out;
}

} // namespace detail

inline CombineResult combine(const Manifest &mf)
{
  const std::size_t P = mf.pieces.size();
  if (P == 0)
    throw Error(ErrorCode::InadmissiblePairing, "no pieces to combine");
  std::map<std::string, std::size_t> piece_of;
  for (std::size_t i = 0; i < P; ++i) {
    const auto &pc = mf.pieces[i];
    if (!piece_of.emplace(pc.name, i).second)
      throw Error(ErrorCode::InadmissiblePairing, "duplicate piece " + pc.name);
    require_valid(pc.map, ("piece " + pc.name).c_str());
    if (!pc.map.is_self_map() || (!pc.image.empty() && pc.image != pc.name))
      throw Error(ErrorCode::IncompatibleBoundaryDynamics,
                  "piece " + pc.name + " is not mapped to itself; only period-one pieces can be combined");
  }

  // Admissibility: caps exist, are used once, and the pairs form a tree.
  std::map<CapRef, CapRef> partner;
  std::vector<std::vector<std::pair<CapRef, CapRef>>> adj(P);
  for (const auto &gp : mf.pairing) {
    for (const auto &c : gp.caps) {
      auto it = piece_of.find(c.node);
      if (it == piece_of.end())
        throw Error(ErrorCode::InadmissiblePairing, "pairing names unknown piece " + c.node);
      if (!mf.pieces[it->second].map.source.index_of(c.puncture))
        throw Error(ErrorCode::InadmissiblePairing, "piece " + c.node + " has no puncture " + c.puncture);
      if (partner.count(c))
        throw Error(ErrorCode::InadmissiblePairing, "cap " + c.node + ":" + c.puncture + " is paired twice");
    }
    if (gp.caps[0].node == gp.caps[1].node)
      throw Error(ErrorCode::InadmissiblePairing, "caps of piece " + gp.caps[0].node + " are paired with each other");
    partner[gp.caps[0]] = gp.caps[1];
    partner[gp.caps[1]] = gp.caps[0];
    adj[piece_of[gp.caps[0].node]].push_back({gp.caps[0], gp.caps[1]});
    adj[piece_of[gp.caps[1].node]].push_back({gp.caps[1], gp.caps[0]});
  }
  if (mf.pairing.size() + 1 != P)
    throw Error(ErrorCode::InadmissiblePairing, "pairs must join the pieces into a tree");
  std::vector<std::size_t> bfs{0};
  std::vector<char> seen(P, 0);
  seen[0] = 1;
  for (std::size_t k = 0; k < bfs.size(); ++k)
    for (const auto &[mine, theirs] : adj[bfs[k]]) {
      std::size_t q = piece_of[theirs.node];
      if (!seen[q]) {
        seen[q] = 1;
        bfs.push_back(q);
      }
    }
  if (bfs.size() != P)
    throw Error(ErrorCode::InadmissiblePairing, "pairs do not connect all pieces");

  // Final labels: every non-cap puncture, unique.
  std::map<std::string, std::size_t> label_piece;
  for (std::size_t i = 0; i < P; ++i)
    for (const auto &l : mf.pieces[i].map.source.labels())
      if (!partner.count(CapRef{mf.pieces[i].name, l}) && !label_piece.emplace(l, i).second)
        throw Error(ErrorCode::InadmissiblePairing, "puncture label " + l + " is used by two pieces");
  if (label_piece.size() < 3)
    throw Error(ErrorCode::InadmissiblePairing, "glued sphere would have fewer than three punctures");

  // Pieces reachable through a cap.
  auto beyond = [&](const CapRef &c) {
    std::set<std::size_t> out;
    std::size_t from = piece_of[c.node];
    std::vector<std::size_t> stack{piece_of[partner[c].node]};
    out.insert(stack.back());
    while (!stack.empty()) {
      std::size_t v = stack.back();
      stack.pop_back();
      for (const auto &[mine, theirs] : adj[v]) {
        std::size_t w = piece_of[theirs.node];
        if (w != from && out.insert(w).second)
          stack.push_back(w);
      }
    }
    return out;
  };

  // Boundary dynamics.
  std::map<CapRef, std::string> cap_image;
  for (const auto &cm : mf.cap_map) {
    if (!cap_image.emplace(CapRef{cm.piece, cm.puncture}, cm.image).second)
      throw Error(ErrorCode::IncompatibleBoundaryDynamics, "cap map lists " + cm.piece + ":" + cm.puncture + " twice");
  }
  std::set<CapRef> used_cap_map;
  std::map<CapRef, int> cap_degree;
  for (const auto &[c, other] : partner) {
    const auto &pc = mf.pieces[piece_of[c.node]];
    Portrait pt = portrait(pc.map);
    int ci = *pc.map.source.index_of(c.puncture);
    if (pt.entry(ci).image != ci)
      throw Error(ErrorCode::IncompatibleBoundaryDynamics,
                  "cap " + c.node + ":" + c.puncture + " is not fixed; only period-one caps are supported");
    cap_degree[c] = pt.entry(ci).degree;
    const auto &g = pc.map.generators[static_cast<std::size_t>(ci - 1)];
    int non_returning = 0;
    for (const auto &cyc : perm::cycles(g.perm))
      if (cyc.size() > 1)
        ++non_returning;
    if (non_returning > 1 || (non_returning == 1 && pt.entry(ci).degree == 1))
      throw Error(ErrorCode::IncompatibleBoundaryDynamics,
                  "cap " + c.node + ":" + c.puncture + " has a critical preimage other than itself");
    auto far = beyond(c);
    for (int q = 1; q <= pc.map.source.size(); ++q) {
      if (q == ci || pt.entry(q).image != ci)
        continue;
      CapRef hole{c.node, pc.map.source.label(q)};
      auto it = cap_image.find(hole);
      if (it == cap_image.end())
        throw Error(ErrorCode::IncompatibleBoundaryDynamics,
                    "puncture " + hole.node + ":" + hole.puncture + " maps into a cap but has no cap map entry");
      auto lp = label_piece.find(it->second);
      if (lp == label_piece.end() || !far.count(lp->second))
        throw Error(ErrorCode::IncompatibleBoundaryDynamics,
                    "cap map image " + it->second + " of " + hole.puncture + " is not across cap " + c.puncture);
      used_cap_map.insert(hole);
    }
  }
  for (const auto &[hole, img] : cap_image)
    if (!used_cap_map.count(hole))
      throw Error(ErrorCode::IncompatibleBoundaryDynamics,
                  "cap map entry " + hole.node + ":" + hole.puncture + " does not map into a cap");
  for (const auto &gp : mf.pairing)
    if (cap_degree[gp.caps[0]] != cap_degree[gp.caps[1]])
      throw Error(ErrorCode::IncompatibleBoundaryDynamics,
                  "caps " + gp.caps[0].puncture + " and " + gp.caps[1].puncture + " have different local degrees");
  for (const auto &cd : mf.caps) {
    auto it = cap_degree.find(cd.cap);
    if (it == cap_degree.end())
      throw Error(ErrorCode::IncompatibleBoundaryDynamics, "cap data for unpaired puncture " + cd.cap.puncture);
    if (!cd.returning || cd.return_time != 1 || cd.degrees != std::vector<int>{it->second})
      throw Error(ErrorCode::IncompatibleBoundaryDynamics, "cap data for " + cd.cap.puncture + " disagrees with the pieces");
  }

  // Internal names for caps keep labels unique while merging.
  auto internal = [](const CapRef &c) { return "\x1f" + c.node + "\x1f" + c.puncture; };
  auto renamed = [&](std::size_t i) {
    const auto &pc = mf.pieces[i];
    std::vector<std::string> labels;
    for (const auto &l : pc.map.source.labels())
      labels.push_back(partner.count(CapRef{pc.name, l}) ? internal(CapRef{pc.name, l}) : l);
    BranchedCoverRecursion r = pc.map;
    r.source = r.target = MarkedSphere(labels);
    return r;
  };

  std::set<std::size_t> merged{bfs[0]};
  BranchedCoverRecursion acc = renamed(bfs[0]);
  // Where a final label sits from the point of view of a set of pieces.
  auto resolve = [&](const std::string &label, const std::set<std::size_t> &inside,
                     const std::vector<CapRef> &open_caps) -> std::string {
    std::size_t q = label_piece.at(label);
    if (inside.count(q))
      return label;
    for (const auto &c : open_caps)
      if (beyond(c).count(q))
        return internal(c);
    throw Error(ErrorCode::Internal, "cannot place " + label);
  };
  auto open_caps_of = [&](const std::set<std::size_t> &inside) {
    std::vector<CapRef> out;
    for (const auto &[c, other] : partner)
      if (inside.count(piece_of[c.node]) && !inside.count(piece_of[other.node]))
        out.push_back(c);
    return out;
  };

  for (std::size_t k = 1; k < bfs.size(); ++k) {
    std::size_t b = bfs[k];
    const std::string &bname = mf.pieces[b].name;
    CapRef cb, ca;
    for (const auto &[mine, theirs] : adj[b])
      if (merged.count(piece_of[theirs.node])) {
        cb = mine;
        ca = theirs;
      }
    BranchedCoverRecursion B = renamed(b);
    int cA = *acc.source.index_of(internal(ca));
    int cB = *B.source.index_of(internal(cb));
    std::set<std::size_t> bset{b};
    auto acc_open = open_caps_of(merged);
    auto b_open = open_caps_of(bset);
    Portrait pa = portrait(acc), pb = portrait(B);
    std::map<int, int> hole_A, hole_B;
    for (int q = 1; q <= acc.source.size(); ++q)
      if (q != cA && pa.entry(q).image == cA) {
        const std::string &l = acc.source.label(q);
        std::size_t owner = label_piece.at(l);
        std::string img = resolve(cap_image.at(CapRef{mf.pieces[owner].name, l}), bset, b_open);
        hole_A[q] = *B.source.index_of(img);
      }
    for (int q = 1; q <= B.source.size(); ++q)
      if (q != cB && pb.entry(q).image == cB) {
        const std::string &l = B.source.label(q);
        std::string img = resolve(cap_image.at(CapRef{bname, l}), merged, acc_open);
        hole_B[q] = *acc.source.index_of(img);
      }
    acc = detail::glue(acc, cA, B, cB, hole_A, hole_B);
    merged.insert(b);
  }
  ValidationReport rep = validate(acc);
  for (const auto &c : rep.checks)
    if (!c.pass)
      throw Error(ErrorCode::Internal, "combined recursion is invalid (" + c.name + ": " + c.witness + ")");

  CombineResult out;
  out.recursion = acc;
  const MarkedSphere &S = acc.source;
  for (std::size_t i = 0; i < P; ++i) {
    TreeNode node{mf.pieces[i].name, {}};
    for (const auto &l : mf.pieces[i].map.source.labels())
      if (!partner.count(CapRef{mf.pieces[i].name, l}))
        node.punctures.push_back(l);
    out.tree.nodes.push_back(std::move(node));
  }
  std::vector<CurveClass> classes;
  for (const auto &gp : mf.pairing) {
    auto far = beyond(gp.caps[0]);
    std::vector<char> in(static_cast<std::size_t>(S.size()), 0);
    for (int p = 1; p <= S.size(); ++p)
      in[static_cast<std::size_t>(p - 1)] = far.count(label_piece.at(S.label(p))) ? 1 : 0;
    auto start = detail::block_start(in);
    if (!start)
      throw Error(ErrorCode::Internal, "glued side is not contiguous");
    CurveClass c = normalize(S, detail::block_word(in, *start), Simplicity::DeclaredSimple);
    out.tree.edges.push_back({c.name(), gp.caps[0].node, gp.caps[1].node});
    out.cap_labels[gp.caps[0]] = cap_label(c.name(), gp.caps[1].node);
    out.cap_labels[gp.caps[1]] = cap_label(c.name(), gp.caps[0].node);
    classes.push_back(std::move(c));
  }
  out.multicurve = Multicurve::from(std::move(classes), {Certificate::AssertedByUser, 0});
  return out;
}

} // namespace tkit
