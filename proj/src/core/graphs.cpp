#include "graphs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace percolab::graphs {

const char* family_name(Family f) noexcept {
  switch (f) {
    case Family::Torus: return "torus";
    case Family::Hamming: return "hamming";
    case Family::Complete: return "complete";
    case Family::Explicit: return "explicit";
  }
  return "unknown";
}

namespace detail {

std::pair<Vertex, Vertex> complete_endpoints(std::uint64_t id) {
  auto hi = static_cast<std::uint64_t>((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(id))) / 2.0);
  while (hi * (hi - 1) / 2 > id) --hi;
  while ((hi + 1) * hi / 2 <= id) ++hi;
  return {static_cast<Vertex>(id - hi * (hi - 1) / 2), static_cast<Vertex>(hi)};
}

}  // namespace detail

Graph Graph::torus(std::uint32_t side, std::uint32_t dim) {
  require(side >= 2, "torus side must be >= 2");
  require(dim >= 1, "torus dimension must be >= 1");
  detail::TorusShape t{side, dim, {}};
  std::uint64_t n = 1;
  for (std::uint32_t k = 0; k < dim; ++k) {
    t.strides.push_back(static_cast<std::uint32_t>(n));
    n *= side;
    require(n <= std::numeric_limits<std::uint32_t>::max(), "torus has too many vertices");
  }
  // With side 2 the +1 and -1 neighbors coincide; the duplicate is dropped.
  const std::uint32_t d = side == 2 ? dim : 2 * dim;
  return Graph(Family::Torus, std::move(t), static_cast<std::uint32_t>(n), d, n * d / 2, true);
}

Graph Graph::hamming(std::uint32_t dim) {
  require(dim >= 1 && dim <= 31, "hamming dimension must be in [1, 31]");
  const std::uint64_t n = std::uint64_t{1} << dim;
  return Graph(Family::Hamming, detail::HammingShape{dim}, static_cast<std::uint32_t>(n), dim, n * dim / 2, true);
}

Graph Graph::complete(std::uint32_t n) {
  require(n >= 1, "complete graph needs at least one vertex");
  return Graph(Family::Complete, detail::CompleteShape{n}, n, n - 1, std::uint64_t{n} * (n - 1) / 2, true);
}

Graph Graph::from_edges(std::uint32_t n, std::vector<std::pair<Vertex, Vertex>> edges) {
  require(n >= 1, "graph needs at least one vertex");
  for (auto& [u, v] : edges) {
    require(u < n && v < n, "edge endpoint out of range");
    require(u != v, "self-loop at vertex " + std::to_string(u));
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  for (std::size_t i = 1; i < edges.size(); ++i) {
    require(edges[i] != edges[i - 1],
            "duplicate edge " + std::to_string(edges[i].first) + " " + std::to_string(edges[i].second));
  }

  auto x = std::make_shared<detail::ExplicitShape>();
  x->n = n;
  x->offsets.assign(std::size_t{n} + 1, 0);
  for (const auto& [u, v] : edges) {
    ++x->offsets[u + 1];
    ++x->offsets[v + 1];
  }
  for (std::uint32_t v = 0; v < n; ++v) x->offsets[v + 1] += x->offsets[v];
  x->targets.resize(2 * edges.size());
  x->edge_ids.resize(2 * edges.size());
  std::vector<std::uint64_t> fill(x->offsets.begin(), x->offsets.end() - 1);
  for (std::uint64_t id = 0; id < edges.size(); ++id) {
    const auto [u, v] = edges[id];
    x->targets[fill[u]] = v;
    x->edge_ids[fill[u]++] = id;
    x->targets[fill[v]] = u;
    x->edge_ids[fill[v]++] = id;
  }

  std::uint32_t dmin = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t dmax = 0;
  for (std::uint32_t v = 0; v < n; ++v) {
    const auto dv = static_cast<std::uint32_t>(x->offsets[v + 1] - x->offsets[v]);
    dmin = std::min(dmin, dv);
    dmax = std::max(dmax, dv);
  }
  const std::uint64_t m = edges.size();
  x->edges = std::move(edges);
  return Graph(Family::Explicit, std::shared_ptr<const detail::ExplicitShape>(std::move(x)), n, dmax, m,
               dmin == dmax);
}

Graph Graph::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next_line = [&](std::string& out) {
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        out = line;
        return true;
      }
    }
    return false;
  };

  std::string header;
  require(next_line(header), "edge list is empty");
  long long n = -1;
  long long m = -1;
  {
    std::istringstream h(header);
    std::string extra;
    require(static_cast<bool>(h >> n >> m) && !(h >> extra), "edge list header must be \"n m\"");
  }
  require(n >= 1 && n <= std::numeric_limits<std::uint32_t>::max(), "vertex count out of range");
  require(m >= 0, "edge count must be nonnegative");

  std::vector<std::pair<Vertex, Vertex>> edges;
  edges.reserve(static_cast<std::size_t>(m));
  std::string row;
  for (long long i = 0; i < m; ++i) {
    require(next_line(row), "edge list ends after " + std::to_string(i) + " of " + std::to_string(m) + " edges");
    std::istringstream r(row);
    long long u = -1;
    long long v = -1;
    std::string extra;
    require(static_cast<bool>(r >> u >> v) && !(r >> extra), "malformed edge line: \"" + row + "\"");
    require(u != v, "self-loop at vertex " + std::to_string(u));
    require(0 <= u && u < v && v < n, "edge line must satisfy 0 <= u < v < n: \"" + row + "\"");
    edges.emplace_back(static_cast<Vertex>(u), static_cast<Vertex>(v));
  }
  require(!next_line(row), "trailing content after " + std::to_string(m) + " edges");
  return from_edges(static_cast<std::uint32_t>(n), std::move(edges));
}

Graph Graph::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open graph file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string Graph::describe() const {
  switch (shape_.index()) {
    case 0: {
      const auto& t = std::get<detail::TorusShape>(shape_);
      return "torus(" + std::to_string(t.side) + "," + std::to_string(t.dim) + ")";
    }
    case 1: return "hamming(" + std::to_string(std::get<detail::HammingShape>(shape_).dim) + ")";
    case 2: return "complete(" + std::to_string(n_) + ")";
    default: return "explicit(" + std::to_string(n_) + "," + std::to_string(m_) + ")";
  }
}

std::uint32_t Graph::degree(Vertex v) const {
  check_vertex(v);
  if (shape_.index() != 3) return d_;
  const auto& x = *std::get<3>(shape_);
  return static_cast<std::uint32_t>(x.offsets[v + 1] - x.offsets[v]);
}

std::vector<Vertex> Graph::neighbors(Vertex v) const {
  check_vertex(v);
  std::vector<Vertex> out;
  out.reserve(degree(v));
  for_each_incident(v, [&](Vertex w, EdgeId) { out.push_back(w); });
  return out;
}

EdgeId Graph::edge_id(Vertex u, Vertex v) const {
  check_vertex(u);
  check_vertex(v);
  const auto fail = [&]() -> EdgeId {
    throw UsageError("vertices " + std::to_string(u) + " and " + std::to_string(v) + " are not adjacent");
  };
  if (u == v) return fail();
  switch (shape_.index()) {
    case 0: {
      const auto& t = std::get<detail::TorusShape>(shape_);
      if (t.side == 2) {
        const Vertex diff = u ^ v;
        if ((diff & (diff - 1)) != 0) return fail();
        const auto k = static_cast<std::uint32_t>(__builtin_ctz(diff));
        return EdgeId{detail::hamming_edge_id(t.dim, std::min(u, v), k)};
      }
      std::optional<EdgeId> found;
      for_each_incident(u, [&](Vertex w, EdgeId e) {
        if (w == v) found = e;
      });
      return found ? *found : fail();
    }
    case 1: {
      const Vertex diff = u ^ v;
      if ((diff & (diff - 1)) != 0) return fail();
      const auto k = static_cast<std::uint32_t>(__builtin_ctz(diff));
      return EdgeId{detail::hamming_edge_id(std::get<detail::HammingShape>(shape_).dim, std::min(u, v), k)};
    }
    case 2: return EdgeId{detail::complete_edge_id(u, v)};
    default: {
      const auto& x = *std::get<3>(shape_);
      const auto first = x.targets.begin() + static_cast<std::ptrdiff_t>(x.offsets[u]);
      const auto last = x.targets.begin() + static_cast<std::ptrdiff_t>(x.offsets[u + 1]);
      const auto it = std::lower_bound(first, last, v);
      if (it == last || *it != v) return fail();
      return EdgeId{x.edge_ids[static_cast<std::size_t>(it - x.targets.begin())]};
    }
  }
}

std::pair<Vertex, Vertex> Graph::endpoints(EdgeId e) const {
  require(e.value < m_, "edge id " + std::to_string(e.value) + " out of range");
  const auto hamming = [](std::uint32_t dim, std::uint64_t id) -> std::pair<Vertex, Vertex> {
    const auto k = static_cast<std::uint32_t>(id >> (dim - 1));
    const auto rest = static_cast<Vertex>(id & ((std::uint64_t{1} << (dim - 1)) - 1));
    const Vertex low = rest & ((Vertex{1} << k) - 1);
    const Vertex high = (rest >> k) << (k + 1);
    const Vertex u = high | low;
    return {u, u | (Vertex{1} << k)};
  };
  switch (shape_.index()) {
    case 0: {
      const auto& t = std::get<detail::TorusShape>(shape_);
      if (t.side == 2) return hamming(t.dim, e.value);
      const auto v = static_cast<Vertex>(e.value / t.dim);
      const auto k = static_cast<std::uint32_t>(e.value % t.dim);
      const std::uint32_t stride = t.strides[k];
      const std::uint32_t c = (v / stride) % t.side;
      const Vertex w = c + 1 == t.side ? v - (t.side - 1) * stride : v + stride;
      return {std::min(v, w), std::max(v, w)};
    }
    case 1: return hamming(std::get<detail::HammingShape>(shape_).dim, e.value);
    case 2: return detail::complete_endpoints(e.value);
    default: return std::get<3>(shape_)->edges[e.value];
  }
}

std::vector<Vertex> Graph::ball(Vertex v, std::uint32_t r) const {
  check_vertex(v);
  std::vector<Vertex> order{v};
  std::unordered_map<Vertex, std::uint32_t> dist{{v, 0}};
  for (std::size_t head = 0; head < order.size(); ++head) {
    const Vertex x = order[head];
    const std::uint32_t dx = dist[x];
    if (dx == r) continue;
    for_each_incident(x, [&](Vertex w, EdgeId) {
      if (dist.emplace(w, dx + 1).second) order.push_back(w);
    });
  }
  return order;
}

}  // namespace percolab::graphs
