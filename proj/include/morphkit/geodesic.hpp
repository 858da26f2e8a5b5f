#pragma once

#include <limits>
#include <map>
#include <queue>

#include "morphkit/mesh.hpp"

namespace morphkit {

constexpr double kUnreachable = std::numeric_limits<double>::infinity();

enum class EdgeOrigin : uint8_t { adjacency = 1, knn = 2, both = 3 };

/// Union of the face-adjacency graph (vertex pairs sharing a face) and the
/// symmetric k-nearest-neighbor graph. Shortest paths on it approximate
/// surface geodesics while KNN shortcuts keep fragmented meshes connected.
struct HybridGraph {
    struct Edge {
        int u, v;        // u < v
        double w;        // Euclidean length
        EdgeOrigin tag;
    };
    int n = 0;
    std::vector<Edge> edges;

    // CSR neighbor lists, filled by finalize()
    std::vector<int> adj_offset;
    std::vector<std::pair<int, double>> adj;

    void finalize() {
        adj_offset.assign(size_t(n) + 1, 0);
        for (const auto& e : edges) {
            ++adj_offset[size_t(e.u) + 1];
            ++adj_offset[size_t(e.v) + 1];
        }
        for (int i = 0; i < n; ++i) adj_offset[size_t(i) + 1] += adj_offset[size_t(i)];
        adj.resize(edges.size() * 2);
        std::vector<int> cursor(adj_offset.begin(), adj_offset.end() - 1);
        for (const auto& e : edges) {
            adj[size_t(cursor[size_t(e.u)]++)] = {e.v, e.w};
            adj[size_t(cursor[size_t(e.v)]++)] = {e.u, e.w};
        }
    }
};

/// Builds the hybrid graph: every face-sharing vertex pair plus each vertex's
/// k nearest Euclidean neighbors (symmetrized). Duplicates collapse to one
/// edge tagged `both`. KNN ties break toward the lower vertex index.
inline HybridGraph build_hybrid_graph(const Mesh& mesh, int k) {
    if (k < 1) throw numeric_error(cat("build_hybrid_graph: k must be >= 1, got ", k));
    const int n = int(mesh.vertices.size());
    std::map<std::pair<int, int>, EdgeOrigin> tagged;

    for (const auto& t : mesh.faces)
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b) {
                int u = std::min(t[a], t[b]), v = std::max(t[a], t[b]);
                tagged[{u, v}] = EdgeOrigin::adjacency;
            }

    const int kk = std::min(k, n - 1);
    std::vector<std::vector<int>> knn(size_t(n));
    parallel_for(size_t(n), [&](size_t i) {
        std::vector<std::pair<double, int>> cand;
        cand.reserve(size_t(n) - 1);
        for (int j = 0; j < n; ++j)
            if (j != int(i)) cand.push_back({norm2(mesh.vertices[i] - mesh.vertices[j]), j});
        std::partial_sort(cand.begin(), cand.begin() + kk, cand.end());
        knn[i].reserve(size_t(kk));
        for (int t = 0; t < kk; ++t) knn[i].push_back(cand[size_t(t)].second);
    });
    for (int i = 0; i < n; ++i)
        for (int j : knn[size_t(i)]) {
            int u = std::min(i, j), v = std::max(i, j);
            auto it = tagged.find({u, v});
            if (it == tagged.end())
                tagged[{u, v}] = EdgeOrigin::knn;
            else if (it->second == EdgeOrigin::adjacency)
                it->second = EdgeOrigin::both;
        }

    HybridGraph g;
    g.n = n;
    g.edges.reserve(tagged.size());
    for (const auto& [uv, tag] : tagged) {
        double w = norm(mesh.vertices[size_t(uv.first)] - mesh.vertices[size_t(uv.second)]);
        if (!(w > 0) && uv.first != uv.second)
            warn(cat("hybrid graph: coincident vertices ", uv.first, " and ", uv.second));
        g.edges.push_back({uv.first, uv.second, w, tag});
    }
    g.finalize();
    return g;
}

/// Dense pairwise geodesic distances over a sampled vertex subset.
struct GeodesicTable {
    std::vector<int> sample_ids;          // ascending
    std::vector<double> dist;             // S x S row-major
    int size() const { return int(sample_ids.size()); }
    double at(int a, int b) const { return dist[size_t(a) * sample_ids.size() + size_t(b)]; }
};

/// One Dijkstra pass over the full hybrid graph from `source`, distances to
/// every vertex. Ties settle lowest-index-first, which keeps runs bit-stable.
inline std::vector<double> dijkstra(const HybridGraph& g, int source) {
    std::vector<double> dist(size_t(g.n), kUnreachable);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    dist[size_t(source)] = 0.0;
    heap.push({0.0, source});
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[size_t(u)]) continue;
        for (int e = g.adj_offset[size_t(u)]; e < g.adj_offset[size_t(u) + 1]; ++e) {
            auto [v, w] = g.adj[size_t(e)];
            double nd = d + w;
            if (nd < dist[size_t(v)]) {
                dist[size_t(v)] = nd;
                heap.push({nd, v});
            }
        }
    }
    return dist;
}

/// Shortest weighted paths between all sampled vertex pairs, one Dijkstra per
/// sampled source (rows are independent, so the loop may run in parallel).
/// Unreachable pairs keep +inf and raise a single connectivity warning.
inline GeodesicTable geodesic_table(const HybridGraph& g, const std::vector<int>& sample_ids) {
    if (sample_ids.empty()) throw numeric_error("geodesic_table: empty sample set");
    for (size_t i = 0; i < sample_ids.size(); ++i) {
        if (sample_ids[i] < 0 || sample_ids[i] >= g.n)
            throw numeric_error(cat("geodesic_table: sample id ", sample_ids[i], " out of range"));
        for (size_t j = i + 1; j < sample_ids.size(); ++j)
            if (sample_ids[i] == sample_ids[j])
                throw numeric_error(cat("geodesic_table: duplicate sample id ", sample_ids[i]));
    }
    const size_t S = sample_ids.size();
    GeodesicTable table;
    table.sample_ids = sample_ids;
    table.dist.assign(S * S, kUnreachable);
    parallel_for(S, [&](size_t r) {
        auto dist = dijkstra(g, sample_ids[r]);
        for (size_t c = 0; c < S; ++c) table.dist[r * S + c] = dist[size_t(sample_ids[c])];
    });
    bool disconnected = false;
    for (double d : table.dist)
        if (!(d < kUnreachable)) disconnected = true;
    if (disconnected) warn("geodesic_table: graph is disconnected, some distances are +inf");
    return table;
}

/// Greedy max-min Euclidean subsampling seeded at the lowest vertex index.
/// Ties pick the lowest index. Output sorted ascending.
inline std::vector<int> farthest_point_sample(const Mesh& mesh, int count) {
    const int n = int(mesh.vertices.size());
    if (count > n) throw numeric_error(cat("farthest_point_sample: count ", count, " exceeds vertex count ", n));
    if (count <= 0) throw numeric_error("farthest_point_sample: count must be positive");
    std::vector<int> chosen{0};
    std::vector<double> best(size_t(n), std::numeric_limits<double>::max());
    std::vector<char> used(size_t(n), 0);
    used[0] = 1;
    int last = 0;
    while (int(chosen.size()) < count) {
        int next = -1;
        double far = -1.0;
        for (int i = 0; i < n; ++i) {
            best[size_t(i)] = std::min(best[size_t(i)], norm2(mesh.vertices[size_t(i)] - mesh.vertices[size_t(last)]));
            if (!used[size_t(i)] && best[size_t(i)] > far) {
                far = best[size_t(i)];
                next = i;
            }
        }
        chosen.push_back(next);
        used[size_t(next)] = 1;
        last = next;
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

}  // namespace morphkit
