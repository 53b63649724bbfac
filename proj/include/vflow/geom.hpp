#pragma once

// Discrete curves (polylines in R^2/R^3) and triangle surfaces in R^3, with the
// per-vertex quantities the flow and the functionals consume: lumped measure,
// mean curvature vector, tangent/normal split of a constant field and |A|^2.
//
// Ambient vectors are always stored as Eigen::Vector3d. Planar curves keep
// z = 0, which every operation below preserves exactly.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vflow/errors.hpp"

namespace vflow {

using Vec = Eigen::Vector3d;
using Face = std::array<int, 3>;
using Edge = std::array<int, 2>;

enum class Kind { Polyline, TriMesh };

inline const char* to_string(Kind k) { return k == Kind::Polyline ? "polyline" : "trimesh"; }

/// Connectivity of a discrete manifold. Immutable once built and shared between
/// all snapshots of a trajectory, so every snapshot has the same topology by
/// construction.
class Topology {
public:
    static std::shared_ptr<const Topology> polyline(int num_vertices, int ambient_dim, bool closed) {
        if (ambient_dim != 2 && ambient_dim != 3) {
            throw InvalidInput("polyline ambient dimension must be 2 or 3");
        }
        const int min_vertices = closed ? 3 : 2;
        if (num_vertices < min_vertices) {
            throw InvalidInput("polyline needs at least " + std::to_string(min_vertices) + " vertices");
        }
        auto t = std::shared_ptr<Topology>(new Topology());
        t->kind_ = Kind::Polyline;
        t->ambient_dim_ = ambient_dim;
        t->closed_ = closed;
        t->num_vertices_ = num_vertices;
        const int num_edges = closed ? num_vertices : num_vertices - 1;
        t->edges_.reserve(num_edges);
        for (int i = 0; i < num_edges; ++i) {
            t->edges_.push_back({i, (i + 1) % num_vertices});
        }
        t->boundary_.assign(num_vertices, 0);
        if (!closed) {
            t->boundary_.front() = 1;
            t->boundary_.back() = 1;
        }
        return t;
    }

    /// Validates index ranges and consistent orientation: every directed edge
    /// occurs at most once, so an interior edge is shared by exactly two faces
    /// traversing it in opposite directions.
    static std::shared_ptr<const Topology> trimesh(int num_vertices, std::vector<Face> faces) {
        if (faces.empty()) throw InvalidInput("triangle mesh has no faces");
        auto t = std::shared_ptr<Topology>(new Topology());
        t->kind_ = Kind::TriMesh;
        t->ambient_dim_ = 3;
        t->num_vertices_ = num_vertices;

        std::vector<char> referenced(num_vertices, 0);
        std::map<std::pair<int, int>, int> directed;
        for (std::size_t f = 0; f < faces.size(); ++f) {
            const Face& face = faces[f];
            for (int c = 0; c < 3; ++c) {
                if (face[c] < 0 || face[c] >= num_vertices) {
                    throw GeometryError("face references a vertex out of range", static_cast<long>(f));
                }
                referenced[face[c]] = 1;
            }
            if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
                throw GeometryError("face repeats a vertex", static_cast<long>(f));
            }
            for (int c = 0; c < 3; ++c) {
                const auto key = std::make_pair(face[c], face[(c + 1) % 3]);
                if (!directed.emplace(key, static_cast<int>(f)).second) {
                    throw GeometryError("inconsistent face orientation or non-manifold edge",
                                        static_cast<long>(f));
                }
            }
        }
        for (int v = 0; v < num_vertices; ++v) {
            if (!referenced[v]) throw GeometryError("vertex is not used by any face", v);
        }

        t->boundary_.assign(num_vertices, 0);
        for (const auto& [key, f] : directed) {
            const auto [a, b] = key;
            const bool has_twin = directed.count({b, a}) != 0;
            if (!has_twin) {
                t->boundary_[a] = 1;
                t->boundary_[b] = 1;
                t->edges_.push_back({a, b});
            } else if (a < b) {
                t->edges_.push_back({a, b});
            }
        }
        t->closed_ = std::none_of(t->boundary_.begin(), t->boundary_.end(), [](char c) { return c != 0; });
        t->faces_ = std::move(faces);
        return t;
    }

    Kind kind() const noexcept { return kind_; }
    int ambient_dim() const noexcept { return ambient_dim_; }
    int intrinsic_dim() const noexcept { return kind_ == Kind::Polyline ? 1 : 2; }
    bool closed() const noexcept { return closed_; }
    int num_vertices() const noexcept { return num_vertices_; }
    const std::vector<Face>& faces() const noexcept { return faces_; }
    /// Undirected edges. For polylines edge i joins vertex i to vertex i+1 (mod n).
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    bool on_boundary(int v) const { return boundary_[v] != 0; }

    /// Graph distance (in edges) from every vertex to the boundary; closed
    /// manifolds report num_vertices for every vertex.
    std::vector<int> boundary_distance() const {
        std::vector<int> dist(num_vertices_, num_vertices_);
        std::vector<std::vector<int>> adj(num_vertices_);
        for (const auto& e : edges_) {
            adj[e[0]].push_back(e[1]);
            adj[e[1]].push_back(e[0]);
        }
        std::queue<int> q;
        for (int v = 0; v < num_vertices_; ++v) {
            if (boundary_[v]) {
                dist[v] = 0;
                q.push(v);
            }
        }
        while (!q.empty()) {
            const int v = q.front();
            q.pop();
            for (int w : adj[v]) {
                if (dist[w] > dist[v] + 1) {
                    dist[w] = dist[v] + 1;
                    q.push(w);
                }
            }
        }
        return dist;
    }

private:
    Topology() = default;

    Kind kind_ = Kind::Polyline;
    int ambient_dim_ = 2;
    bool closed_ = false;
    int num_vertices_ = 0;
    std::vector<Face> faces_;
    std::vector<Edge> edges_;
    std::vector<char> boundary_;
};

using TopologyPtr = std::shared_ptr<const Topology>;

/// Vertex positions over a shared connectivity.
struct Manifold {
    TopologyPtr topology;
    std::vector<Vec> points;

    const Topology& topo() const { return *topology; }
    Kind kind() const { return topology->kind(); }
    int size() const { return static_cast<int>(points.size()); }
    bool closed() const { return topology->closed(); }
    int intrinsic_dim() const { return topology->intrinsic_dim(); }
    int ambient_dim() const { return topology->ambient_dim(); }
};

inline Manifold make_polyline(std::vector<Vec> points, int ambient_dim, bool closed) {
    auto topo = Topology::polyline(static_cast<int>(points.size()), ambient_dim, closed);
    if (ambient_dim == 2) {
        for (auto& p : points) p.z() = 0.0;
    }
    return Manifold{std::move(topo), std::move(points)};
}

inline Manifold make_trimesh(std::vector<Vec> points, std::vector<Face> faces) {
    auto topo = Topology::trimesh(static_cast<int>(points.size()), std::move(faces));
    return Manifold{std::move(topo), std::move(points)};
}

/// Same connectivity, new positions.
inline Manifold with_points(const Manifold& m, std::vector<Vec> points) {
    if (points.size() != m.points.size()) throw InvalidInput("vertex count mismatch");
    return Manifold{m.topology, std::move(points)};
}

namespace detail {

inline void check_finite(const Manifold& m) {
    for (int i = 0; i < m.size(); ++i) {
        if (!m.points[i].allFinite()) throw GeometryError("non-finite vertex coordinate", i);
    }
}

/// Twice the area vector of face f (cross product of two edges).
inline Vec face_cross(const Manifold& m, const Face& f) {
    return (m.points[f[1]] - m.points[f[0]]).cross(m.points[f[2]] - m.points[f[0]]);
}

} // namespace detail

/// Lumped measure: half the incident edge lengths for polylines, one third of
/// the incident face areas for triangle meshes. Throws GeometryError naming the
/// first degenerate edge or face.
inline std::vector<double> compute_measure(const Manifold& m) {
    detail::check_finite(m);
    std::vector<double> w(m.size(), 0.0);
    if (m.kind() == Kind::Polyline) {
        const auto& edges = m.topo().edges();
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const double len = (m.points[edges[e][1]] - m.points[edges[e][0]]).norm();
            if (!(len > 0.0)) throw GeometryError("degenerate edge", static_cast<long>(e));
            w[edges[e][0]] += 0.5 * len;
            w[edges[e][1]] += 0.5 * len;
        }
    } else {
        const auto& faces = m.topo().faces();
        for (std::size_t f = 0; f < faces.size(); ++f) {
            const double area = 0.5 * detail::face_cross(m, faces[f]).norm();
            if (!(area > 0.0)) throw GeometryError("degenerate face", static_cast<long>(f));
            for (int c = 0; c < 3; ++c) w[faces[f][c]] += area / 3.0;
        }
    }
    return w;
}

/// Total length or area, summed edge by edge (face by face).
inline double total_measure(const Manifold& m) {
    double total = 0.0;
    if (m.kind() == Kind::Polyline) {
        for (const auto& e : m.topo().edges()) total += (m.points[e[1]] - m.points[e[0]]).norm();
    } else {
        for (const auto& f : m.topo().faces()) total += 0.5 * detail::face_cross(m, f).norm();
    }
    return total;
}

inline double min_edge_length(const Manifold& m) {
    double h = std::numeric_limits<double>::infinity();
    for (const auto& e : m.topo().edges()) h = std::min(h, (m.points[e[1]] - m.points[e[0]]).norm());
    return h;
}

inline double max_edge_length(const Manifold& m) {
    double h = 0.0;
    for (const auto& e : m.topo().edges()) h = std::max(h, (m.points[e[1]] - m.points[e[0]]).norm());
    return h;
}

/// A manifold at time t with its lumped measure dmu_t.
struct FlowState {
    Manifold manifold;
    double t = 0.0;
    std::vector<double> measure;

    int size() const { return manifold.size(); }
    const Vec& x(int i) const { return manifold.points[i]; }
};

inline FlowState make_state(Manifold m, double t = 0.0) {
    auto w = compute_measure(m);
    return FlowState{std::move(m), t, std::move(w)};
}

/// Mixed Voronoi area per vertex: circumcentric cells for non-obtuse
/// triangles, half/quarter splits for obtuse ones. Normalizes the cotangent
/// Laplacian; the integration measure stays the barycentric one.
inline std::vector<double> mixed_voronoi_area(const Manifold& m) {
    std::vector<double> A(m.size(), 0.0);
    const auto& faces = m.topo().faces();
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const Vec p[3] = {m.points[faces[f][0]], m.points[faces[f][1]], m.points[faces[f][2]]};
        const double dbl_area = (p[1] - p[0]).cross(p[2] - p[0]).norm();
        if (!(dbl_area > 0.0)) throw GeometryError("degenerate face", static_cast<long>(f));
        int obtuse = -1;
        for (int c = 0; c < 3; ++c) {
            if ((p[(c + 1) % 3] - p[c]).dot(p[(c + 2) % 3] - p[c]) < 0.0) obtuse = c;
        }
        if (obtuse >= 0) {
            for (int c = 0; c < 3; ++c) A[faces[f][c]] += (c == obtuse ? 0.25 : 0.125) * dbl_area;
            continue;
        }
        for (int c = 0; c < 3; ++c) {
            const int i = (c + 1) % 3, j = (c + 2) % 3;
            const double cot_c = (p[i] - p[c]).dot(p[j] - p[c]) / dbl_area;
            const double part = (p[j] - p[i]).squaredNorm() * cot_c / 8.0;
            A[faces[f][i]] += part;
            A[faces[f][j]] += part;
        }
    }
    return A;
}

/// Mean curvature vector per vertex. Polylines use the second difference of
/// the arclength parametrization; meshes use the cotangent Laplacian of the
/// position divided by the mixed Voronoi area. Boundary vertices report zero.
/// Convex closed shapes get inward-pointing H.
inline std::vector<Vec> mean_curvature(const FlowState& s) {
    const Manifold& m = s.manifold;
    const int n = m.size();
    std::vector<Vec> H(n, Vec::Zero());
    if (m.kind() == Kind::Polyline) {
        const auto& edges = m.topo().edges();
        const int ne = static_cast<int>(edges.size());
        std::vector<Vec> u(ne);
        std::vector<double> len(ne);
        for (int e = 0; e < ne; ++e) {
            const Vec d = m.points[edges[e][1]] - m.points[edges[e][0]];
            len[e] = d.norm();
            if (!(len[e] > 0.0)) throw GeometryError("degenerate edge", e);
            u[e] = d / len[e];
        }
        for (int i = 0; i < n; ++i) {
            if (m.topo().on_boundary(i)) continue;
            const int next = i;
            const int prev = (i - 1 + ne) % ne;
            H[i] = 2.0 * (u[next] - u[prev]) / (len[next] + len[prev]);
        }
        return H;
    }

    std::vector<Vec> lap(n, Vec::Zero());
    const auto area = mixed_voronoi_area(m);
    const auto& faces = m.topo().faces();
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const Vec cr = detail::face_cross(m, faces[f]);
        const double dbl_area = cr.norm();
        if (!(dbl_area > 0.0)) throw GeometryError("degenerate face", static_cast<long>(f));
        for (int c = 0; c < 3; ++c) {
            const int k = faces[f][c];
            const int i = faces[f][(c + 1) % 3];
            const int j = faces[f][(c + 2) % 3];
            // cot of the angle at k, opposite edge ij
            const double cot_k = (m.points[i] - m.points[k]).dot(m.points[j] - m.points[k]) / dbl_area;
            const Vec d = m.points[j] - m.points[i];
            lap[i] += 0.5 * cot_k * d;
            lap[j] -= 0.5 * cot_k * d;
        }
    }
    for (int i = 0; i < n; ++i) {
        if (m.topo().on_boundary(i)) continue;
        H[i] = lap[i] / area[i];
    }
    return H;
}

/// Unit tangent (polylines, normalized sum of incident unit edges) or unit
/// normal (meshes, normalized area-weighted face normal sum) at every vertex.
inline std::vector<Vec> vertex_frames(const FlowState& s) {
    const Manifold& m = s.manifold;
    const int n = m.size();
    std::vector<Vec> frame(n, Vec::Zero());
    if (m.kind() == Kind::Polyline) {
        const auto& edges = m.topo().edges();
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const Vec d = m.points[edges[e][1]] - m.points[edges[e][0]];
            const double len = d.norm();
            if (!(len > 0.0)) throw GeometryError("degenerate edge", static_cast<long>(e));
            frame[edges[e][0]] += d / len;
            frame[edges[e][1]] += d / len;
        }
    } else {
        for (const auto& f : m.topo().faces()) {
            const Vec cr = detail::face_cross(m, f);
            for (int c = 0; c < 3; ++c) frame[f[c]] += cr;
        }
    }
    for (int i = 0; i < n; ++i) {
        const double len = frame[i].norm();
        // fold-back: incident directions cancel
        if (!(len > 1e-12)) throw GeometryError("vanishing vertex tangent/normal", i);
        frame[i] /= len;
    }
    return frame;
}

struct Projection {
    std::vector<Vec> tangential; // V^T
    std::vector<Vec> normal;     // V^perp
};

/// Split of a constant field V into tangential and normal parts per vertex.
/// The component computed directly is the one along the vertex frame; the
/// other is the remainder, so tangential + normal == V up to one rounding.
inline Projection project_field(const FlowState& s, const Vec& V) {
    const auto frame = vertex_frames(s);
    const int n = s.size();
    Projection p{std::vector<Vec>(n), std::vector<Vec>(n)};
    const bool curve = s.manifold.kind() == Kind::Polyline;
    for (int i = 0; i < n; ++i) {
        const Vec along = V.dot(frame[i]) * frame[i];
        if (curve) {
            p.tangential[i] = along;
            p.normal[i] = V - along;
        } else {
            p.normal[i] = along;
            p.tangential[i] = V - along;
        }
    }
    return p;
}

/// |A|^2 per vertex; for a curve this is |kappa|^2 = |H|^2. Meshes are not supported.
inline std::vector<double> second_fundamental_norm(const FlowState& s) {
    if (s.manifold.kind() != Kind::Polyline) {
        throw InvalidInput("|A|^2 is only available for polylines");
    }
    const auto H = mean_curvature(s);
    std::vector<double> a(H.size());
    for (std::size_t i = 0; i < H.size(); ++i) a[i] = H[i].squaredNorm();
    return a;
}

inline double max_second_fundamental_norm(const FlowState& s) {
    const auto a = second_fundamental_norm(s);
    return *std::max_element(a.begin(), a.end());
}

/// Everything per vertex at once.
struct VertexFields {
    std::vector<Vec> H;
    std::vector<Vec> v_tan;
    std::vector<Vec> v_norm;
    std::optional<std::vector<double>> a_sq; // curves only
};

inline VertexFields vertex_fields(const FlowState& s, const Vec& V) {
    VertexFields f;
    f.H = mean_curvature(s);
    auto p = project_field(s, V);
    f.v_tan = std::move(p.tangential);
    f.v_norm = std::move(p.normal);
    if (s.manifold.kind() == Kind::Polyline) {
        std::vector<double> a(f.H.size());
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = f.H[i].squaredNorm();
        f.a_sq = std::move(a);
    }
    return f;
}

/// Fixed material set of vertex indices (the discrete relatively compact domain).
struct Subdomain {
    std::vector<int> indices;

    static Subdomain all(const Manifold& m) {
        Subdomain d;
        d.indices.resize(m.size());
        for (int i = 0; i < m.size(); ++i) d.indices[i] = i;
        return d;
    }

    /// Drops every vertex closer than `collar` edges to the boundary. On a
    /// closed manifold this is the whole vertex set.
    static Subdomain interior(const Manifold& m, int collar = 3) {
        Subdomain d;
        const auto dist = m.topo().boundary_distance();
        for (int i = 0; i < m.size(); ++i) {
            if (dist[i] >= collar) d.indices.push_back(i);
        }
        if (d.indices.empty()) throw InvalidInput("interior subdomain is empty");
        return d;
    }

    static Subdomain of(const Manifold& m, std::vector<int> indices) {
        if (indices.empty()) throw InvalidInput("subdomain is empty");
        std::sort(indices.begin(), indices.end());
        indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
        for (int i : indices) {
            if (i < 0 || i >= m.size()) throw InvalidInput("subdomain index " + std::to_string(i) + " out of range");
        }
        return Subdomain{std::move(indices)};
    }

    void validate(const Manifold& m) const {
        if (indices.empty()) throw InvalidInput("subdomain is empty");
        for (int i : indices) {
            if (i < 0 || i >= m.size()) throw InvalidInput("subdomain index " + std::to_string(i) + " out of range");
        }
    }
};

} // namespace vflow
