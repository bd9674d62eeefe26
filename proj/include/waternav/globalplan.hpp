#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "waternav/geom.hpp"

namespace waternav {

using NodeId = std::int64_t;

struct WaterwayNode {
    NodeId id = 0;
    double lat = 0.0;
    double lon = 0.0;
};

struct WaterwayWay {
    NodeId id = 0;
    std::string waterway;  // "river" or "canal"
    std::vector<NodeId> node_ids;
};

struct WaterwayData {
    std::vector<WaterwayNode> nodes;
    std::vector<WaterwayWay> ways;
};

struct BoundingBox {
    double south = 0.0;
    double west = 0.0;
    double north = 0.0;
    double east = 0.0;
};

// Overpass query for the waterway centerline network inside a bbox.
inline std::string overpass_query(const BoundingBox& b) {
    std::ostringstream q;
    q << "[out:json];("
      << "way[waterway=river](" << b.south << "," << b.west << "," << b.north << "," << b.east << ");"
      << "way[waterway=canal](" << b.south << "," << b.west << "," << b.north << "," << b.east << ");"
      << ");(._;>;);out body;";
    return q.str();
}

// Parses an Overpass JSON response. Ways tagged waterway=river/canal are
// kept; everything else (footpaths etc.) is dropped.
inline WaterwayData parse_overpass_response(const std::string& body) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("overpass: malformed response: ") + e.what());
    }
    if (!doc.contains("elements")) throw std::runtime_error("overpass: response has no elements");
    WaterwayData data;
    for (const auto& el : doc["elements"]) {
        const std::string type = el.value("type", "");
        if (type == "node") {
            data.nodes.push_back({el.at("id").get<NodeId>(), el.at("lat").get<double>(),
                                  el.at("lon").get<double>()});
        } else if (type == "way") {
            const auto tags = el.value("tags", nlohmann::json::object());
            const std::string ww = tags.value("waterway", "");
            if (ww != "river" && ww != "canal") continue;
            WaterwayWay w;
            w.id = el.at("id").get<NodeId>();
            w.waterway = ww;
            for (const auto& n : el.at("nodes")) w.node_ids.push_back(n.get<NodeId>());
            data.ways.push_back(std::move(w));
        }
    }
    return data;
}

// Fetches waterway ways/nodes. An http(s) endpoint is queried live via POST;
// any other endpoint string is read as a cached response file.
// Declared here, defined in globalplan_http.hpp to keep the HTTP dependency
// out of translation units that only plan routes.
WaterwayData fetch_waterways(const BoundingBox& bbox, const std::string& endpoint);

inline WaterwayData fetch_waterways_fixture(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("overpass: cannot open fixture: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_overpass_response(ss.str());
}

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;
};

// Equirectangular projection around `reference`; valid for small areas
// (all coordinates within +/- 1 degree of the reference).
inline std::map<NodeId, Vec2> project_latlon(const std::vector<WaterwayNode>& nodes,
                                             const LatLon& reference) {
    constexpr double kEarthRadius = 6371000.0;
    constexpr double kDeg = M_PI / 180.0;
    std::map<NodeId, Vec2> out;
    for (const auto& n : nodes) {
        if (std::abs(n.lat - reference.lat) > 1.0 || std::abs(n.lon - reference.lon) > 1.0)
            throw std::invalid_argument("project_latlon: coordinate outside small-area bound");
        const double x = kEarthRadius * (n.lon - reference.lon) * kDeg * std::cos(reference.lat * kDeg);
        const double y = kEarthRadius * (n.lat - reference.lat) * kDeg;
        out[n.id] = {x, y};
    }
    return out;
}

struct WaterwayGraph {
    std::map<NodeId, Vec2> nodes;
    // adjacency, both directions; edge cost = Euclidean distance
    std::map<NodeId, std::vector<std::pair<NodeId, double>>> adj;

    bool has_node(NodeId id) const { return nodes.count(id) > 0; }

    NodeId nearest_node(Vec2 p) const {
        if (nodes.empty()) throw std::runtime_error("graph: empty");
        NodeId best = nodes.begin()->first;
        double best_d = std::numeric_limits<double>::infinity();
        for (const auto& [id, pos] : nodes) {
            const double d = distance(p, pos);
            if (d < best_d) {
                best_d = d;
                best = id;
            }
        }
        return best;
    }
};

// Consecutive nodes within each way become undirected edges; ways sharing
// node ids merge into one graph. Duplicate edges are kept once.
inline WaterwayGraph build_graph(const std::map<NodeId, Vec2>& nodes,
                                 const std::vector<WaterwayWay>& ways) {
    WaterwayGraph g;
    std::set<std::pair<NodeId, NodeId>> seen;
    for (const auto& w : ways) {
        if (w.node_ids.size() < 2) throw std::invalid_argument("build_graph: way with < 2 nodes");
        for (std::size_t k = 0; k + 1 < w.node_ids.size(); ++k) {
            const NodeId a = w.node_ids[k];
            const NodeId b = w.node_ids[k + 1];
            const auto ita = nodes.find(a);
            const auto itb = nodes.find(b);
            if (ita == nodes.end() || itb == nodes.end())
                throw std::invalid_argument("build_graph: way references unknown node id");
            const double cost = distance(ita->second, itb->second);
            if (cost <= 1e-9)
                throw std::invalid_argument("build_graph: zero-cost edge (duplicate consecutive nodes)");
            g.nodes[a] = ita->second;
            g.nodes[b] = itb->second;
            const auto key = std::minmax(a, b);
            if (!seen.insert(key).second) continue;
            g.adj[a].push_back({b, cost});
            g.adj[b].push_back({a, cost});
        }
    }
    return g;
}

// Shortest path by total edge cost; among equal-cost paths the
// lexicographically smallest node-id sequence wins. The priority queue
// orders by (cost, path), which stays consistent because edge costs are
// strictly positive.
inline std::vector<NodeId> dijkstra(const WaterwayGraph& g, NodeId src, NodeId dst) {
    if (!g.has_node(src) || !g.has_node(dst)) throw std::invalid_argument("dijkstra: unknown node id");
    if (src == dst) return {src};
    using Entry = std::pair<double, std::vector<NodeId>>;
    auto cmp = [](const Entry& a, const Entry& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second > b.second;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> pq(cmp);
    std::set<NodeId> settled;
    pq.push({0.0, {src}});
    while (!pq.empty()) {
        auto [cost, path] = pq.top();
        pq.pop();
        const NodeId u = path.back();
        if (settled.count(u)) continue;
        settled.insert(u);
        if (u == dst) return path;
        const auto it = g.adj.find(u);
        if (it == g.adj.end()) continue;
        for (const auto& [v, w] : it->second) {
            if (settled.count(v)) continue;
            auto next = path;
            next.push_back(v);
            pq.push({cost + w, std::move(next)});
        }
    }
    throw std::runtime_error("dijkstra: destination unreachable");
}

inline double path_cost(const WaterwayGraph& g, const std::vector<NodeId>& path) {
    double c = 0.0;
    for (std::size_t k = 0; k + 1 < path.size(); ++k)
        c += distance(g.nodes.at(path[k]), g.nodes.at(path[k + 1]));
    return c;
}

struct GlobalRoute {
    std::vector<Vec2> waypoints;
    double min_spacing = 150.0;
    double max_spacing = 200.0;

    double length() const {
        double L = 0.0;
        for (std::size_t k = 0; k + 1 < waypoints.size(); ++k)
            L += distance(waypoints[k], waypoints[k + 1]);
        return L;
    }
};

// Uniform arc-length resampling of a polyline. Spacing
// s = min(max, max(min, L/ceil(L/max))); the final segment may be shorter.
inline GlobalRoute resample_route(const std::vector<Vec2>& polyline, double min_spacing,
                                  double max_spacing) {
    if (polyline.empty()) throw std::invalid_argument("resample_route: empty polyline");
    if (min_spacing >= max_spacing) throw std::invalid_argument("resample_route: min >= max spacing");
    GlobalRoute route;
    route.min_spacing = min_spacing;
    route.max_spacing = max_spacing;

    std::vector<double> cum{0.0};
    for (std::size_t k = 0; k + 1 < polyline.size(); ++k)
        cum.push_back(cum.back() + distance(polyline[k], polyline[k + 1]));
    const double L = cum.back();
    if (L <= 1e-9) {
        if (distance(polyline.front(), polyline.back()) > 1e-9)
            throw std::invalid_argument("resample_route: degenerate polyline with distinct ends");
        route.waypoints = {polyline.front()};
        return route;
    }
    if (L < min_spacing) {
        route.waypoints = {polyline.front(), polyline.back()};
        return route;
    }
    const double s = std::min(max_spacing, std::max(min_spacing, L / std::ceil(L / max_spacing)));

    auto point_at = [&](double arc) {
        std::size_t seg = 0;
        while (seg + 2 < cum.size() && cum[seg + 1] < arc) ++seg;
        const double seg_len = cum[seg + 1] - cum[seg];
        const double t = seg_len > 0 ? (arc - cum[seg]) / seg_len : 0.0;
        return polyline[seg] + (polyline[seg + 1] - polyline[seg]) * t;
    };

    for (double arc = 0.0; arc < L - 1e-9; arc += s) route.waypoints.push_back(point_at(arc));
    route.waypoints.push_back(polyline.back());
    return route;
}

// Full pipeline: snap start/goal to the nearest graph nodes, route with
// Dijkstra, then resample start -> node path -> goal at the given spacing.
inline GlobalRoute plan_global_route(const WaterwayGraph& g, Vec2 start, Vec2 goal,
                                     double min_spacing, double max_spacing) {
    const NodeId a = g.nearest_node(start);
    const NodeId b = g.nearest_node(goal);
    const auto ids = dijkstra(g, a, b);
    std::vector<Vec2> polyline{start};
    for (NodeId id : ids) {
        const Vec2 p = g.nodes.at(id);
        if (distance(polyline.back(), p) > 1e-9) polyline.push_back(p);
    }
    if (distance(polyline.back(), goal) > 1e-9) polyline.push_back(goal);
    if (polyline.size() < 2) polyline.push_back(goal);
    return resample_route(polyline, min_spacing, max_spacing);
}

}  // namespace waternav
