#pragma once

#include "toothfuse/core.hpp"
#include "toothfuse/kdtree.hpp"
#include "toothfuse/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <queue>

namespace toothfuse {

// One output point per occupied voxel: the centroid of its members. Normals
// are averaged and renormalized when present. Output is ordered by voxel key
// so the result is independent of input ordering only up to membership;
// for a fixed input it is fully deterministic.
inline PointCloud voxel_downsample(const PointCloud& c, double voxel) {
    if (!(voxel > 0.0)) throw Error("voxel_downsample: voxel size must be positive");
    PointCloud out;
    if (c.points.empty()) return out;

    const bool has_normals = !c.normals.empty();
    const Vec3 origin = c.bounds().min;

    struct Acc {
        Vec3 point_sum = Vec3::Zero();
        Vec3 normal_sum = Vec3::Zero();
        std::size_t count = 0;
    };
    std::map<std::array<std::int64_t, 3>, Acc> cells;
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        const Vec3 rel = (c.points[i] - origin) / voxel;
        std::array<std::int64_t, 3> key = {
            static_cast<std::int64_t>(std::floor(rel[0])),
            static_cast<std::int64_t>(std::floor(rel[1])),
            static_cast<std::int64_t>(std::floor(rel[2]))};
        Acc& a = cells[key];
        a.point_sum += c.points[i];
        if (has_normals) a.normal_sum += c.normals[i];
        ++a.count;
    }

    out.points.reserve(cells.size());
    if (has_normals) out.normals.reserve(cells.size());
    for (const auto& [key, a] : cells) {
        out.points.push_back(a.point_sum / static_cast<double>(a.count));
        if (has_normals) {
            Vec3 n = a.normal_sum;
            double len = n.norm();
            out.normals.push_back(len > 1e-12 ? Vec3(n / len) : Vec3::Zero());
        }
    }
    return out;
}

// Per-point PCA normals from the k nearest neighbors (query point included),
// oriented consistently by sign propagation over the k-NN graph seeded at
// each component's largest-z point (oriented toward +z). Points whose
// neighborhood covariance has rank < 2 get a zero normal and a false flag;
// if no point has a usable normal the cloud is rejected.
inline PointCloud estimate_normals(const PointCloud& c, int k,
                                   std::vector<std::uint8_t>* valid_out = nullptr) {
    const std::size_t n = c.points.size();
    if (k < 1) throw Error("estimate_normals: k must be >= 1");
    if (n < static_cast<std::size_t>(k) + 1)
        throw Error("estimate_normals: need at least k+1 points");

    KdTree tree(c.points);
    std::vector<Vec3> normals(n, Vec3::Zero());
    std::vector<std::uint8_t> valid(n, 0);
    std::vector<std::vector<int>> neighbors(n);

    parallel_for(n, [&](std::size_t i) {
        std::vector<int> idx;
        std::vector<double> dist;
        tree.knn(c.points[i], k + 1, idx, dist);
        Vec3 mean = Vec3::Zero();
        for (int j : idx) mean += c.points[j];
        mean /= static_cast<double>(idx.size());
        Mat3 cov = Mat3::Zero();
        for (int j : idx) {
            Vec3 d = c.points[j] - mean;
            cov += d * d.transpose();
        }
        cov /= static_cast<double>(idx.size());
        Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
        const Vec3 ev = eig.eigenvalues();  // ascending
        if (ev[1] > 1e-12 * std::max(1e-300, ev[2])) {
            normals[i] = eig.eigenvectors().col(0).normalized();
            valid[i] = 1;
        }
        neighbors[i].reserve(idx.size());
        for (int j : idx)
            if (j != static_cast<int>(i)) neighbors[i].push_back(j);
    }, 64);

    if (std::find(valid.begin(), valid.end(), std::uint8_t(1)) == valid.end())
        throw DegenerateNeighborhoodError(
            "estimate_normals: every neighborhood is rank-deficient");

    // symmetrize the neighbor graph so propagation can cross in both directions
    std::vector<std::vector<int>> graph = neighbors;
    for (std::size_t i = 0; i < n; ++i)
        for (int j : neighbors[i]) graph[j].push_back(static_cast<int>(i));

    std::vector<std::uint8_t> visited(n, 0);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        double za = c.points[a][2], zb = c.points[b][2];
        return za > zb || (za == zb && a < b);
    });
    for (int seed : order) {
        if (visited[seed] || !valid[seed]) continue;
        if (normals[seed][2] < 0.0) normals[seed] = -normals[seed];
        std::queue<int> frontier;
        frontier.push(seed);
        visited[seed] = 1;
        while (!frontier.empty()) {
            int cur = frontier.front();
            frontier.pop();
            for (int nb : graph[cur]) {
                if (visited[nb]) continue;
                visited[nb] = 1;
                if (!valid[nb]) continue;
                if (normals[cur].dot(normals[nb]) < 0.0) normals[nb] = -normals[nb];
                frontier.push(nb);
            }
        }
    }

    PointCloud out;
    out.points = c.points;
    out.normals = std::move(normals);
    if (valid_out) *valid_out = std::move(valid);
    return out;
}

}  // namespace toothfuse
