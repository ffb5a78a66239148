#pragma once

#include "toothfuse/core.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

namespace toothfuse {

// Static kd-tree over 3D points. Median split on the widest axis with
// index tie-breaking, so the structure is a pure function of the input.
class KdTree {
public:
    KdTree() = default;

    explicit KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), 0);
        nodes_.reserve(points_.size() / kLeafSize * 2 + 1);
        if (!points_.empty()) root_ = build(0, static_cast<int>(points_.size()));
    }

    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }

    // Index of the nearest point, -1 on an empty tree.
    int nearest(const Vec3& q, double* distance = nullptr) const {
        int best = -1;
        double best_d2 = std::numeric_limits<double>::infinity();
        if (root_ >= 0) search_nearest(root_, q, best, best_d2);
        if (distance) *distance = best < 0 ? best_d2 : std::sqrt(best_d2);
        return best;
    }

    // k nearest neighbours, ascending by (distance, index).
    void knn(const Vec3& q, int k, std::vector<int>& idx,
             std::vector<double>& dist) const {
        idx.clear();
        dist.clear();
        if (k <= 0 || root_ < 0) return;
        // max-heap of (d2, index)
        std::priority_queue<std::pair<double, int>> heap;
        search_knn(root_, q, static_cast<std::size_t>(k), heap);
        idx.resize(heap.size());
        dist.resize(heap.size());
        for (std::size_t i = heap.size(); i-- > 0;) {
            idx[i] = heap.top().second;
            dist[i] = std::sqrt(heap.top().first);
            heap.pop();
        }
    }

    // All points with distance <= r, ascending by (distance, index).
    std::vector<int> radius(const Vec3& q, double r) const {
        std::vector<std::pair<double, int>> found;
        if (root_ >= 0) search_radius(root_, q, r * r, found);
        std::sort(found.begin(), found.end());
        std::vector<int> out;
        out.reserve(found.size());
        for (auto& [d2, i] : found) out.push_back(i);
        return out;
    }

private:
    static constexpr int kLeafSize = 16;

    struct Node {
        Aabb box;
        int left = -1, right = -1;  // children, -1 for leaf
        int begin = 0, end = 0;     // leaf range into order_
    };

    int build(int begin, int end) {
        Node node;
        for (int i = begin; i < end; ++i) node.box.expand(points_[order_[i]]);
        int id = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        if (end - begin <= kLeafSize) {
            nodes_[id].begin = begin;
            nodes_[id].end = end;
            return id;
        }
        Vec3 ext = node.box.extent();
        int axis = 0;
        if (ext[1] > ext[axis]) axis = 1;
        if (ext[2] > ext[axis]) axis = 2;
        int mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid,
                         order_.begin() + end, [&](int a, int b) {
                             double ca = points_[a][axis], cb = points_[b][axis];
                             return ca < cb || (ca == cb && a < b);
                         });
        int l = build(begin, mid);
        int r = build(mid, end);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    void search_nearest(int id, const Vec3& q, int& best, double& best_d2) const {
        const Node& n = nodes_[id];
        if (n.left < 0) {
            for (int i = n.begin; i < n.end; ++i) {
                int p = order_[i];
                double d2 = (points_[p] - q).squaredNorm();
                if (d2 < best_d2 || (d2 == best_d2 && p < best)) {
                    best_d2 = d2;
                    best = p;
                }
            }
            return;
        }
        double dl = nodes_[n.left].box.squared_distance(q);
        double dr = nodes_[n.right].box.squared_distance(q);
        int first = n.left, second = n.right;
        double dfirst = dl, dsecond = dr;
        if (dr < dl) {
            std::swap(first, second);
            std::swap(dfirst, dsecond);
        }
        if (dfirst <= best_d2) search_nearest(first, q, best, best_d2);
        if (dsecond <= best_d2) search_nearest(second, q, best, best_d2);
    }

    void search_knn(int id, const Vec3& q, std::size_t k,
                    std::priority_queue<std::pair<double, int>>& heap) const {
        const Node& n = nodes_[id];
        if (n.left < 0) {
            for (int i = n.begin; i < n.end; ++i) {
                int p = order_[i];
                double d2 = (points_[p] - q).squaredNorm();
                if (heap.size() < k) {
                    heap.emplace(d2, p);
                } else if (d2 < heap.top().first ||
                           (d2 == heap.top().first && p < heap.top().second)) {
                    heap.pop();
                    heap.emplace(d2, p);
                }
            }
            return;
        }
        double worst = heap.size() < k ? std::numeric_limits<double>::infinity()
                                       : heap.top().first;
        double dl = nodes_[n.left].box.squared_distance(q);
        double dr = nodes_[n.right].box.squared_distance(q);
        int first = n.left, second = n.right;
        if (dr < dl) std::swap(first, second);
        if (nodes_[first].box.squared_distance(q) <= worst)
            search_knn(first, q, k, heap);
        worst = heap.size() < k ? std::numeric_limits<double>::infinity()
                                : heap.top().first;
        if (nodes_[second].box.squared_distance(q) <= worst)
            search_knn(second, q, k, heap);
    }

    void search_radius(int id, const Vec3& q, double r2,
                       std::vector<std::pair<double, int>>& out) const {
        const Node& n = nodes_[id];
        if (n.box.squared_distance(q) > r2) return;
        if (n.left < 0) {
            for (int i = n.begin; i < n.end; ++i) {
                int p = order_[i];
                double d2 = (points_[p] - q).squaredNorm();
                if (d2 <= r2) out.emplace_back(d2, p);
            }
            return;
        }
        search_radius(n.left, q, r2, out);
        search_radius(n.right, q, r2, out);
    }

    std::vector<Vec3> points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace toothfuse
