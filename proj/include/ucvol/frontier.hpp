#pragma once
// Frontier hypercube graph: stores only inspected cubes that are not yet processed.

#include "core.hpp"

#include <bit>
#include <deque>
#include <optional>
#include <unordered_map>
#include <vector>

namespace ucvol {

enum class FaceLabel : std::uint8_t { Uninspected, InspectedUnprocessed, Processed };

// Which promising cube is processed next.
enum class FrontierOrder : std::uint8_t {
    Lifo,          // most recently promoted
    Fifo,          // least recently promoted
    MostProcessed  // most processed face neighbours, ties by recency
};

inline const char* to_string(FrontierOrder o) {
    switch (o) {
        case FrontierOrder::Lifo: return "lifo";
        case FrontierOrder::Fifo: return "fifo";
        case FrontierOrder::MostProcessed: return "most-processed";
    }
    return "?";
}

// Face f = 2 * axis + side, side 0 being the lower face.
constexpr std::size_t face_axis(std::size_t f) { return f / 2; }
constexpr std::size_t face_side(std::size_t f) { return f % 2; }
constexpr std::size_t opposite_face(std::size_t f) { return f ^ 1u; }

template <std::size_t D>
struct FrontierCube {
    LatticeKey<D> key{};
    std::array<FaceLabel, 2 * D> faces{};

    [[nodiscard]] std::uint32_t processed_faces() const {
        std::uint32_t m = 0;
        for (std::size_t f = 0; f < 2 * D; ++f)
            if (faces[f] == FaceLabel::Processed) m |= 1u << f;
        return m;
    }
};

template <std::size_t D>
class FrontierGraph {
public:
    using Key = LatticeKey<D>;
    using Cube = FrontierCube<D>;
    static constexpr std::size_t kFaces = 2 * D;

    // periods[a] > 0 makes axis a cyclic with that many cells.
    explicit FrontierGraph(std::array<int, D> periods = {}, FrontierOrder order = FrontierOrder::Lifo)
        : periods_(periods), order_(order) {
        for (int p : periods_)
            if (p != 0 && p < 3) throw Error(ErrorCode::InvalidInput, "cyclic axes need at least three cells");
    }

    [[nodiscard]] Key neighbor(Key k, std::size_t face) const {
        const std::size_t a = face_axis(face);
        k[a] += face_side(face) ? 1 : -1;
        if (periods_[a] != 0) {
            k[a] %= periods_[a];
            if (k[a] < 0) k[a] += periods_[a];
        }
        return k;
    }

    // Seeds go straight to P. Only valid before the first pop().
    void add_seed(const Key& k) {
        if (promising_.count(k)) return;
        if (auto it = waiting_.find(k); it != waiting_.end()) {
            promote(it);
        } else {
            insert_new(k, std::nullopt, true);
        }
        track_peak();
    }

    [[nodiscard]] std::optional<Cube> pop() {
        while (true) {
            std::optional<Key> k = next_key();
            if (!k) return std::nullopt;
            auto it = promising_.find(*k);
            if (it == promising_.end()) continue;  // stale queue entry
            if (order_ == FrontierOrder::MostProcessed &&
                static_cast<std::size_t>(std::popcount(it->second.processed_faces())) != lastBucket_)
                continue;
            Cube c = it->second;
            promising_.erase(it);
            return c;
        }
    }

    // Record `cube` as processed; bit f of `feasibleFaces` marks a feasible shared face.
    void complete(const Cube& cube, std::uint32_t feasibleFaces) {
        ++processed_;
        for (std::size_t f = 0; f < kFaces; ++f) {
            if (cube.faces[f] == FaceLabel::Processed) continue;
            const Key n = neighbor(cube.key, f);
            const std::size_t back = opposite_face(f);
            const bool feasible = (feasibleFaces >> f) & 1u;
            if (auto it = promising_.find(n); it != promising_.end()) {
                it->second.faces[back] = FaceLabel::Processed;
                if (order_ == FrontierOrder::MostProcessed) enqueue(n, it->second);
            } else if (auto jt = waiting_.find(n); jt != waiting_.end()) {
                jt->second.faces[back] = FaceLabel::Processed;
                if (feasible) {
                    promote(jt);
                } else if (jt->second.processed_faces() == (1u << kFaces) - 1u) {
                    waiting_.erase(jt);
                }
            } else {
                insert_new(n, back, feasible);
            }
        }
        track_peak();
    }

    [[nodiscard]] bool empty() const { return promising_.empty(); }
    [[nodiscard]] std::size_t promising_size() const { return promising_.size(); }
    [[nodiscard]] std::size_t waiting_size() const { return waiting_.size(); }
    [[nodiscard]] std::size_t size() const { return promising_.size() + waiting_.size(); }
    [[nodiscard]] std::size_t peak() const { return peak_; }
    [[nodiscard]] std::size_t processed() const { return processed_; }
    [[nodiscard]] bool stored(const Key& k) const { return promising_.count(k) || waiting_.count(k); }
    [[nodiscard]] bool is_promising(const Key& k) const { return promising_.count(k) != 0; }
    [[nodiscard]] const Cube* find(const Key& k) const {
        if (auto it = promising_.find(k); it != promising_.end()) return &it->second;
        if (auto it = waiting_.find(k); it != waiting_.end()) return &it->second;
        return nullptr;
    }

private:
    using Map = std::unordered_map<Key, Cube, LatticeKeyHash<D>>;

    Cube* lookup(const Key& k) {
        if (auto it = promising_.find(k); it != promising_.end()) return &it->second;
        if (auto it = waiting_.find(k); it != waiting_.end()) return &it->second;
        return nullptr;
    }

    void promote(typename Map::iterator it) {
        const Key k = it->first;
        const Cube c = it->second;
        waiting_.erase(it);
        promising_.emplace(k, c);
        enqueue(k, c);
    }

    void enqueue(const Key& k, const Cube& c) {
        if (order_ == FrontierOrder::MostProcessed) {
            buckets_[static_cast<std::size_t>(std::popcount(c.processed_faces()))].push_back(k);
        } else {
            queue_.push_back(k);
        }
    }

    std::optional<Key> next_key() {
        switch (order_) {
            case FrontierOrder::Lifo:
                if (queue_.empty()) return std::nullopt;
                {
                    const Key k = queue_.back();
                    queue_.pop_back();
                    return k;
                }
            case FrontierOrder::Fifo:
                if (queue_.empty()) return std::nullopt;
                {
                    const Key k = queue_.front();
                    queue_.pop_front();
                    return k;
                }
            case FrontierOrder::MostProcessed:
                for (std::size_t b = kFaces + 1; b-- > 0;) {
                    if (buckets_[b].empty()) continue;
                    const Key k = buckets_[b].back();
                    buckets_[b].pop_back();
                    lastBucket_ = b;
                    return k;
                }
                return std::nullopt;
        }
        return std::nullopt;
    }

    // A cube with no processed neighbour other than (possibly) the one across `processedFace`.
    void insert_new(const Key& k, std::optional<std::size_t> processedFace, bool promising) {
        Cube c;
        c.key = k;
        for (std::size_t g = 0; g < kFaces; ++g) {
            if (processedFace && g == *processedFace) {
                c.faces[g] = FaceLabel::Processed;
                continue;
            }
            if (Cube* m = lookup(neighbor(k, g))) {
                c.faces[g] = FaceLabel::InspectedUnprocessed;
                if (m->faces[opposite_face(g)] == FaceLabel::Uninspected)
                    m->faces[opposite_face(g)] = FaceLabel::InspectedUnprocessed;
            } else {
                c.faces[g] = FaceLabel::Uninspected;
            }
        }
        if (promising) {
            promising_.emplace(k, c);
            enqueue(k, c);
        } else {
            waiting_.emplace(k, c);
        }
    }

    void track_peak() { peak_ = std::max(peak_, size()); }

    std::array<int, D> periods_{};
    FrontierOrder order_ = FrontierOrder::Lifo;
    std::deque<Key> queue_;
    std::array<std::vector<Key>, kFaces + 1> buckets_;
    std::size_t lastBucket_ = 0;
    Map promising_;
    Map waiting_;
    std::size_t processed_ = 0;
    std::size_t peak_ = 0;
};

}  // namespace ucvol
