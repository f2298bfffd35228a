#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "stsinr/marks.hpp"
#include "stsinr/params.hpp"
#include "stsinr/point_pattern.hpp"

namespace stsinr {

enum class EdgeVariant { sinr, snr };

inline std::string to_string(EdgeVariant v) { return v == EdgeVariant::sinr ? "sinr" : "snr"; }

// Immutable snapshot of one time slot: the transmitter set and, optionally,
// the total received power at every node. With the power cache in place,
// interference with one transmitter excluded is a single subtraction.
//
// The cache is filled at construction (never mutated afterwards), so views
// can be shared read-only across workers. Summation order over transmitters
// is ascending id everywhere; all edge decisions in the library reduce to
// the same canonical expressions, bitwise.
class SlotView {
  public:
    SlotView(const PointPattern& pattern, const ModelParams& params, const MarkStream& stream,
             std::int64_t slot, bool with_power = true)
        : pattern_(&pattern), params_(&params), stream_(&stream), slot_(slot) {
        const std::size_t n = pattern.size();
        is_tx_.assign(n, 0);
        noise_.resize(n);
        std::uint64_t mac_base = stream.mac_slot_base(slot);
        for (std::size_t k = 0; k < n; ++k) {
            int id = static_cast<int>(k);
            if (stream.transmits_with_base(mac_base, id)) {
                is_tx_[k] = 1;
                tx_.push_back(id);
            }
            noise_[k] = stream.noise(id, slot);
        }
        if (with_power) {
            total_power_.resize(n);
            for (std::size_t k = 0; k < n; ++k)
                total_power_[k] = compute_total_power(static_cast<int>(k));
        }
    }

    const PointPattern& pattern() const { return *pattern_; }
    const ModelParams& params() const { return *params_; }
    const MarkStream& stream() const { return *stream_; }
    std::int64_t slot() const { return slot_; }
    const std::vector<int>& transmitter_ids() const { return tx_; }
    bool transmits(int i) const { return is_tx_[static_cast<std::size_t>(i)] != 0; }
    double noise_at(int j) const { return noise_[static_cast<std::size_t>(j)]; }

    // Sum over transmitters k != j of F_{k,j}/l(d_kj), ascending id.
    double compute_total_power(int j) const {
        double acc = 0.0;
        std::uint64_t base = stream_->fading_receiver_base(j, slot_);
        const Vec2& pj = pattern_->position(j);
        for (int k : tx_) {
            if (k == j) continue;
            double r2 = pattern_->window.distance_sq(pattern_->position(k), pj);
            acc += stream_->fading_with_base(base, k) / params_->pathloss_from_r2(r2);
        }
        return acc;
    }

    double total_power(int j) const {
        if (!total_power_.empty()) return total_power_[static_cast<std::size_t>(j)];
        return compute_total_power(j);
    }

  private:
    const PointPattern* pattern_;
    const ModelParams* params_;
    const MarkStream* stream_;
    std::int64_t slot_;
    std::vector<std::uint8_t> is_tx_;
    std::vector<int> tx_;
    std::vector<double> noise_;
    std::vector<double> total_power_;
};

// Shot-noise interference at receiver j, excluding transmitter exclude_i
// (and always excluding j itself).
inline double interference(const SlotView& view, int receiver_j, int exclude_i = -1) {
    double total = view.total_power(receiver_j);
    if (exclude_i >= 0 && exclude_i != receiver_j && view.transmits(exclude_i)) {
        const PointPattern& pat = view.pattern();
        double r2 = pat.window.distance_sq(pat.position(exclude_i), pat.position(receiver_j));
        total -= view.stream().fading(exclude_i, receiver_j, view.slot()) /
                 view.params().pathloss_from_r2(r2);
        if (total < 0.0) total = 0.0;  // cancellation guard
    }
    return total;
}

inline double sinr(const SlotView& view, int i, int j) {
    if (i == j) throw std::domain_error("sinr: i and j must differ");
    double signal = view.stream().fading(i, j, view.slot()) /
                    view.params().pathloss_from_r2(
                        view.pattern().window.distance_sq(view.pattern().position(i),
                                                          view.pattern().position(j)));
    double denom = view.noise_at(j) + interference(view, j, i);
    if (denom == 0.0) return std::numeric_limits<double>::infinity();
    return signal / denom;
}

inline double snr(const SlotView& view, int i, int j) {
    if (i == j) throw std::domain_error("snr: i and j must differ");
    double signal = view.stream().fading(i, j, view.slot()) /
                    view.params().pathloss_from_r2(
                        view.pattern().window.distance_sq(view.pattern().position(i),
                                                          view.pattern().position(j)));
    double w = view.noise_at(j);
    if (w == 0.0) return std::numeric_limits<double>::infinity();
    return signal / w;
}

// Edge indicator of the space-time graph: 1 on the diagonal (a node always
// keeps its packet), otherwise 1 iff i transmits, j listens and the
// threshold is met. Comparisons run in product form F >= T*l*(W+I), which
// handles the zero-denominator case without an infinity sentinel and makes
// the SNR/SINR inclusion exact in floating point.
inline bool edge(const SlotView& view, int i, int j, EdgeVariant variant = EdgeVariant::sinr) {
    if (i == j) return true;
    if (!view.transmits(i) || view.transmits(j)) return false;
    const PointPattern& pat = view.pattern();
    double r2 = pat.window.distance_sq(pat.position(i), pat.position(j));
    double q = view.params().threshold * view.params().pathloss_from_r2(r2);
    double f = view.stream().fading(i, j, view.slot());
    if (variant == EdgeVariant::snr) return f >= q * view.noise_at(j);
    double denom = view.noise_at(j) + interference(view, j, i);
    return f >= q * denom;
}

enum class Direction { in, out };

// Out-degree of (v, slot) counts successors at slot+1; in-degree of
// (v, slot) counts predecessors, i.e. edges evaluated at slot-1. Both
// include the self edge.
inline int degree(const PointPattern& pattern, const ModelParams& params, const MarkStream& stream,
                  int v, std::int64_t slot, Direction direction,
                  EdgeVariant variant = EdgeVariant::sinr) {
    const int n = static_cast<int>(pattern.size());
    if (direction == Direction::out) {
        SlotView view(pattern, params, stream, slot);
        int count = 0;
        for (int j = 0; j < n; ++j)
            if (edge(view, v, j, variant)) ++count;
        return count;
    }
    SlotView view(pattern, params, stream, slot - 1);
    int count = 0;
    for (int i = 0; i < n; ++i)
        if (edge(view, i, v, variant)) ++count;
    return count;
}

inline int degree(const SlotView& view, int v, Direction direction,
                  EdgeVariant variant = EdgeVariant::sinr) {
    return degree(view.pattern(), view.params(), view.stream(), v, view.slot(), direction,
                  variant);
}

// Per-slot adjacency as out-neighbor lists (self edge included). The SNR
// prefilter skips the interference sum for pairs that cannot pass even with
// zero interference.
inline std::vector<std::vector<int>> slot_adjacency(const PointPattern& pattern,
                                                    const ModelParams& params,
                                                    const MarkStream& stream, std::int64_t slot,
                                                    EdgeVariant variant = EdgeVariant::sinr) {
    const int n = static_cast<int>(pattern.size());
    SlotView view(pattern, params, stream, slot, /*with_power=*/false);
    std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) out[static_cast<std::size_t>(v)].push_back(v);

    const auto& tx = view.transmitter_ids();
    for (int j = 0; j < n; ++j) {
        if (view.transmits(j)) continue;
        double w = view.noise_at(j);
        std::uint64_t fbase = stream.fading_receiver_base(j, slot);
        const Vec2& pj = pattern.position(j);
        double total = -1.0;  // filled on first surviving candidate
        for (int i : tx) {
            double r2 = pattern.window.distance_sq(pattern.position(i), pj);
            double q = params.threshold * params.pathloss_from_r2(r2);
            double f = stream.fading_with_base(fbase, i);
            if (f < q * w) continue;  // fails even without interference
            bool ok;
            if (variant == EdgeVariant::snr) {
                ok = true;
            } else {
                if (total < 0.0) total = view.compute_total_power(j);
                double others = total - f / params.pathloss_from_r2(r2);
                if (others < 0.0) others = 0.0;
                ok = f >= q * (w + others);
            }
            if (ok) out[static_cast<std::size_t>(i)].push_back(j);
        }
    }
    return out;
}

// Number of directed paths with k edges originating from (v, start_slot)
// (direction out) or terminating there (direction in), by slot-by-slot
// dynamic programming over per-vertex path counts.
inline double count_paths(const PointPattern& pattern, const ModelParams& params,
                          const MarkStream& stream, int v, std::int64_t start_slot, int k,
                          Direction direction, EdgeVariant variant = EdgeVariant::sinr) {
    if (k < 0) throw std::invalid_argument("count_paths: k must be >= 0");
    const std::size_t n = pattern.size();
    std::vector<double> cur(n, 0.0), next(n);
    cur[static_cast<std::size_t>(v)] = 1.0;
    for (int step = 0; step < k; ++step) {
        std::int64_t slot = direction == Direction::out ? start_slot + step
                                                        : start_slot - step - 1;
        auto adj = slot_adjacency(pattern, params, stream, slot, variant);
        std::fill(next.begin(), next.end(), 0.0);
        if (direction == Direction::out) {
            // cur lives at slot, next at slot+1
            for (std::size_t i = 0; i < n; ++i) {
                if (cur[i] == 0.0) continue;
                for (int j : adj[i]) next[static_cast<std::size_t>(j)] += cur[i];
            }
        } else {
            // cur lives at slot+1, next at slot
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int j : adj[i]) acc += cur[static_cast<std::size_t>(j)];
                next[i] = acc;
            }
        }
        cur.swap(next);
    }
    double total = 0.0;
    for (double c : cur) total += c;
    return total;
}

// Debug dump of the edge list for a range of slots: `slot,i,j,variant`.
inline void dump_edges(const PointPattern& pattern, const ModelParams& params,
                       const MarkStream& stream, std::int64_t slot_begin, std::int64_t slot_end,
                       EdgeVariant variant, std::ostream& os) {
    os << "slot,i,j,variant\n";
    for (std::int64_t s = slot_begin; s < slot_end; ++s) {
        auto adj = slot_adjacency(pattern, params, stream, s, variant);
        for (std::size_t i = 0; i < adj.size(); ++i)
            for (int j : adj[i])
                os << s << ',' << i << ',' << j << ',' << to_string(variant) << '\n';
    }
}

}  // namespace stsinr
