#pragma once

#include "jsqslq/model.hpp"

#include <vector>

namespace jsqslq {

/// Raw chain state: the three queue lengths and the attended queue (1..3).
struct FullState {
    std::array<int, 3> len = {0, 0, 0};
    int server = 1;

    friend bool operator==(const FullState&, const FullState&) = default;
};

struct Transition {
    FullState state;
    double prob = 0.0;
};

/// Embeds phase d at queue-1 length n.
inline FullState state_at(int n, const Phase& d) {
    return FullState{{n, n - d.d2, n - d.d3}, d.server};
}

inline Phase phase_of(const FullState& s) {
    return Phase{s.server, s.len[0] - s.len[1], s.len[0] - s.len[2]};
}

/// One Poisson arrival: join the shortest queue (weighted ties), then the server
/// moves iff the joined queue now strictly exceeds the attended one.
inline std::vector<Transition> route_arrival(const FullState& s, const ModelParams& prm) {
    int mn = std::min({s.len[0], s.len[1], s.len[2]});
    std::array<int, 3> tied{};
    int k = 0;
    for (int i = 0; i < 3; ++i)
        if (s.len[i] == mn) tied[k++] = i;

    std::vector<Transition> out;
    out.reserve(3);
    auto push = [&](int join, double pr) {
        FullState next = s;
        ++next.len[join];
        if (join + 1 != s.server && next.len[join] > next.len[s.server - 1]) next.server = join + 1;
        out.push_back({next, pr});
    };
    if (k == 1) {
        push(tied[0], 1.0);
    } else if (k == 2) {
        double w = prm.p[tied[0]] + prm.p[tied[1]];
        push(tied[0], prm.p[tied[0]] / w);
        push(tied[1], prm.p[tied[1]] / w);
    } else {
        for (int i = 0; i < 3; ++i) push(i, prm.p[i]);
    }
    return out;
}

/// One service completion at the attended queue. Afterwards the server moves to a
/// queue strictly longer than the attended one: to the unique strict maximum, or
/// by the q weights when the two other queues tie above it; otherwise it stays.
inline std::vector<Transition> complete_service(const FullState& s, const ModelParams& prm) {
    int att = s.server - 1;
    if (s.len[att] <= 0) fail(errc::empty_attended_queue, "service completion at an empty queue");
    FullState next = s;
    --next.len[att];

    int o1 = (att + 1) % 3, o2 = (att + 2) % 3;
    int mx = std::max(next.len[o1], next.len[o2]);
    if (mx <= next.len[att]) return {{next, 1.0}};
    if (next.len[o1] != next.len[o2]) {
        next.server = (next.len[o1] > next.len[o2] ? o1 : o2) + 1;
        return {{next, 1.0}};
    }
    double w = prm.q[o1] + prm.q[o2];
    FullState a = next, b = next;
    a.server = o1 + 1;
    b.server = o2 + 1;
    return {{a, prm.q[o1] / w}, {b, prm.q[o2] / w}};
}

/// Level-transition blocks of the quasi-birth-death generator.
struct QbdBlocks {
    Mat7 b1 = Mat7::Zero();        // level 0 internal (with diagonal)
    Mat7x12 b0 = Mat7x12::Zero();  // level 0 -> 1
    Mat12x7 b2 = Mat12x7::Zero();  // level 1 -> 0
    Mat12 a0 = Mat12::Zero();      // level up
    Mat12 a1 = Mat12::Zero();      // within level (with diagonal)
    Mat12 a2 = Mat12::Zero();      // level down

    /// Generator of the phase process, A = A0 + A1 + A2.
    Mat12 a() const { return a0 + a1 + a2; }
};

/// Materializes the blocks from the dynamics. Interior rows are generated from a
/// representative state at L1 = 2 (rates are level-independent for n >= 1);
/// boundary rows from the actual level-0 and level-1 states.
inline QbdBlocks build_blocks(const ModelParams& prm) {
    QbdBlocks blocks;
    for (int row = 0; row < kNumPhases; ++row) {
        FullState s = state_at(2, kPhases[static_cast<size_t>(row)]);
        for (const auto& [next, pr] : route_arrival(s, prm)) {
            int col = phase_index(phase_of(next));
            (next.len[0] == 3 ? blocks.a0 : blocks.a1)(row, col) += prm.lambda * pr;
        }
        double mu = prm.mu[s.server - 1];
        for (const auto& [next, pr] : complete_service(s, prm)) {
            int col = phase_index(phase_of(next));
            (next.len[0] == 1 ? blocks.a2 : blocks.a1)(row, col) += mu * pr;
        }
        blocks.a1(row, row) = -(prm.lambda + mu);
    }
    for (int row = 0; row < kNumBoundaryPhases; ++row) {
        FullState s = state_at(0, kBoundaryPhases[static_cast<size_t>(row)]);
        for (const auto& [next, pr] : route_arrival(s, prm)) {
            if (next.len[0] == 0)
                blocks.b1(row, boundary_phase_index(phase_of(next))) += prm.lambda * pr;
            else
                blocks.b0(row, phase_index(phase_of(next))) += prm.lambda * pr;
        }
        double mu = 0.0;
        if (s.len[s.server - 1] > 0) {
            mu = prm.mu[s.server - 1];
            for (const auto& [next, pr] : complete_service(s, prm))
                blocks.b1(row, boundary_phase_index(phase_of(next))) += mu * pr;
        }
        blocks.b1(row, row) = -(prm.lambda + mu);
    }
    for (int row = 0; row < kNumPhases; ++row) {
        FullState s = state_at(1, kPhases[static_cast<size_t>(row)]);
        for (const auto& [next, pr] : complete_service(s, prm)) {
            if (next.len[0] == 0)
                blocks.b2(row, boundary_phase_index(phase_of(next))) += prm.mu[s.server - 1] * pr;
        }
    }
    return blocks;
}

}  // namespace jsqslq
