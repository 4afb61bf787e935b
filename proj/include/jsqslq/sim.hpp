#pragma once

#include "jsqslq/model.hpp"

#include <atomic>
#include <cstdint>
#include <deque>
#include <future>
#include <thread>
#include <vector>

namespace jsqslq {

/// Counter-based stream: value k is a splitmix64-style hash of (key, k), so a
/// replication's draws depend only on the master seed and its stream id.
class CounterRng {
public:
    CounterRng(std::uint64_t master_seed, std::uint64_t stream)
        : key_(mix(master_seed ^ mix(stream + 0x9E3779B97F4A7C15ULL))) {}

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

    /// Uniform on (0, 1].
    double uniform() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

struct SimConfig {
    std::uint64_t seed = 1;
    double horizon = 2e6;
    double warmup = 1e4;
    int replications = 20;
};

inline void validate_config(const SimConfig& cfg) {
    if (!(cfg.horizon > cfg.warmup) || cfg.warmup < 0.0)
        fail(errc::invalid_config, "need horizon > warmup >= 0");
    if (cfg.replications < 1) fail(errc::invalid_config, "need at least one replication");
}

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

/// Point estimates with across-replication standard errors.
struct SimEstimates {
    std::array<Estimate, 3> mean_l, var_l, cov, cor;
    std::array<Estimate, 3> lambda_eff, rho_eff, gamma;
    std::array<Estimate, 3> mean_w_little, mean_w_direct;
    Estimate p_idle, gini;
    bool growth_flag = false;
    double growth_slope = 0.0;
    std::uint64_t total_events = 0;
    // joins observed at three-way-tie arrival epochs, pooled over replications
    std::array<std::uint64_t, 3> tie_joins = {0, 0, 0};
};

/// Time fractions in the (L1, D) representation up to a level cap.
struct StateDistribution {
    Row7 boundary = Row7::Zero();
    std::vector<Row12> levels;  // levels[n-1] = level n
    double beyond_cap = 0.0;
    std::uint64_t events = 0;
};

namespace detail {

// interior phase index by (server-1, d2+1, d3+1); -1 marks triples outside the space
inline const int (&phase_lookup())[3][3][3] {
    static const auto table = [] {
        std::array<std::array<std::array<int, 3>, 3>, 3> t{};
        for (auto& a : t)
            for (auto& b : a) b.fill(-1);
        for (int i = 0; i < kNumPhases; ++i) {
            const Phase& d = kPhases[static_cast<size_t>(i)];
            t[static_cast<size_t>(d.server - 1)][static_cast<size_t>(d.d2 + 1)][static_cast<size_t>(d.d3 + 1)] = i;
        }
        static int raw[3][3][3];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 3; ++c) raw[a][b][c] = t[static_cast<size_t>(a)][static_cast<size_t>(b)][static_cast<size_t>(c)];
        return &raw;
    }();
    return *table;
}

struct Replication {
    double time_l[3] = {};
    double time_ll[3][3] = {};
    double time_gamma[3] = {};
    double time_idle = 0.0;
    double span = 0.0;
    double arrivals[3] = {};
    double sojourn_sum[3] = {};
    std::uint64_t sojourn_n[3] = {};
    std::uint64_t tie_joins[3] = {};
    double slope = 0.0;
    std::uint64_t events = 0;

    double mean_l(int i) const { return time_l[i] / span; }
    double cov(int i, int j) const { return time_ll[i][j] / span - mean_l(i) * mean_l(j); }
};

/// One event-driven path. The routing and switching decisions are written out
/// here from scratch, independently of the block builder, so the simulator can
/// serve as an oracle against it.
inline Replication run_replication(const ModelParams& prm, const SimConfig& cfg,
                                   std::uint64_t stream, StateDistribution* occupancy,
                                   int level_cap) {
    CounterRng rng(cfg.seed, stream);
    Replication rep;
    rep.span = cfg.horizon - cfg.warmup;

    int len[3] = {0, 0, 0};
    int server = 0;  // 0-based here
    double t = 0.0;

    // evenly spaced samples of L1 for the growth regression
    const int kSlopeSamples = 512;
    double sample_dt = cfg.horizon / kSlopeSamples;
    double next_sample = 0.0;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int ns = 0;

    std::deque<double> fifo[3];

    while (t < cfg.horizon) {
        double service_rate = len[server] > 0 ? prm.mu[server] : 0.0;
        double total = prm.lambda + service_rate;
        double tnext = t + rng.exponential(total);

        while (next_sample < tnext && next_sample <= cfg.horizon) {
            sx += next_sample;
            sy += len[0];
            sxx += next_sample * next_sample;
            sxy += next_sample * len[0];
            ++ns;
            next_sample += sample_dt;
        }

        double seg = std::min(tnext, cfg.horizon) - std::max(t, cfg.warmup);
        if (seg > 0.0) {
            for (int i = 0; i < 3; ++i) {
                rep.time_l[i] += seg * len[i];
                for (int j = 0; j < 3; ++j) rep.time_ll[i][j] += seg * len[i] * len[j];
            }
            rep.time_gamma[server] += seg;
            if (len[0] + len[1] + len[2] == 0) rep.time_idle += seg;
            if (occupancy) {
                int n = len[0];
                int d2 = len[0] - len[1], d3 = len[0] - len[2];
                if (n == 0) {
                    Phase ph{server + 1, d2, d3};
                    occupancy->boundary(boundary_phase_index(ph)) += seg;
                } else if (n <= level_cap) {
                    int idx = phase_lookup()[server][d2 + 1][d3 + 1];
                    if (idx < 0) fail(errc::state_outside_domain, "visited state outside the phase space");
                    occupancy->levels[static_cast<size_t>(n) - 1](idx) += seg;
                } else {
                    occupancy->beyond_cap += seg;
                }
            }
        }
        t = tnext;
        if (t >= cfg.horizon) break;
        ++rep.events;

        if (rng.uniform() * total <= prm.lambda) {
            // arrival joins the shortest queue, weighted among ties
            int mn = std::min({len[0], len[1], len[2]});
            int tied[3], k = 0;
            for (int i = 0; i < 3; ++i)
                if (len[i] == mn) tied[k++] = i;
            int join;
            if (k == 1) {
                join = tied[0];
            } else if (k == 2) {
                double w = prm.p[tied[0]] + prm.p[tied[1]];
                join = rng.uniform() * w <= prm.p[tied[0]] ? tied[0] : tied[1];
            } else {
                double r = rng.uniform();
                join = r <= prm.p[0] ? 0 : (r <= prm.p[0] + prm.p[1] ? 1 : 2);
                if (t >= cfg.warmup) ++rep.tie_joins[join];
            }
            ++len[join];
            if (join != server && len[join] > len[server]) server = join;
            if (t >= cfg.warmup) rep.arrivals[join] += 1.0;
            fifo[join].push_back(t);
        } else {
            // service completion, then the preemptive switch rule
            --len[server];
            double arrived = fifo[server].front();
            fifo[server].pop_front();
            if (t >= cfg.warmup && arrived >= cfg.warmup) {
                rep.sojourn_sum[server] += t - arrived;
                ++rep.sojourn_n[server];
            }
            int o1 = (server + 1) % 3, o2 = (server + 2) % 3;
            int mx = std::max(len[o1], len[o2]);
            if (mx > len[server]) {
                if (len[o1] != len[o2])
                    server = len[o1] > len[o2] ? o1 : o2;
                else
                    server = rng.uniform() * (prm.q[o1] + prm.q[o2]) <= prm.q[o1] ? o1 : o2;
            }
        }

        if (std::abs(len[0] - len[1]) > 1 || std::abs(len[0] - len[2]) > 1 ||
            std::abs(len[1] - len[2]) > 1)
            fail(errc::state_outside_domain, "queue-length differences left {-1,0,1}");
        if (len[server] != std::max({len[0], len[1], len[2]}))
            fail(errc::state_outside_domain, "server is not at a longest queue");
    }

    double denom = ns * sxx - sx * sx;
    rep.slope = denom > 0.0 ? (ns * sxy - sx * sy) / denom : 0.0;
    return rep;
}

inline std::vector<Replication> run_all(const ModelParams& prm, const SimConfig& cfg,
                                        StateDistribution* occupancy, int level_cap) {
    validate_config(cfg);
    std::vector<Replication> reps(static_cast<size_t>(cfg.replications));
    std::vector<StateDistribution> occ;
    if (occupancy) {
        occ.resize(reps.size());
        for (auto& o : occ) o.levels.assign(static_cast<size_t>(level_cap), Row12::Zero());
    }
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::future<void>> futures;
    std::atomic<int> cursor{0};
    for (unsigned w = 0; w < std::min<unsigned>(workers, reps.size()); ++w) {
        futures.push_back(std::async(std::launch::async, [&] {
            for (int k = cursor.fetch_add(1); k < cfg.replications; k = cursor.fetch_add(1))
                reps[static_cast<size_t>(k)] = run_replication(
                    prm, cfg, static_cast<std::uint64_t>(k), occupancy ? &occ[static_cast<size_t>(k)] : nullptr,
                    level_cap);
        }));
    }
    for (auto& f : futures) f.get();

    if (occupancy) {
        occupancy->levels.assign(static_cast<size_t>(level_cap), Row12::Zero());
        double span = (cfg.horizon - cfg.warmup) * cfg.replications;
        for (const auto& o : occ) {
            occupancy->boundary += o.boundary;
            for (int n = 0; n < level_cap; ++n) occupancy->levels[static_cast<size_t>(n)] += o.levels[static_cast<size_t>(n)];
            occupancy->beyond_cap += o.beyond_cap;
        }
        occupancy->boundary /= span;
        for (auto& lv : occupancy->levels) lv /= span;
        occupancy->beyond_cap /= span;
        for (const auto& r : reps) occupancy->events += r.events;
    }
    return reps;
}

inline Estimate pool(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (static_cast<double>(xs.size()) - 1.0) / static_cast<double>(xs.size()))};
}

}  // namespace detail

/// Gini of possibly all-zero estimated means (unlike the exact-measure version,
/// an empty window is reported as perfectly balanced rather than an error).
inline double gini_or_zero(const Vec3& means) {
    double total = means.sum();
    if (!(total > 0.0)) return 0.0;
    double num = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) num += std::abs(means[i] - means[j]);
    return num / (6.0 * total);
}

/// Time-averaged estimates over [warmup, horizon], replicated with independent
/// streams. Mean waits are estimated both through Little's law and by direct
/// per-customer sojourn tagging.
inline SimEstimates simulate(const ModelParams& prm, const SimConfig& cfg) {
    auto reps = detail::run_all(prm, cfg, nullptr, 0);
    SimEstimates est;

    auto collect = [&](auto&& f) {
        std::vector<double> xs(reps.size());
        for (size_t k = 0; k < reps.size(); ++k) xs[k] = f(reps[k]);
        return detail::pool(xs);
    };
    for (int i = 0; i < 3; ++i) {
        est.mean_l[static_cast<size_t>(i)] = collect([&](const auto& r) { return r.mean_l(i); });
        est.var_l[static_cast<size_t>(i)] = collect([&](const auto& r) { return r.cov(i, i); });
        est.lambda_eff[static_cast<size_t>(i)] = collect([&](const auto& r) { return r.arrivals[i] / r.span; });
        est.rho_eff[static_cast<size_t>(i)] =
            collect([&](const auto& r) { return r.arrivals[i] / r.span / prm.mu[i]; });
        est.gamma[static_cast<size_t>(i)] = collect([&](const auto& r) { return r.time_gamma[i] / r.span; });
        est.mean_w_little[static_cast<size_t>(i)] =
            collect([&](const auto& r) { return r.mean_l(i) / (r.arrivals[i] / r.span); });
        est.mean_w_direct[static_cast<size_t>(i)] =
            collect([&](const auto& r) { return r.sojourn_sum[i] / static_cast<double>(r.sojourn_n[i]); });
    }
    const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (int c = 0; c < 3; ++c) {
        int i = pairs[c][0], j = pairs[c][1];
        est.cov[static_cast<size_t>(c)] = collect([&](const auto& r) { return r.cov(i, j); });
        est.cor[static_cast<size_t>(c)] =
            collect([&](const auto& r) { return r.cov(i, j) / std::sqrt(r.cov(i, i) * r.cov(j, j)); });
    }
    est.p_idle = collect([&](const auto& r) { return r.time_idle / r.span; });
    est.gini = collect([&](const auto& r) {
        Vec3 m(r.mean_l(0), r.mean_l(1), r.mean_l(2));
        return gini_or_zero(m);
    });
    double slope = 0.0;
    for (const auto& r : reps) {
        slope += r.slope / static_cast<double>(reps.size());
        est.total_events += r.events;
        for (int i = 0; i < 3; ++i) est.tie_joins[static_cast<size_t>(i)] += r.tie_joins[i];
    }
    est.growth_slope = slope;
    est.growth_flag = slope > 0.01 * prm.lambda;
    return est;
}

/// Occupancy fractions of the (L1, D) states up to `level_cap`; throws if any
/// visited state maps outside the 12-phase space.
inline StateDistribution simulate_state_distribution(const ModelParams& prm, const SimConfig& cfg,
                                                     int level_cap = 20) {
    StateDistribution dist;
    detail::run_all(prm, cfg, &dist, level_cap);
    return dist;
}

}  // namespace jsqslq
