#include "skyfed/fedsim.hpp"

#include "skyfed/bound.hpp"
#include "skyfed/channel.hpp"
#include "skyfed/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace skyfed {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

LocalDataset concatenate(const std::vector<LocalDataset>& parts) {
    LocalDataset out;
    long rows = 0;
    for (const auto& p : parts) rows += p.size();
    const long dim = parts.empty() ? 0 : parts.front().dim();
    out.features.resize(rows, dim);
    out.labels.resize(rows);
    long at = 0;
    for (const auto& p : parts) {
        out.features.middleRows(at, p.size()) = p.features;
        out.labels.segment(at, p.size()) = p.labels;
        at += p.size();
    }
    if (!parts.empty()) {
        out.classes = parts.front().classes;
        out.source = parts.front().source;
    }
    return out;
}

// Limited-memory BFGS with Armijo backtracking; enough for the smooth strongly convex
// objectives whose optimum the gap column needs.
Eigen::VectorXd minimize_lbfgs(const Model& model, const LocalDataset& data, Eigen::VectorXd w) {
    constexpr int kMemory = 10;
    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> history;
    double f = model.loss(w, data);
    Eigen::VectorXd g = model.gradient(w, data);
    const double tol = 1e-8 * std::max(1.0, g.norm());
    int stalled = 0;
    for (int it = 0; it < 2000 && g.norm() > tol; ++it) {
        // Two-loop recursion.
        Eigen::VectorXd q = g;
        std::vector<double> alpha(history.size());
        for (std::size_t k = history.size(); k-- > 0;) {
            const auto& [s, y] = history[k];
            alpha[k] = s.dot(q) / y.dot(s);
            q -= alpha[k] * y;
        }
        if (!history.empty()) {
            const auto& [s, y] = history.back();
            q *= s.dot(y) / y.squaredNorm();
        }
        for (std::size_t k = 0; k < history.size(); ++k) {
            const auto& [s, y] = history[k];
            const double beta = y.dot(q) / y.dot(s);
            q += (alpha[k] - beta) * s;
        }
        Eigen::VectorXd dir = -q;
        if (dir.dot(g) >= 0.0) dir = -g;

        double step = history.empty() ? 1.0 / std::max(1.0, g.norm()) : 1.0;
        Eigen::VectorXd next;
        double fn = f;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
            next = w + step * dir;
            fn = model.loss(next, data);
            if (fn <= f + 1e-4 * step * g.dot(dir)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        // Progress below rounding level: the iterate is as good as it gets.
        stalled = f - fn <= 1e-15 * std::abs(f) ? stalled + 1 : 0;
        if (stalled >= 3) break;
        Eigen::VectorXd gn = model.gradient(next, data);
        Eigen::VectorXd s = next - w, y = gn - g;
        if (y.dot(s) > 1e-16 * s.norm() * y.norm()) {
            history.emplace_back(std::move(s), std::move(y));
            if (history.size() > kMemory) history.pop_front();
        }
        w = std::move(next);
        g = std::move(gn);
        f = fn;
    }
    return w;
}

void solve_optimum(Federation& fed) {
    if (auto* q = dynamic_cast<const QuadraticModel*>(fed.model.get())) {
        fed.optimum = q->minimizer(fed.pooled);
    } else if (fed.model->kind() == ModelKind::kLogistic) {
        fed.optimum = minimize_lbfgs(*fed.model, fed.pooled, fed.initial);
    } else {
        fed.optimum.reset();
        return;
    }
    fed.optimum_loss = fed.model->loss(*fed.optimum, fed.pooled);
}

}  // namespace

double Federation::gap(const Eigen::VectorXd& w) const {
    if (!optimum) return kNaN;
    if (auto* q = dynamic_cast<const QuadraticModel*>(model.get())) {
        // Exact quadratic form; avoids cancellation in F(w) - F(w*).
        const Eigen::VectorXd d = w - *optimum;
        return 0.5 * d.dot(q->curvature().cwiseProduct(d));
    }
    return model->loss(w, pooled) - optimum_loss;
}

Federation build_federation(const Scenario& s, std::uint64_t replicate) {
    const long dim = s.constants.feature_dim;
    const int classes = s.dataset.classes;
    Federation fed;
    if (s.dataset.kind == DatasetKind::kIdx) {
        const auto pool = load_idx(s.dataset.idx_images, s.dataset.idx_labels);
        if (pool.dim() != dim)
            throw ValidationError("M", "IDX images have " + std::to_string(pool.dim()) + " pixels, scenario says " +
                                           std::to_string(dim));
        std::vector<long> cursor;
        for (std::size_t i = 0; i < s.devices.size(); ++i)
            fed.clean.push_back(take_partition(pool, s.devices[i].dataset_size, s.dataset.label_skew,
                                               static_cast<int>(i) % pool.classes, cursor));
    } else {
        for (std::size_t i = 0; i < s.devices.size(); ++i) {
            auto rng = seeded_rng(s.seed, "data", {i});
            fed.clean.push_back(make_synthetic(s.devices[i].dataset_size, dim, classes, s.dataset.label_skew, rng,
                                               static_cast<int>(i) % classes, s.seed));
        }
    }
    fed.pooled = concatenate(fed.clean);
    fed.model = make_model(s.model, dim, std::max(fed.pooled.classes, 2), s.constants);
    auto init_rng = seeded_rng(s.seed, "init");
    fed.initial = fed.model->initial(init_rng);
    renoise(fed, s, replicate);
    solve_optimum(fed);
    return fed;
}

void renoise(Federation& fed, const Scenario& s, std::uint64_t replicate) {
    fed.noisy.clear();
    for (std::size_t i = 0; i < fed.clean.size(); ++i) {
        auto rng = seeded_rng(s.seed, "noise", {i, replicate});
        fed.noisy.push_back(add_sensor_noise(fed.clean[i], s.devices[i].noise_var, rng));
    }
}

Eigen::VectorXd local_step(const Eigen::VectorXd& w, const LocalDataset& data, double lr, const Model& model) {
    if (!(lr > 0.0)) throw ValidationError("learning_rate", "must be positive");
    Eigen::VectorXd g = model.gradient(w, data);
    if (!g.allFinite()) throw Error("local gradient is not finite");
    return w - lr * g;
}

Eigen::VectorXd aggregate(const std::vector<Eigen::VectorXd>& local, const std::vector<int>& delivered,
                          const std::vector<long>& sizes, const Eigen::VectorXd& previous) {
    if (local.size() != delivered.size() || local.size() != sizes.size())
        throw ValidationError("devices", "models, delivery bits and dataset sizes differ in length");
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(previous.size());
    double total = 0.0;
    for (std::size_t i = 0; i < local.size(); ++i) {
        if (!delivered[i]) continue;
        acc += static_cast<double>(sizes[i]) * local[i];
        total += static_cast<double>(sizes[i]);
    }
    if (total == 0.0) return previous;
    return acc / total;
}

SimulationResult simulate(const Scenario& s, const Trajectory& trajectory, const Federation& fed, int rounds,
                          const SimOptions& opts) {
    if (rounds < 0) throw ValidationError("horizon", "rounds must be nonnegative");
    if (static_cast<long>(trajectory.waypoints.size()) * trajectory.dwell < rounds)
        throw ValidationError("horizon", "trajectory covers fewer rounds than requested");
    const std::size_t n = s.devices.size();
    const double lr = s.effective_learning_rate();
    std::vector<long> sizes;
    for (const auto& d : s.devices) sizes.push_back(d.dataset_size);

    SimulationResult out;
    Eigen::VectorXd w = fed.initial;
    out.initial_loss = fed.model->loss(w, fed.pooled);
    out.initial_gap = fed.gap(w);
    out.rounds.reserve(static_cast<std::size_t>(rounds));
    std::vector<Eigen::VectorXd> local(n);
    for (int t = 1; t <= rounds; ++t) {
        RoundRecord rec;
        rec.round = t;
        rec.drone = trajectory.position_at_round(t);
        const auto pos = s.device_positions(t);
        rec.per.resize(n);
        rec.delivered.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            rec.per[i] = effective_per(rec.drone, pos[i], s.devices[i], s.radio);
            // Common random numbers: one uniform per (device, round), compared against the PER.
            auto rng = seeded_rng(s.seed, "delivery", {i, static_cast<std::uint64_t>(t), opts.replicate});
            rec.delivered[i] = opts.force_delivery || rng.uniform() >= rec.per[i];
            local[i] = rec.delivered[i] ? local_step(w, fed.noisy[i], lr, *fed.model) : w;
        }
        w = aggregate(local, rec.delivered, sizes, w);
        rec.loss = fed.model->loss(w, fed.pooled);
        rec.accuracy = fed.model->accuracy(w, fed.pooled);
        rec.gap = fed.gap(w);
        out.rounds.push_back(std::move(rec));
    }
    out.weights = w;
    return out;
}

int rounds_to_target(const SimulationResult& r, double target) {
    for (const auto& rec : r.rounds)
        if (rec.loss <= target) return rec.round;
    return static_cast<int>(r.rounds.size()) + 1;
}

namespace {

struct Sampler {
    const Federation& fed;
    double radius;
    Rng rng;

    Eigen::VectorXd draw() {
        Eigen::VectorXd u(fed.optimum->size());
        for (long k = 0; k < u.size(); ++k) u(k) = rng.normal();
        const double n = u.norm();
        return *fed.optimum + (radius * rng.uniform() / (n > 0.0 ? n : 1.0)) * u;
    }
};

double default_radius(const Federation& fed) {
    return 2.0 * (fed.initial - *fed.optimum).norm() + 1.0;
}

}  // namespace

ConstantsEstimate estimate_constants(const Federation& fed, const EstimateOptions& opts) {
    if (!fed.optimum) throw ValidationError("model", "constants can only be estimated for the convex models");
    ConstantsEstimate est;
    auto& c = est.constants;
    c.feature_dim = fed.pooled.dim();
    if (auto* q = dynamic_cast<const QuadraticModel*>(fed.model.get())) {
        c.lipschitz = q->curvature().maxCoeff();
        c.strong_convexity = q->curvature().minCoeff();
    } else if (auto* lg = dynamic_cast<const LogisticModel*>(fed.model.get())) {
        c.lipschitz = lg->smoothness_bound(fed.pooled);
        c.strong_convexity = lg->l2();
    } else {
        throw ValidationError("model", "unsupported model");
    }
    est.radius = opts.radius > 0.0 ? opts.radius : default_radius(fed);

    // Upper envelope of max_s ||grad f_s||^2 against ||grad F||^2: least-squares slope, then
    // the intercept that covers every sampled point with a 5% margin.
    Sampler sampler{fed, est.radius, seeded_rng(opts.seed, "constants-fit")};
    std::vector<double> G, S;
    for (int k = 0; k < opts.fit_points; ++k) {
        const Eigen::VectorXd w = sampler.draw();
        G.push_back(fed.model->gradient(w, fed.pooled).squaredNorm());
        S.push_back(fed.model->sample_gradient_sq_norms(w, fed.pooled).maxCoeff());
    }
    double gm = 0.0, sm = 0.0;
    for (std::size_t k = 0; k < G.size(); ++k) {
        gm += G[k];
        sm += S[k];
    }
    gm /= static_cast<double>(G.size());
    sm /= static_cast<double>(G.size());
    double cov = 0.0, var = 0.0;
    for (std::size_t k = 0; k < G.size(); ++k) {
        cov += (G[k] - gm) * (S[k] - sm);
        var += (G[k] - gm) * (G[k] - gm);
    }
    c.c2 = var > 0.0 ? std::max(cov / var, 1e-6) : 1e-6;
    double worst = 0.0;
    for (std::size_t k = 0; k < G.size(); ++k) worst = std::max(worst, S[k] - c.c2 * G[k]);
    c.c1 = std::max(1.05 * worst, 1e-12);

    // eta: largest mixed-Hessian norm over sampled (w, sample) pairs.
    auto eta_rng = seeded_rng(opts.seed, "constants-eta");
    Sampler eta_sampler{fed, est.radius, seeded_rng(opts.seed, "constants-eta-w")};
    c.eta = 0.0;
    for (int k = 0; k < opts.eta_points; ++k) {
        const Eigen::VectorXd w = eta_sampler.draw();
        const auto row = static_cast<long>(eta_rng.below(static_cast<std::uint64_t>(fed.pooled.size())));
        c.eta = std::max(c.eta, fed.model->mixed_norm_sq(w, fed.pooled.features.row(row).transpose(),
                                                         fed.pooled.labels(row)));
    }
    return est;
}

double assumption_v_violations(const Federation& fed, const LearningConstants& c, double radius, int n,
                               std::uint64_t seed) {
    if (!fed.optimum) throw ValidationError("model", "needs a convex model");
    Sampler sampler{fed, radius > 0.0 ? radius : default_radius(fed), seeded_rng(seed, "constants-holdout")};
    int bad = 0;
    for (int k = 0; k < n; ++k) {
        const Eigen::VectorXd w = sampler.draw();
        const double G = fed.model->gradient(w, fed.pooled).squaredNorm();
        const double S = fed.model->sample_gradient_sq_norms(w, fed.pooled).maxCoeff();
        bad += S > c.c1 + c.c2 * G;
    }
    return n ? static_cast<double>(bad) / n : 0.0;
}

BoundReport check_theorem_bound(const std::vector<SimulationResult>& replicates, const std::vector<DeviceState>& devices,
                                const LearningConstants& constants) {
    BoundReport rep;
    if (replicates.empty()) return rep;
    const std::size_t T = replicates.front().rounds.size();
    rep.mean_gap.assign(T + 1, 0.0);
    rep.bound.assign(T + 1, 0.0);
    for (const auto& r : replicates) {
        if (r.rounds.size() != T) throw ValidationError("horizon", "replicates differ in length");
        rep.mean_gap[0] += r.initial_gap;
        for (std::size_t t = 0; t < T; ++t) rep.mean_gap[t + 1] += r.rounds[t].gap;
    }
    for (auto& g : rep.mean_gap) g /= static_cast<double>(replicates.size());
    for (std::size_t t = 1; t <= T; ++t) {
        const auto terms = round_terms(replicates.front().rounds[t - 1].per, devices, constants);
        rep.bound[t] = gap_step(rep.mean_gap[t - 1], terms);
        ++rep.rounds;
        rep.violations += rep.mean_gap[t] > rep.bound[t] * (1.0 + 1e-12);
    }
    return rep;
}

}  // namespace skyfed
