#include "equistab/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

#include "equistab/error.hpp"

namespace equistab {

namespace {

long step_count(const IntegratorConfig &cfg)
{
    if (!(cfg.step > 0.0) || !(cfg.horizon > 0.0) || cfg.step > cfg.horizon * (1.0 + 1e-12)) {
        fail(ErrorCode::PreconditionFailed, "integrator needs 0 < step <= horizon");
    }
    return std::lround(cfg.horizon / cfg.step);
}

Vec rk4_step(const FieldFn &x, const Vec &y, double h)
{
    const Vec k1 = x(y);
    const Vec k2 = x(y + 0.5 * h * k1);
    const Vec k3 = x(y + 0.5 * h * k2);
    const Vec k4 = x(y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

} // namespace

Vec integrate_observed(const FieldFn &x, const Vec &m0, const IntegratorConfig &cfg, const StepObserver &observe,
                       bool *blew_up, double *stop_time)
{
    const long n = step_count(cfg);
    Vec y = m0;
    if (blew_up) {
        *blew_up = false;
    }
    double t = 0.0;
    for (long i = 1; i <= n; ++i) {
        y = rk4_step(x, y, cfg.step);
        t = static_cast<double>(i) * cfg.step;
        if (!y.allFinite()) {
            fail(ErrorCode::NonFiniteState, "state became non-finite at t = " + std::to_string(t));
        }
        if (y.norm() > cfg.blowup_guard) {
            if (blew_up) {
                *blew_up = true;
            }
            break;
        }
        if (observe && !observe(t, y)) {
            break;
        }
    }
    if (stop_time) {
        *stop_time = t;
    }
    return y;
}

Trajectory integrate(const FieldFn &x, const Vec &m0, const IntegratorConfig &cfg, const std::vector<Logger> &loggers)
{
    Trajectory tr;
    const int every = std::max(1, cfg.log_every);
    auto record = [&](double t, const Vec &y) {
        tr.times.push_back(t);
        tr.states.push_back(y);
        for (const auto &[name, fn] : loggers) {
            tr.logs[name].push_back(fn(y));
        }
    };
    record(0.0, m0);
    long i = 0;
    integrate_observed(
        x, m0, cfg,
        [&](double t, const Vec &y) {
            ++i;
            if (i % every == 0) {
                record(t, y);
            }
            return true;
        },
        &tr.blew_up, &tr.stop_time);
    return tr;
}

Vec InvariantCoordinates::operator()(const Vec &m) const
{
    Vec out(static_cast<Eigen::Index>(generators.size()));
    for (std::size_t i = 0; i < generators.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = generators[i].eval(m);
    }
    return out;
}

double orbit_distance(const InvariantCoordinates &inv, const Vec &p, const Vec &q)
{
    return (inv(p) - inv(q)).norm();
}

SeparationReport invariant_separation(const InvariantCoordinates &inv, const LinearGAction &a, const Vec &center,
                                      double spread, int n_pairs, int n_group, std::uint64_t seed,
                                      double min_orbit_distance)
{
    SeparationReport out;
    out.min_orbit_distance = min_orbit_distance;
    out.min_invariant_distance = std::numeric_limits<double>::infinity();
    Sampler rng(seed);
    const LieGroup &g = a.group();
    for (int i = 0; i < n_pairs; ++i) {
        const Vec p = center + rng.normal(center.size(), spread);
        const Vec q = center + rng.normal(center.size(), spread);
        double d = (p - q).norm();
        for (int k = 0; k < n_group && d >= min_orbit_distance; ++k) {
            d = std::min(d, (p - a.act(g.exp(g.random_element(rng, {}, 3.0)), q)).norm());
        }
        if (d < min_orbit_distance) {
            continue;
        }
        ++out.pairs;
        out.min_invariant_distance = std::min(out.min_invariant_distance, orbit_distance(inv, p, q));
    }
    if (out.pairs == 0) {
        out.min_invariant_distance = 0.0;
    }
    return out;
}

double phi_norm_sq(const HamiltonianSystem &s, const Vec &m)
{
    const double n = s.group().dual_norm(s.phi(m));
    return n * n;
}

ConservationReport conservation_report(const HamiltonianSystem &s, FieldVariant variant, const AlgebraVector &eta,
                                       const Vec &m0, const IntegratorConfig &cfg, const TubeModel *tube)
{
    ConservationReport out;
    const VectorFieldHandle xh = hamiltonian_field(s);
    FieldFn field;
    std::function<Vec(const Vec &)> to_ambient = [](const Vec &y) { return y; };
    switch (variant) {
    case FieldVariant::Hamiltonian: field = xh.field; break;
    case FieldVariant::Augmented: field = augment_field(s.action, xh, eta).field; break;
    case FieldVariant::VerticalAugmented: {
        if (tube == nullptr) {
            fail(ErrorCode::PreconditionFailed, "vertical conservation needs a tube");
        }
        if (eta.coords.norm() > 0.0) {
            // eta must lie in the stabilizer algebra of the tube.
            const Mat k = tube->stabilizer;
            const Vec resid = eta.coords - k * (k.transpose() * eta.coords);
            if (resid.norm() > 1e-9 * (1.0 + eta.coords.norm())) {
                fail(ErrorCode::PreconditionFailed, "vertical conservation needs eta in the stabilizer algebra");
            }
        }
        const VectorFieldHandle aug = augment_field(s.action, xh, eta);
        field = project_P(*tube, aug);
        const TubeModel t = *tube;
        to_ambient = [t](const Vec &v) { return t.embed(v); };
        break;
    }
    }
    const Vec p0 = to_ambient(m0);
    const double h0 = s.h.eval(p0);
    const double f0 = phi_norm_sq(s, p0);
    bool blew = false;
    long steps = 0;
    integrate_observed(
        field, m0, cfg,
        [&](double, const Vec &y) {
            const Vec p = to_ambient(y);
            out.drift_h = std::max(out.drift_h, std::abs(s.h.eval(p) - h0));
            out.drift_phi2 = std::max(out.drift_phi2, std::abs(phi_norm_sq(s, p) - f0));
            ++steps;
            return true;
        },
        &blew);
    out.steps = static_cast<int>(steps);
    out.blew_up = blew;
    return out;
}

int probe_thread_count(int requested)
{
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) {
        n = 1;
    }
    if (const char *env = std::getenv("EQUISTAB_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) {
            n = std::min(n, cap);
        }
    }
    return n;
}

namespace {

struct SampleOutcome {
    bool escaped = false;
    double max_distance = 0.0;
    double time = 0.0;
    Vec initial;
    Vec state;
};

SampleOutcome run_sample(const FieldFn &x, const Vec &m, const InvariantCoordinates &inv, const Vec &inv_m,
                         double eps, double delta, const IntegratorConfig &icfg, std::uint64_t seed, int index,
                         int delta_index)
{
    Sampler rng(seed, static_cast<std::uint64_t>(delta_index) * 1000003ULL + static_cast<std::uint64_t>(index));
    const Vec dir = rng.unit(m.size());
    double r = delta * rng.uniform();
    Vec start = m + r * dir;
    for (int k = 0; k < 200 && (inv(start) - inv_m).norm() > delta; ++k) {
        r *= 0.5;
        start = m + r * dir;
    }
    SampleOutcome out;
    out.initial = start;
    out.state = start;
    try {
        bool blew = false;
        integrate_observed(
            x, start, icfg,
            [&](double t, const Vec &y) {
                const double dist = (inv(y) - inv_m).norm();
                out.max_distance = std::max(out.max_distance, dist);
                if (dist > eps) {
                    out.escaped = true;
                    out.time = t;
                    out.state = y;
                    return false;
                }
                return true;
            },
            &blew);
        if (blew && !out.escaped) {
            out.escaped = true;
            out.max_distance = std::numeric_limits<double>::infinity();
        }
    } catch (const Error &e) {
        if (e.code() != ErrorCode::NonFiniteState && e.code() != ErrorCode::DomainError) {
            throw;
        }
        // Collapse into a singularity counts as leaving every neighbourhood.
        out.escaped = true;
        out.max_distance = std::numeric_limits<double>::infinity();
    }
    return out;
}

} // namespace

ProbeResult stability_probe(const FieldFn &x, const Vec &m, const InvariantCoordinates &inv, const ProbeConfig &cfg)
{
    ProbeResult res;
    res.samples = cfg.n_samples;
    if (cfg.n_samples <= 0 || cfg.deltas.empty()) {
        res.vacuous = true;
        return res;
    }
    std::vector<double> deltas = cfg.deltas;
    std::sort(deltas.begin(), deltas.end(), std::greater<>());
    const Vec inv_m = inv(m);
    IntegratorConfig icfg;
    icfg.step = cfg.step;
    icfg.horizon = cfg.horizon;
    const int threads = std::min(probe_thread_count(cfg.threads), cfg.n_samples);

    for (std::size_t di = 0; di < deltas.size(); ++di) {
        const double delta = deltas[di];
        std::vector<SampleOutcome> outcomes(static_cast<std::size_t>(cfg.n_samples));
        std::atomic<int> next{0};
        std::mutex err_mutex;
        std::exception_ptr first_error;
        auto worker = [&]() {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= cfg.n_samples) {
                    return;
                }
                try {
                    outcomes[static_cast<std::size_t>(i)] =
                        run_sample(x, m, inv, inv_m, cfg.eps, delta, icfg, cfg.seed, i, static_cast<int>(di));
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                }
            }
        };
        if (threads <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < threads; ++t) {
                pool.emplace_back(worker);
            }
            for (auto &th : pool) {
                th.join();
            }
        }
        if (first_error) {
            std::rethrow_exception(first_error);
        }
        ProbeDeltaResult dr;
        dr.delta = delta;
        std::optional<ProbeWitness> witness;
        for (int i = 0; i < cfg.n_samples; ++i) {
            const SampleOutcome &o = outcomes[static_cast<std::size_t>(i)];
            dr.max_distance = std::max(dr.max_distance, o.max_distance);
            if (o.escaped) {
                ++dr.escaped;
                if (!witness) {
                    witness = ProbeWitness{i, delta, o.time, o.max_distance, o.initial, o.state};
                }
            }
        }
        res.per_delta.push_back(dr);
        if (di + 1 == deltas.size()) {
            res.escaped = dr.escaped > 0;
            res.witness = witness;
        }
    }
    return res;
}

FlowComparison isomorphic_flow_check(const FieldFn &x, const FieldFn &y, const InvariantCoordinates &inv,
                                     const Vec &m0, const IntegratorConfig &cfg)
{
    std::vector<Vec> a;
    std::vector<Vec> b;
    integrate_observed(x, m0, cfg, [&](double, const Vec &s) {
        a.push_back(inv(s));
        return true;
    });
    integrate_observed(y, m0, cfg, [&](double, const Vec &s) {
        b.push_back(inv(s));
        return true;
    });
    FlowComparison out;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        out.max_orbit_discrepancy = std::max(out.max_orbit_discrepancy, (a[i] - b[i]).norm());
    }
    if (a.size() != b.size()) {
        out.max_orbit_discrepancy = std::numeric_limits<double>::infinity();
    }
    out.steps = static_cast<int>(n);
    return out;
}

CertificateReport certificate_monitor(const HamiltonianSystem &s, const TubeModel &tube, const AlgebraVector &eta,
                                      const std::vector<Vec> &beta, double A, double cons_tol)
{
    CertificateReport out;
    if (beta.empty()) {
        out.inequalities_hold = true;
        out.f_conserved = true;
        return out;
    }
    const Expression f = augmented_hamiltonian(s, eta);
    const double eta_norm = s.group().norm(eta);
    const Vec p0 = tube.embed(beta.front());
    const double f0 = f.eval(p0);
    const double phi0 = phi_norm_sq(s, p0);
    out.theta0 = std::abs(f0) + A * std::sqrt(phi0) * eta_norm;
    out.phi_margin = std::numeric_limits<double>::infinity();
    out.f_margin = std::numeric_limits<double>::infinity();
    out.phi_excess = -std::numeric_limits<double>::infinity();
    out.f_excess = -std::numeric_limits<double>::infinity();
    for (const auto &v : beta) {
        const Vec p = tube.embed(v);
        const double fv = f.eval(p);
        const double phi = phi_norm_sq(s, p);
        out.phi_excess = std::max(out.phi_excess, phi - phi0);
        out.f_excess = std::max(out.f_excess, std::abs(fv) - out.theta0);
        out.phi_margin = std::min(out.phi_margin, phi0 + cons_tol - phi);
        out.f_margin = std::min(out.f_margin, out.theta0 + cons_tol - std::abs(fv));
        out.f_drift = std::max(out.f_drift, std::abs(fv - f0));
    }
    out.inequalities_hold = out.phi_margin >= 0.0 && out.f_margin >= 0.0;
    out.f_conserved = out.f_drift <= cons_tol;
    return out;
}

} // namespace equistab
