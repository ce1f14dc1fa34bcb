#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "equistab/action.hpp"
#include "equistab/expr.hpp"
#include "equistab/slice.hpp"
#include "equistab/symplectic.hpp"

namespace equistab {

struct IntegratorConfig {
    double step = 1e-3;
    double horizon = 1.0;
    double blowup_guard = 1e8;
    int log_every = 1; // keep every k-th state in stored trajectories
};

using Logger = std::pair<std::string, std::function<double(const Vec &)>>;

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    std::map<std::string, std::vector<double>> logs;
    bool blew_up = false;
    double stop_time = 0.0;
};

// Called after every step; return false to stop early.
using StepObserver = std::function<bool(double t, const Vec &x)>;

// Classical fixed-step RK4. The number of steps is round(horizon / step).
Trajectory integrate(const FieldFn &x, const Vec &m0, const IntegratorConfig &cfg,
                     const std::vector<Logger> &loggers = {});
// Streaming variant without storage; returns the final state.
Vec integrate_observed(const FieldFn &x, const Vec &m0, const IntegratorConfig &cfg, const StepObserver &observe,
                       bool *blew_up = nullptr, double *stop_time = nullptr);

struct InvariantCoordinates {
    std::vector<Expression> generators;

    Vec operator()(const Vec &m) const;
    int size() const { return static_cast<int>(generators.size()); }
};

double orbit_distance(const InvariantCoordinates &inv, const Vec &p, const Vec &q);

struct SeparationReport {
    int pairs = 0;            // pairs whose estimated orbit distance is >= min_orbit_distance
    double min_invariant_distance = 0.0;
    double min_orbit_distance = 0.1;
};

// Heuristic only: the orbit distance of a pair is estimated by minimizing
// |p - g q| over sampled g, which can overestimate it. A small reported
// minimum hints that the generators fail to separate some orbits.
SeparationReport invariant_separation(const InvariantCoordinates &inv, const LinearGAction &a, const Vec &center,
                                      double spread, int n_pairs, int n_group, std::uint64_t seed,
                                      double min_orbit_distance = 0.1);

enum class FieldVariant { Hamiltonian, Augmented, VerticalAugmented };

struct ConservationReport {
    double drift_h = 0.0;
    double drift_phi2 = 0.0;
    int steps = 0;
    bool blew_up = false;
};

// Integrates Xi_h, Xi_h - eta_M, or (vertical case) the projected field of
// Xi_{h^eta} on the tube's slice, and reports the largest deviation of h and
// |Phi|^2 from their initial values. For the vertical case m0 is a point on
// the slice, eta must lie in the stabilizer algebra, and `tube` is required.
ConservationReport conservation_report(const HamiltonianSystem &s, FieldVariant variant, const AlgebraVector &eta,
                                       const Vec &m0, const IntegratorConfig &cfg,
                                       const TubeModel *tube = nullptr);

double phi_norm_sq(const HamiltonianSystem &s, const Vec &m);

struct ProbeWitness {
    int sample = -1;
    double delta = 0.0;
    double time = 0.0;
    double distance = 0.0;
    Vec initial;
    Vec state;
};

struct ProbeDeltaResult {
    double delta = 0.0;
    int escaped = 0;
    double max_distance = 0.0;
};

struct ProbeResult {
    bool escaped = false;
    std::optional<ProbeWitness> witness;
    std::vector<ProbeDeltaResult> per_delta;
    int samples = 0;
    bool vacuous = false;
};

struct ProbeConfig {
    double eps = 1e-2;
    std::vector<double> deltas{1e-3};
    int n_samples = 64;
    double horizon = 1e3;
    double step = 1e-2;
    std::uint64_t seed = 1;
    int threads = 0; // 0: hardware concurrency capped by EQUISTAB_THREADS
};

// Sampled finite-horizon surrogate of stability modulo the group: escape
// means some trajectory started within invariant distance delta reached
// invariant distance above eps. The verdict comes from the smallest delta.
ProbeResult stability_probe(const FieldFn &x, const Vec &m, const InvariantCoordinates &inv, const ProbeConfig &cfg);

int probe_thread_count(int requested);

struct FlowComparison {
    double max_orbit_discrepancy = 0.0;
    int steps = 0;
};

FlowComparison isomorphic_flow_check(const FieldFn &x, const FieldFn &y, const InvariantCoordinates &inv,
                                     const Vec &m0, const IntegratorConfig &cfg);

struct CertificateReport {
    double phi_excess = 0.0; // max_t phi(t) - phi(0), clipped below by 0 in `holds`
    double f_excess = 0.0;   // max_t |f(t)| - theta(0)
    double phi_margin = 0.0; // min_t phi(0) + tol - phi(t)
    double f_margin = 0.0;   // min_t theta(0) + tol - |f(t)|
    double f_drift = 0.0;    // max_t |f(t) - f(0)|
    double theta0 = 0.0;
    bool inequalities_hold = false;
    bool f_conserved = false;
};

// Evaluates f = h^eta, phi = |Phi|^2 and theta = |f| + A |Phi| |eta| along slice
// states beta (slice coordinates) of a recentered system with h(m) = 0, Phi(m) = 0.
CertificateReport certificate_monitor(const HamiltonianSystem &s, const TubeModel &tube, const AlgebraVector &eta,
                                      const std::vector<Vec> &beta, double A, double cons_tol = 1e-6);

} // namespace equistab
